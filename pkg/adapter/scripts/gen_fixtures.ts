/** Regenerate the committed golden fixtures from the fixture dataset.
 *
 * Runs the full extraction over fixtures/dataset and writes proposals.jsonl
 * plus features.bin. Output is deterministic; the contract tests compare a
 * fresh extraction against these files byte for byte.
 */

import { readdirSync } from 'node:fs'
import { join } from 'node:path'
import { fileURLToPath } from 'node:url'

import {
  AdapterConfig,
  DEFAULT_CANONICAL_SIZE,
  DEFAULT_THRESHOLD,
  extractProposals,
  runExtractFeatures,
} from '../src/extract.js'
import { writeProposalsFile } from '../src/formats.js'
import { DETECTOR_ID, ENCODER_ID } from '../src/models.js'

const FIXTURES = fileURLToPath(new URL('../../fixtures', import.meta.url))

function main(): void {
  const datasetDir = join(FIXTURES, 'dataset')
  const images = readdirSync(datasetDir)
    .filter((name) => name.endsWith('.ppm'))
    .sort()
    .map((name) => join(datasetDir, name))
  const cfg: AdapterConfig = {
    detector: DETECTOR_ID,
    encoder: ENCODER_ID,
    encoderWeights: join(FIXTURES, 'encoder-weights.bin'),
    confidenceThreshold: DEFAULT_THRESHOLD,
    canonicalSize: DEFAULT_CANONICAL_SIZE,
  }
  const byImage = extractProposals(images, cfg)
  writeProposalsFile(join(FIXTURES, 'proposals.jsonl'), byImage)
  let total = 0
  for (const detections of byImage.values()) total += detections.length
  console.log(`proposals: ${total} boxes over ${byImage.size} images`)
  const records = runExtractFeatures(images, byImage, join(FIXTURES, 'features.bin'), cfg)
  console.log(`features: ${records} records`)
}

main()
