/** Golden contract: fresh extraction must reproduce the committed fixtures,
 * and those fixtures must satisfy the detection pipeline's file schemas. */

import { spawnSync } from 'node:child_process'
import { readFileSync, readdirSync } from 'node:fs'
import { join } from 'node:path'
import { fileURLToPath } from 'node:url'

import { describe, expect, it } from 'vitest'

import {
  AdapterConfig,
  DEFAULT_CANONICAL_SIZE,
  DEFAULT_THRESHOLD,
  extractFeatures,
  extractProposals,
} from '../src/extract.js'
import { featureFileBytes, parseFeatureFile, proposalsJsonl } from '../src/formats.js'
import { DETECTOR_ID, ENCODER_ID } from '../src/models.js'

const FIXTURES = fileURLToPath(new URL('../fixtures', import.meta.url))
const REPO_ROOT = fileURLToPath(new URL('../..', import.meta.url))

function fixtureConfig(): AdapterConfig {
  return {
    detector: DETECTOR_ID,
    encoder: ENCODER_ID,
    encoderWeights: join(FIXTURES, 'encoder-weights.bin'),
    confidenceThreshold: DEFAULT_THRESHOLD,
    canonicalSize: DEFAULT_CANONICAL_SIZE,
  }
}

function datasetImages(): string[] {
  const dir = join(FIXTURES, 'dataset')
  return readdirSync(dir)
    .filter((name) => name.endsWith('.ppm'))
    .sort()
    .map((name) => join(dir, name))
}

describe('golden fixtures', () => {
  it('fresh proposal extraction reproduces proposals.jsonl byte for byte', () => {
    const byImage = extractProposals(datasetImages(), fixtureConfig())
    const expected = readFileSync(join(FIXTURES, 'proposals.jsonl'), 'utf-8')
    expect(proposalsJsonl(byImage)).toBe(expected)
  })

  it('fresh feature extraction reproduces features.bin byte for byte', () => {
    const cfg = fixtureConfig()
    const byImage = extractProposals(datasetImages(), cfg)
    const records = extractFeatures(datasetImages(), byImage, cfg)
    const expected = readFileSync(join(FIXTURES, 'features.bin'))
    expect(featureFileBytes(records).equals(expected)).toBe(true)
  })

  it('fixture features are unit-norm with one shared dimension', () => {
    const parsed = parseFeatureFile(readFileSync(join(FIXTURES, 'features.bin')))
    expect(parsed.records.length).toBeGreaterThan(0)
    for (const record of parsed.records) {
      expect(record.vector.length).toBe(parsed.dimension)
      let norm = 0
      for (const v of record.vector) norm += v * v
      expect(Math.abs(Math.sqrt(norm) - 1)).toBeLessThan(1e-6)
    }
  })

  it('threshold 1.0 filters every box and still writes records', () => {
    const cfg = { ...fixtureConfig(), confidenceThreshold: 1.0 }
    const byImage = extractProposals(datasetImages(), cfg)
    expect(byImage.size).toBe(2)
    for (const detections of byImage.values()) {
      expect(detections.length).toBeLessThanOrEqual(1) // only exact-1.0 confidences survive
    }
    const text = proposalsJsonl(byImage)
    expect(text.trim().split('\n')).toHaveLength(2)
  })
})

describe('primary pipeline parses the fixtures', () => {
  const probe = spawnSync('python3', ['-c', 'import locdet'], { cwd: REPO_ROOT })
  const available = probe.status === 0

  it.skipIf(!available)('both files load through the pipeline readers', () => {
    const script = [
      'from locdet.geometry import load_proposals_file',
      'from locdet.descriptor import load_external_features',
      `props = load_proposals_file(r'${join(FIXTURES, 'proposals.jsonl')}')`,
      `feats = load_external_features(r'${join(FIXTURES, 'features.bin')}')`,
      'assert len(props) == 2 and len(feats.features) > 0',
      'print(len(props), len(feats.features), feats.dimension)',
    ].join('\n')
    const run = spawnSync('python3', ['-c', script], { cwd: REPO_ROOT, encoding: 'utf-8' })
    expect(run.stderr).toBe('')
    expect(run.status).toBe(0)
    expect(run.stdout.trim()).toMatch(/^2 \d+ \d+$/)
  })
})
