/** Extraction entry points: images in, ingestion files out. */

import { basename } from 'node:path'

import { proposalsJsonl, writeFeatureFile, writeProposalsFile, FeatureRecord } from './formats.js'
import { Gray, toGray } from './image.js'
import { Detection, loadDetector, loadEncoder } from './models.js'
import { readPpm } from './ppm.js'

export interface AdapterConfig {
  detector: string
  encoder: string
  encoderWeights: string
  confidenceThreshold: number
  canonicalSize: number
}

export const DEFAULT_THRESHOLD = 0.05
export const DEFAULT_CANONICAL_SIZE = 256

export function imageIdOf(path: string): string {
  return basename(path).replace(/\.[^.]+$/, '')
}

export function loadGray(path: string): Gray {
  return toGray(readPpm(path))
}

export function extractProposals(
  imagePaths: string[],
  cfg: AdapterConfig,
): Map<string, Detection[]> {
  if (cfg.confidenceThreshold < 0 || cfg.confidenceThreshold > 1) {
    throw new Error(`confidence threshold must be in [0, 1], got ${cfg.confidenceThreshold}`)
  }
  const detector = loadDetector(cfg.detector)
  const byImage = new Map<string, Detection[]>()
  for (const path of imagePaths) {
    const detections = detector
      .detect(loadGray(path))
      .filter((d) => d.confidence >= cfg.confidenceThreshold)
    byImage.set(imageIdOf(path), detections)
  }
  return byImage
}

export function extractFeatures(
  imagePaths: string[],
  proposalsByImage: Map<string, Detection[]>,
  cfg: AdapterConfig,
): FeatureRecord[] {
  const encoder = loadEncoder(cfg.encoder, cfg.encoderWeights, cfg.canonicalSize)
  const records: FeatureRecord[] = []
  for (const path of imagePaths) {
    const imageId = imageIdOf(path)
    const detections = proposalsByImage.get(imageId)
    if (detections === undefined) continue
    const gray = loadGray(path)
    for (const det of detections) {
      const vector = encoder.encode(gray, det.box, cfg.canonicalSize)
      if (vector.length !== encoder.dimension) {
        throw new Error(`encoder dimension drift on ${imageId}: ${vector.length}`)
      }
      records.push({ imageId, box: det.box, vector })
    }
  }
  return records
}

export function runExtractProposals(imagePaths: string[], outPath: string, cfg: AdapterConfig): number {
  const byImage = extractProposals(imagePaths, cfg)
  writeProposalsFile(outPath, byImage)
  let total = 0
  for (const detections of byImage.values()) total += detections.length
  return total
}

export function runExtractFeatures(
  imagePaths: string[],
  proposalsByImage: Map<string, Detection[]>,
  outPath: string,
  cfg: AdapterConfig,
): number {
  const records = extractFeatures(imagePaths, proposalsByImage, cfg)
  writeFeatureFile(outPath, records)
  return records.length
}

export { proposalsJsonl }
