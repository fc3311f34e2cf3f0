/** Writers for the two ingestion file formats the detection pipeline accepts. */

import { writeFileSync } from 'node:fs'

import type { Box } from './image.js'
import type { Detection } from './models.js'

export const FEATURE_MAGIC = 'RLFEAT01'

/** One JSON record per image, sorted by image id, alphabetical keys. */
export function proposalsJsonl(byImage: Map<string, Detection[]>): string {
  const lines: string[] = []
  for (const imageId of [...byImage.keys()].sort()) {
    const proposals = (byImage.get(imageId) ?? []).map((d) => ({
      confidence: d.confidence,
      source: 'external',
      x0: d.box.x0,
      x1: d.box.x1,
      y0: d.box.y0,
      y1: d.box.y1,
    }))
    lines.push(JSON.stringify({ image_id: imageId, proposals }))
  }
  return lines.length ? lines.join('\n') + '\n' : ''
}

export function writeProposalsFile(path: string, byImage: Map<string, Detection[]>): void {
  writeFileSync(path, proposalsJsonl(byImage))
}

export function parseProposalsJsonl(text: string): Map<string, Detection[]> {
  const byImage = new Map<string, Detection[]>()
  const lines = text.split('\n').filter((line) => line.trim().length > 0)
  for (const [index, line] of lines.entries()) {
    let record: { image_id?: string; proposals?: Array<Record<string, number | string>> }
    try {
      record = JSON.parse(line)
    } catch (err) {
      throw new Error(`proposals line ${index + 1}: invalid JSON: ${(err as Error).message}`)
    }
    if (typeof record.image_id !== 'string' || !Array.isArray(record.proposals)) {
      throw new Error(`proposals line ${index + 1}: record needs image_id and proposals`)
    }
    byImage.set(
      record.image_id,
      record.proposals.map((p) => ({
        box: { x0: p.x0 as number, y0: p.y0 as number, x1: p.x1 as number, y1: p.y1 as number },
        confidence: (p.confidence as number) ?? 1.0,
      })),
    )
  }
  return byImage
}

export interface FeatureRecord {
  imageId: string
  box: Box
  vector: Float64Array
}

/** Binary layout: magic, u32 dimension, u32 count, then length-prefixed image
 * id, four i32 box coordinates, and the vector as little-endian f32. */
export function featureFileBytes(records: FeatureRecord[]): Buffer {
  if (records.length === 0) throw new Error('feature file needs at least one record')
  const dim = records[0].vector.length
  const chunks: Buffer[] = []
  const header = Buffer.alloc(16)
  header.write(FEATURE_MAGIC, 0, 'latin1')
  header.writeUInt32LE(dim, 8)
  header.writeUInt32LE(records.length, 12)
  chunks.push(header)
  for (const record of records) {
    if (record.vector.length !== dim) {
      throw new Error(
        `feature dimension drift: ${record.imageId} has ${record.vector.length}, expected ${dim}`,
      )
    }
    const id = Buffer.from(record.imageId, 'utf-8')
    const head = Buffer.alloc(4 + id.length + 16)
    head.writeUInt32LE(id.length, 0)
    id.copy(head, 4)
    head.writeInt32LE(record.box.x0, 4 + id.length)
    head.writeInt32LE(record.box.y0, 8 + id.length)
    head.writeInt32LE(record.box.x1, 12 + id.length)
    head.writeInt32LE(record.box.y1, 16 + id.length)
    chunks.push(head)
    const values = Buffer.alloc(4 * dim)
    for (let i = 0; i < dim; i++) values.writeFloatLE(record.vector[i], 4 * i)
    chunks.push(values)
  }
  return Buffer.concat(chunks)
}

export function writeFeatureFile(path: string, records: FeatureRecord[]): void {
  writeFileSync(path, featureFileBytes(records))
}

/** Reader used by the adapter's own tests. */
export function parseFeatureFile(raw: Buffer): { dimension: number; records: FeatureRecord[] } {
  if (raw.length < 16 || raw.subarray(0, 8).toString('latin1') !== FEATURE_MAGIC) {
    throw new Error('bad feature file magic')
  }
  const dimension = raw.readUInt32LE(8)
  const count = raw.readUInt32LE(12)
  let offset = 16
  const records: FeatureRecord[] = []
  for (let i = 0; i < count; i++) {
    const idLen = raw.readUInt32LE(offset)
    offset += 4
    const imageId = raw.subarray(offset, offset + idLen).toString('utf-8')
    offset += idLen
    const box = {
      x0: raw.readInt32LE(offset),
      y0: raw.readInt32LE(offset + 4),
      x1: raw.readInt32LE(offset + 8),
      y1: raw.readInt32LE(offset + 12),
    }
    offset += 16
    const vector = new Float64Array(dimension)
    for (let j = 0; j < dimension; j++) vector[j] = raw.readFloatLE(offset + 4 * j)
    offset += 4 * dimension
    records.push({ imageId, box, vector })
  }
  if (offset !== raw.length) throw new Error(`${raw.length - offset} trailing bytes`)
  return { dimension, records }
}
