import { describe, expect, it } from 'vitest'

import { featureFileBytes, parseFeatureFile, parseProposalsJsonl, proposalsJsonl } from '../src/formats.js'
import { l2Normalize } from '../src/image.js'
import type { Detection } from '../src/models.js'

const someDetections: Detection[] = [
  { box: { x0: 4, y0: 8, x1: 36, y1: 40 }, confidence: 0.91 },
  { box: { x0: 0, y0: 0, x1: 16, y1: 16 }, confidence: 0.05 },
]

describe('proposals jsonl', () => {
  it('writes one record per image sorted by id and round-trips', () => {
    const byImage = new Map<string, Detection[]>([
      ['img_b', someDetections],
      ['img_a', []],
    ])
    const text = proposalsJsonl(byImage)
    const lines = text.trim().split('\n')
    expect(lines).toHaveLength(2)
    expect(JSON.parse(lines[0]).image_id).toBe('img_a')
    expect(JSON.parse(lines[0]).proposals).toEqual([])
    const first = JSON.parse(lines[1]).proposals[0]
    expect(first).toEqual({ confidence: 0.91, source: 'external', x0: 4, x1: 36, y0: 8, y1: 40 })

    const parsed = parseProposalsJsonl(text)
    expect([...parsed.keys()]).toEqual(['img_a', 'img_b'])
    expect(parsed.get('img_b')![0].box).toEqual(someDetections[0].box)
  })

  it('empty image set produces an empty file', () => {
    expect(proposalsJsonl(new Map())).toBe('')
  })

  it('rejects malformed lines', () => {
    expect(() => parseProposalsJsonl('not json\n')).toThrow(/line 1/)
    expect(() => parseProposalsJsonl('{"proposals": []}\n')).toThrow(/image_id/)
  })
})

describe('feature file', () => {
  const vec = (seed: number, dim = 32) =>
    l2Normalize(Float64Array.from({ length: dim }, (_, i) => Math.sin(seed + i) + 1.5))

  it('round-trips records with dimension and order preserved', () => {
    const records = [
      { imageId: 'ref_0000', box: { x0: 1, y0: 2, x1: 9, y1: 11 }, vector: vec(1) },
      { imageId: 'qry_0000', box: { x0: 0, y0: 0, x1: 5, y1: 5 }, vector: vec(2) },
    ]
    const bytes = featureFileBytes(records)
    expect(bytes.subarray(0, 8).toString('latin1')).toBe('RLFEAT01')
    const parsed = parseFeatureFile(bytes)
    expect(parsed.dimension).toBe(32)
    expect(parsed.records.map((r) => r.imageId)).toEqual(['ref_0000', 'qry_0000'])
    expect(parsed.records[0].box).toEqual({ x0: 1, y0: 2, x1: 9, y1: 11 })
    for (const [i, record] of parsed.records.entries()) {
      for (let j = 0; j < 32; j++) {
        expect(Math.abs(record.vector[j] - records[i].vector[j])).toBeLessThan(1e-6)
      }
    }
  })

  it('aborts on dimension drift within one file', () => {
    const records = [
      { imageId: 'a', box: { x0: 0, y0: 0, x1: 2, y1: 2 }, vector: vec(1, 16) },
      { imageId: 'b', box: { x0: 0, y0: 0, x1: 2, y1: 2 }, vector: vec(2, 32) },
    ]
    expect(() => featureFileBytes(records)).toThrow(/dimension drift/)
  })

  it('rejects an empty record set', () => {
    expect(() => featureFileBytes([])).toThrow(/at least one/)
  })
})
