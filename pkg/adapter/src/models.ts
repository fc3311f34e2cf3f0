/** Pretrained models wrapped by the adapter: an objectness detector and a
 * convolutional encoder. Both are addressed by model id; the encoder's weights
 * ship as a committed fixture so extraction runs fully offline. */

import { readFileSync } from 'node:fs'

import { Box, Gray, crop, l2Normalize, resizeBilinear } from './image.js'

export const DETECTOR_ID = 'objectness-grad-v1'
export const ENCODER_ID = 'conv3-s2-v1'

export const WEIGHTS_MAGIC = 'RLENC001'

export interface Detection {
  box: Box
  confidence: number
}

export interface Detector {
  id: string
  detect(image: Gray): Detection[]
}

export interface Encoder {
  id: string
  dimension: number
  encode(image: Gray, box: Box, canonicalSize: number): Float64Array
}

// ---------------------------------------------------------------------------
// detector: multi-scale windows scored by mean gradient energy
// ---------------------------------------------------------------------------

function gradientEnergy(image: Gray): Gray {
  const { width, height, data } = image
  const out = new Float64Array(width * height)
  for (let y = 1; y < height - 1; y++) {
    for (let x = 1; x < width - 1; x++) {
      const i = y * width + x
      out[i] = Math.abs(data[i + 1] - data[i - 1]) + Math.abs(data[i + width] - data[i - width])
    }
  }
  return { width, height, data: out }
}

function integral(image: Gray): Float64Array {
  const { width, height, data } = image
  const sums = new Float64Array((width + 1) * (height + 1))
  for (let y = 0; y < height; y++) {
    let row = 0
    for (let x = 0; x < width; x++) {
      row += data[y * width + x]
      sums[(y + 1) * (width + 1) + (x + 1)] = sums[y * (width + 1) + (x + 1)] + row
    }
  }
  return sums
}

function boxMean(sums: Float64Array, width: number, box: Box): number {
  const w = width + 1
  const total =
    sums[box.y1 * w + box.x1] - sums[box.y0 * w + box.x1] -
    sums[box.y1 * w + box.x0] + sums[box.y0 * w + box.x0]
  return total / ((box.x1 - box.x0) * (box.y1 - box.y0))
}

function overlapRatio(a: Box, b: Box): number {
  const x0 = Math.max(a.x0, b.x0)
  const y0 = Math.max(a.y0, b.y0)
  const x1 = Math.min(a.x1, b.x1)
  const y1 = Math.min(a.y1, b.y1)
  if (x0 >= x1 || y0 >= y1) return 0
  const inter = (x1 - x0) * (y1 - y0)
  const areaA = (a.x1 - a.x0) * (a.y1 - a.y0)
  const areaB = (b.x1 - b.x0) * (b.y1 - b.y0)
  return inter / (areaA + areaB - inter)
}

class GradientObjectness implements Detector {
  id = DETECTOR_ID
  maxBoxes = 12

  detect(image: Gray): Detection[] {
    const energy = integral(gradientEnergy(image))
    const short = Math.min(image.width, image.height)
    const scales = [short >> 3, short >> 2, (3 * short) >> 3].filter((s) => s >= 8)
    const candidates: Detection[] = []
    let best = 0
    for (const size of scales) {
      const stride = Math.max(size >> 1, 4)
      for (let y0 = 0; y0 + size <= image.height; y0 += stride) {
        for (let x0 = 0; x0 + size <= image.width; x0 += stride) {
          const box = { x0, y0, x1: x0 + size, y1: y0 + size }
          const score = boxMean(energy, image.width, box)
          best = Math.max(best, score)
          candidates.push({ box, confidence: score })
        }
      }
    }
    if (best <= 0) return []
    candidates.sort((a, b) => b.confidence - a.confidence || a.box.y0 - b.box.y0 || a.box.x0 - b.box.x0)
    const kept: Detection[] = []
    for (const cand of candidates) {
      if (kept.length >= this.maxBoxes) break
      if (kept.every((k) => overlapRatio(k.box, cand.box) < 0.45)) {
        const confidence = Math.round((cand.confidence / best) * 1e4) / 1e4
        kept.push({ box: cand.box, confidence })
      }
    }
    return kept
  }
}

// ---------------------------------------------------------------------------
// encoder: three stride-2 3x3 convolutions, ReLU, average-pooled and flattened
// ---------------------------------------------------------------------------

const CHANNELS = [1, 8, 16, 32]
const POOL = 4

export function encoderWeightCount(): number {
  let n = 0
  for (let layer = 0; layer < 3; layer++) {
    n += CHANNELS[layer + 1] * CHANNELS[layer] * 9 + CHANNELS[layer + 1]
  }
  return n
}

interface Feature {
  channels: number
  size: number
  data: Float64Array // [c][y][x]
}

function convStride2(input: Feature, weights: Float64Array, offset: number, outChannels: number): { out: Feature; offset: number } {
  const inC = input.channels
  const inS = input.size
  const outS = inS >> 1
  const out = new Float64Array(outChannels * outS * outS)
  const kernelBase = offset
  const biasBase = offset + outChannels * inC * 9
  for (let oc = 0; oc < outChannels; oc++) {
    const bias = weights[biasBase + oc]
    for (let oy = 0; oy < outS; oy++) {
      for (let ox = 0; ox < outS; ox++) {
        let acc = bias
        const cy = oy * 2
        const cx = ox * 2
        for (let ic = 0; ic < inC; ic++) {
          const wBase = kernelBase + (oc * inC + ic) * 9
          const plane = ic * inS * inS
          for (let ky = -1; ky <= 1; ky++) {
            const yy = Math.min(Math.max(cy + ky, 0), inS - 1)
            for (let kx = -1; kx <= 1; kx++) {
              const xx = Math.min(Math.max(cx + kx, 0), inS - 1)
              acc += weights[wBase + (ky + 1) * 3 + (kx + 1)] * input.data[plane + yy * inS + xx]
            }
          }
        }
        out[oc * outS * outS + oy * outS + ox] = acc > 0 ? acc : 0 // ReLU
      }
    }
  }
  return { out: { channels: outChannels, size: outS, data: out }, offset: biasBase + outChannels }
}

class ConvEncoder implements Encoder {
  id = ENCODER_ID
  dimension: number
  private weights: Float64Array

  constructor(weights: Float64Array, canonicalSize: number) {
    this.weights = weights
    const finalSize = canonicalSize >> 3 // three stride-2 layers
    this.dimension = CHANNELS[3] * (finalSize / POOL) * (finalSize / POOL)
  }

  encode(image: Gray, box: Box, canonicalSize: number): Float64Array {
    const resized = resizeBilinear(crop(image, box), canonicalSize, canonicalSize)
    const scaled = new Float64Array(resized.data.length)
    for (let i = 0; i < scaled.length; i++) scaled[i] = resized.data[i] / 255 - 0.5
    let feature: Feature = { channels: 1, size: canonicalSize, data: scaled }
    let offset = 0
    for (let layer = 0; layer < 3; layer++) {
      const step = convStride2(feature, this.weights, offset, CHANNELS[layer + 1])
      feature = step.out
      offset = step.offset
    }
    // average-pool POOL x POOL blocks, flatten channel-major
    const pooled = feature.size / POOL
    const vec = new Float64Array(feature.channels * pooled * pooled)
    for (let c = 0; c < feature.channels; c++) {
      const plane = c * feature.size * feature.size
      for (let py = 0; py < pooled; py++) {
        for (let px = 0; px < pooled; px++) {
          let acc = 0
          for (let y = py * POOL; y < (py + 1) * POOL; y++) {
            for (let x = px * POOL; x < (px + 1) * POOL; x++) {
              acc += feature.data[plane + y * feature.size + x]
            }
          }
          vec[c * pooled * pooled + py * pooled + px] = acc / (POOL * POOL)
        }
      }
    }
    return l2Normalize(vec)
  }
}

// ---------------------------------------------------------------------------
// loading
// ---------------------------------------------------------------------------

export function loadDetector(id: string): Detector {
  if (id !== DETECTOR_ID) {
    throw new Error(`unknown detector model ${JSON.stringify(id)} (available: ${DETECTOR_ID})`)
  }
  return new GradientObjectness()
}

export function loadEncoderWeights(path: string): Float64Array {
  let raw: Buffer
  try {
    raw = readFileSync(path)
  } catch (err) {
    throw new Error(`cannot load encoder weights from ${path}: ${(err as Error).message}`)
  }
  if (raw.length < 12 || raw.subarray(0, 8).toString('latin1') !== WEIGHTS_MAGIC) {
    throw new Error(`${path}: bad weights magic`)
  }
  const count = raw.readUInt32LE(8)
  if (count !== encoderWeightCount() || raw.length !== 12 + 4 * count) {
    throw new Error(`${path}: expected ${encoderWeightCount()} weights, header says ${count}`)
  }
  const weights = new Float64Array(count)
  for (let i = 0; i < count; i++) weights[i] = raw.readFloatLE(12 + 4 * i)
  return weights
}

export function loadEncoder(id: string, weightsPath: string, canonicalSize: number): Encoder {
  if (id !== ENCODER_ID) {
    throw new Error(`unknown encoder model ${JSON.stringify(id)} (available: ${ENCODER_ID})`)
  }
  if (canonicalSize % 8 !== 0 || (canonicalSize >> 3) % POOL !== 0) {
    throw new Error(`canonical size ${canonicalSize} must be divisible by ${8 * POOL}`)
  }
  return new ConvEncoder(loadEncoderWeights(weightsPath), canonicalSize)
}
