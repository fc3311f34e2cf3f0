/** Grayscale rasters, cropping, and bilinear resampling. */

import type { Rgb } from './ppm.js'

export interface Gray {
  width: number
  height: number
  data: Float64Array
}

export interface Box {
  x0: number
  y0: number
  x1: number
  y1: number
}

export function toGray(image: Rgb): Gray {
  const n = image.width * image.height
  const data = new Float64Array(n)
  for (let i = 0; i < n; i++) {
    data[i] = (image.data[3 * i] + image.data[3 * i + 1] + image.data[3 * i + 2]) / 3
  }
  return { width: image.width, height: image.height, data }
}

export function crop(image: Gray, box: Box): Gray {
  const width = box.x1 - box.x0
  const height = box.y1 - box.y0
  if (width <= 0 || height <= 0) throw new Error(`degenerate crop box ${JSON.stringify(box)}`)
  if (box.x0 < 0 || box.y0 < 0 || box.x1 > image.width || box.y1 > image.height) {
    throw new Error(`crop box ${JSON.stringify(box)} exceeds ${image.width}x${image.height}`)
  }
  const data = new Float64Array(width * height)
  for (let y = 0; y < height; y++) {
    const src = (box.y0 + y) * image.width + box.x0
    data.set(image.data.subarray(src, src + width), y * width)
  }
  return { width, height, data }
}

/** Half-pixel-center bilinear resize with clamped edges. */
export function resizeBilinear(image: Gray, outWidth: number, outHeight: number): Gray {
  const axis = (nIn: number, nOut: number) => {
    const lo = new Int32Array(nOut)
    const hi = new Int32Array(nOut)
    const t = new Float64Array(nOut)
    for (let j = 0; j < nOut; j++) {
      let pos = (j + 0.5) * (nIn / nOut) - 0.5
      if (pos < 0) pos = 0
      if (pos > nIn - 1) pos = nIn - 1
      const base = Math.floor(pos)
      lo[j] = base
      hi[j] = Math.min(base + 1, nIn - 1)
      t[j] = pos - base
    }
    return { lo, hi, t }
  }
  const ax = axis(image.width, outWidth)
  const ay = axis(image.height, outHeight)
  const data = new Float64Array(outWidth * outHeight)
  for (let y = 0; y < outHeight; y++) {
    const rowLo = ay.lo[y] * image.width
    const rowHi = ay.hi[y] * image.width
    const ty = ay.t[y]
    for (let x = 0; x < outWidth; x++) {
      const a = image.data[rowLo + ax.lo[x]] * (1 - ax.t[x]) + image.data[rowLo + ax.hi[x]] * ax.t[x]
      const b = image.data[rowHi + ax.lo[x]] * (1 - ax.t[x]) + image.data[rowHi + ax.hi[x]] * ax.t[x]
      data[y * outWidth + x] = a * (1 - ty) + b * ty
    }
  }
  return { width: outWidth, height: outHeight, data }
}

export function l2Normalize(values: Float64Array): Float64Array {
  let sum = 0
  for (const v of values) sum += v * v
  const norm = Math.sqrt(sum)
  if (!(norm > 0) || !Number.isFinite(norm)) {
    throw new Error('cannot normalize a zero or non-finite vector')
  }
  const out = new Float64Array(values.length)
  for (let i = 0; i < values.length; i++) out[i] = values[i] / norm
  return out
}
