/** Minimal binary P6 pixmap reader (maxval 255). */

import { readFileSync } from 'node:fs'

export interface Rgb {
  width: number
  height: number
  /** row-major RGB triples, length = width * height * 3 */
  data: Uint8Array
}

export function readPpm(path: string): Rgb {
  const raw = readFileSync(path)
  if (raw.length < 2 || raw[0] !== 0x50 || raw[1] !== 0x36) {
    throw new Error(`${path}: expected P6 header`)
  }
  let pos = 2
  const fields: number[] = []
  while (fields.length < 3) {
    if (pos >= raw.length) throw new Error(`${path}: truncated header at byte ${pos}`)
    const c = raw[pos]
    if (c === 0x23) {
      // comment line
      while (pos < raw.length && raw[pos] !== 0x0a) pos++
      pos++
    } else if (c === 0x20 || c === 0x09 || c === 0x0a || c === 0x0d) {
      pos++
    } else if (c >= 0x30 && c <= 0x39) {
      let value = 0
      while (pos < raw.length && raw[pos] >= 0x30 && raw[pos] <= 0x39) {
        value = value * 10 + (raw[pos] - 0x30)
        pos++
      }
      fields.push(value)
    } else {
      throw new Error(`${path}: unexpected byte ${c} at offset ${pos}`)
    }
  }
  const [width, height, maxval] = fields
  if (maxval !== 255) throw new Error(`${path}: only maxval 255 supported, got ${maxval}`)
  pos++ // single whitespace after maxval
  const need = width * height * 3
  if (raw.length - pos < need) throw new Error(`${path}: pixel data truncated`)
  return { width, height, data: new Uint8Array(raw.buffer, raw.byteOffset + pos, need).slice() }
}
