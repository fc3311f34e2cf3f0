/** Generate the committed encoder weights fixture.
 *
 * Weights come from a fixed-seed xorshift generator with fan-in scaling, so
 * regenerating the file always produces identical bytes.
 */

import { writeFileSync } from 'node:fs'
import { fileURLToPath } from 'node:url'

import { WEIGHTS_MAGIC, encoderWeightCount } from '../src/models.js'

class XorShift {
  private state: bigint
  constructor(seed: bigint) {
    this.state = seed === 0n ? 0x9e3779b97f4a7c15n : seed
  }
  next(): number {
    // xorshift64*, top 24 bits to a float in [0, 1)
    this.state ^= this.state >> 12n
    this.state ^= (this.state << 25n) & 0xffffffffffffffffn
    this.state ^= this.state >> 27n
    const scrambled = (this.state * 0x2545f4914f6cdd1dn) & 0xffffffffffffffffn
    return Number(scrambled >> 40n) / 2 ** 24
  }
}

const CHANNELS = [1, 8, 16, 32]

function main(): void {
  const rng = new XorShift(20240801n)
  const total = encoderWeightCount()
  const buffer = Buffer.alloc(12 + 4 * total)
  buffer.write(WEIGHTS_MAGIC, 0, 'latin1')
  buffer.writeUInt32LE(total, 8)
  let offset = 12
  for (let layer = 0; layer < 3; layer++) {
    const fanIn = CHANNELS[layer] * 9
    const scale = Math.sqrt(2 / fanIn)
    const kernels = CHANNELS[layer + 1] * CHANNELS[layer] * 9
    for (let i = 0; i < kernels; i++) {
      buffer.writeFloatLE((rng.next() * 2 - 1) * scale, offset)
      offset += 4
    }
    for (let i = 0; i < CHANNELS[layer + 1]; i++) {
      buffer.writeFloatLE((rng.next() * 2 - 1) * 0.05, offset)
      offset += 4
    }
  }
  const out = fileURLToPath(new URL('../../fixtures/encoder-weights.bin', import.meta.url))
  writeFileSync(out, buffer)
  console.log(`wrote ${total} weights -> ${out}`)
}

main()
