#!/usr/bin/env node
/** Command line: extract-proposals and extract-features. */

import { readFileSync, readdirSync, statSync } from 'node:fs'
import { join } from 'node:path'
import { fileURLToPath } from 'node:url'

import {
  AdapterConfig,
  DEFAULT_CANONICAL_SIZE,
  DEFAULT_THRESHOLD,
  runExtractFeatures,
  runExtractProposals,
} from './extract.js'
import { parseProposalsJsonl } from './formats.js'
import { DETECTOR_ID, ENCODER_ID } from './models.js'

const DEFAULT_WEIGHTS = fileURLToPath(new URL('../../fixtures/encoder-weights.bin', import.meta.url))

function usage(): never {
  console.error(
    [
      'usage:',
      '  locdet-adapter extract-proposals --images <dir|file...> --out <proposals.jsonl>',
      `      [--detector ${DETECTOR_ID}] [--threshold ${DEFAULT_THRESHOLD}]`,
      '  locdet-adapter extract-features --images <dir|file...> --proposals <proposals.jsonl>',
      `      --out <features.bin> [--encoder ${ENCODER_ID}] [--weights <path>] [--size ${DEFAULT_CANONICAL_SIZE}]`,
    ].join('\n'),
  )
  process.exit(2)
}

function collectImages(paths: string[]): string[] {
  const files: string[] = []
  for (const path of paths) {
    if (statSync(path).isDirectory()) {
      for (const name of readdirSync(path).sort()) {
        if (name.endsWith('.ppm')) files.push(join(path, name))
      }
    } else {
      files.push(path)
    }
  }
  if (files.length === 0) throw new Error('no input images found')
  return files
}

interface Args {
  images: string[]
  out?: string
  proposals?: string
  detector: string
  encoder: string
  weights: string
  threshold: number
  size: number
}

function parseArgs(argv: string[]): Args {
  const args: Args = {
    images: [],
    detector: DETECTOR_ID,
    encoder: ENCODER_ID,
    weights: DEFAULT_WEIGHTS,
    threshold: DEFAULT_THRESHOLD,
    size: DEFAULT_CANONICAL_SIZE,
  }
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i]
    switch (flag) {
      case '--images':
        while (i + 1 < argv.length && !argv[i + 1].startsWith('--')) args.images.push(argv[++i])
        break
      case '--out':
        args.out = argv[++i]
        break
      case '--proposals':
        args.proposals = argv[++i]
        break
      case '--detector':
        args.detector = argv[++i]
        break
      case '--encoder':
        args.encoder = argv[++i]
        break
      case '--weights':
        args.weights = argv[++i]
        break
      case '--threshold':
        args.threshold = Number(argv[++i])
        break
      case '--size':
        args.size = Number(argv[++i])
        break
      default:
        console.error(`unknown flag ${flag}`)
        usage()
    }
  }
  return args
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv
  if (command !== 'extract-proposals' && command !== 'extract-features') usage()
  const args = parseArgs(rest)
  if (args.images.length === 0 || !args.out) usage()
  const cfg: AdapterConfig = {
    detector: args.detector,
    encoder: args.encoder,
    encoderWeights: args.weights,
    confidenceThreshold: args.threshold,
    canonicalSize: args.size,
  }
  try {
    const images = collectImages(args.images)
    if (command === 'extract-proposals') {
      const count = runExtractProposals(images, args.out, cfg)
      console.log(`wrote ${count} proposals over ${images.length} images -> ${args.out}`)
    } else {
      if (!args.proposals) usage()
      const byImage = parseProposalsJsonl(readFileSync(args.proposals, 'utf-8'))
      const count = runExtractFeatures(images, byImage, args.out, cfg)
      console.log(`wrote ${count} feature records -> ${args.out}`)
    }
  } catch (err) {
    console.error(`error: ${(err as Error).message}`)
    return 1
  }
  return 0
}

if (process.argv[1] && import.meta.url === new URL(`file://${process.argv[1]}`).href) {
  process.exit(main(process.argv.slice(2)))
}
