/**
 * Minimal netpbm image IO: binary PGM (P5, grayscale) and PPM (P6, RGB).
 * The sandbox has no native codecs, so the extractor's image contract is
 * these two self-describing formats; pixels normalize to [0, 1].
 */

import * as fs from 'fs'

export interface DecodedImage {
  width: number
  height: number
  channels: number
  /** HWC order, values in [0, 1]. */
  data: Float32Array
}

export function decodeNetpbm(buffer: Buffer): DecodedImage {
  const magic = buffer.subarray(0, 2).toString('ascii')
  if (magic !== 'P5' && magic !== 'P6') {
    throw new Error(`unsupported image magic ${JSON.stringify(magic)}, expected P5 or P6`)
  }
  const channels = magic === 'P6' ? 3 : 1

  // Header tokens (width, height, maxval) with '#' comments allowed.
  let offset = 2
  const tokens: number[] = []
  while (tokens.length < 3) {
    if (offset >= buffer.length) throw new Error('truncated header')
    const ch = String.fromCharCode(buffer[offset])
    if (ch === '#') {
      while (offset < buffer.length && buffer[offset] !== 0x0a) offset++
      offset++
    } else if (/\s/.test(ch)) {
      offset++
    } else {
      let end = offset
      while (end < buffer.length && !/\s/.test(String.fromCharCode(buffer[end]))) end++
      const value = Number(buffer.subarray(offset, end).toString('ascii'))
      if (!Number.isFinite(value)) throw new Error('malformed header token')
      tokens.push(value)
      offset = end
    }
  }
  offset++ // single whitespace after maxval
  const [width, height, maxval] = tokens
  if (width < 1 || height < 1 || maxval < 1 || maxval > 255) {
    throw new Error(`bad dimensions ${width}x${height} maxval ${maxval}`)
  }
  const expected = width * height * channels
  const pixels = buffer.subarray(offset, offset + expected)
  if (pixels.length !== expected) {
    throw new Error(`truncated pixel data: have ${pixels.length}, need ${expected}`)
  }
  const data = new Float32Array(expected)
  for (let i = 0; i < expected; i++) data[i] = pixels[i] / maxval
  return { width, height, channels, data }
}

export function readImage(path: string): DecodedImage {
  return decodeNetpbm(fs.readFileSync(path))
}

/** Write a P6 (RGB) or P5 (grayscale) file from [0, 1] HWC data. */
export function writeNetpbm(path: string, image: DecodedImage): void {
  const magic = image.channels === 3 ? 'P6' : 'P5'
  const header = Buffer.from(`${magic}\n${image.width} ${image.height}\n255\n`, 'ascii')
  const pixels = Buffer.alloc(image.data.length)
  for (let i = 0; i < image.data.length; i++) {
    pixels[i] = Math.max(0, Math.min(255, Math.round(image.data[i] * 255)))
  }
  fs.writeFileSync(path, Buffer.concat([header, pixels]))
}
