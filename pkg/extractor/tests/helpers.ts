import * as fs from 'fs'
import * as path from 'path'

import { writeNetpbm, type DecodedImage } from '../src/imageio'
import { Rng } from '../src/rng'

export function syntheticImage(seed: number, style: 'smooth' | 'noisy', size = 16): DecodedImage {
  const rng = new Rng(seed)
  const data = new Float32Array(size * size * 3)
  const phase = rng.next() * Math.PI
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      for (let c = 0; c < 3; c++) {
        const i = (y * size + x) * 3 + c
        if (style === 'smooth') {
          data[i] = 0.5 + 0.45 * Math.sin(phase + (x + y) / size + c)
        } else {
          data[i] = (x + y + c) % 2 === 0 ? rng.next() : 1 - rng.next()
        }
      }
    }
  }
  return { width: size, height: size, channels: 3, data }
}

/** Task folder with one subdirectory per class; returns the folder path. */
export function makeTaskFolder(
  dir: string,
  classes: string[],
  perClass: number,
  seedBase: number,
  style: 'smooth' | 'noisy' = 'smooth',
): string {
  classes.forEach((name, label) => {
    const classDir = path.join(dir, name)
    fs.mkdirSync(classDir, { recursive: true })
    for (let i = 0; i < perClass; i++) {
      writeNetpbm(path.join(classDir, `img_${String(i).padStart(3, '0')}.ppm`),
                  syntheticImage(seedBase + label * 1000 + i, style))
    }
  })
  return dir
}
