import * as fs from 'fs'
import * as os from 'os'
import * as path from 'path'

import { afterAll, describe, expect, it } from 'vitest'

import { ENCODER_DIM, ENCODER_ID, ENCODER_INPUT_SIZE, extractProxy, frozenEncoder } from '../src/proxy'
import { imageToTensor } from '../src/features'
import { readImage } from '../src/imageio'
import { makeTaskFolder } from './helpers'

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), 'extractor-proxy-'))
afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }))

function cosine(a: number[], b: number[]): number {
  const dot = a.reduce((s, v, i) => s + v * b[i], 0)
  const na = Math.sqrt(a.reduce((s, v) => s + v * v, 0))
  const nb = Math.sqrt(b.reduce((s, v) => s + v * v, 0))
  return dot / (na * nb)
}

describe('proxy embedding', () => {
  it('identical folders give identical vectors', async () => {
    const dirA = makeTaskFolder(path.join(tmp, 'dup_a'), ['x'], 6, 7)
    const dirB = makeTaskFolder(path.join(tmp, 'dup_b'), ['x'], 6, 7)
    const a = await extractProxy(dirA, path.join(tmp, 'a.csv'), 500, 0)
    const b = await extractProxy(dirB, path.join(tmp, 'b.csv'), 500, 0)
    expect(a.vector).toEqual(b.vector)
  })

  it('a single-image subset equals that image normalized', async () => {
    const dir = makeTaskFolder(path.join(tmp, 'single'), ['x'], 1, 3)
    const result = await extractProxy(dir, path.join(tmp, 'single.csv'), 500, 0)
    expect(result.subsetSize).toBe(1)

    const image = readImage(path.join(dir, 'x', 'img_000.ppm'))
    const input = imageToTensor(image, ENCODER_INPUT_SIZE)
    const raw = Array.from(await (frozenEncoder().predict(input) as any).data()) as number[]
    const norm = Math.sqrt(raw.reduce((s, v) => s + v * v, 0))
    const expected = raw.map(v => v / norm)
    for (let i = 0; i < ENCODER_DIM; i++) {
      expect(Math.abs(result.vector[i] - expected[i])).toBeLessThanOrEqual(1e-6)
    }
  })

  it('visually disjoint tasks are farther apart than halves of one task', async () => {
    const smoothAll = makeTaskFolder(path.join(tmp, 'smooth_all'), ['x'], 20, 50, 'smooth')
    const noisy = makeTaskFolder(path.join(tmp, 'noisy'), ['x'], 20, 90, 'noisy')
    // two disjoint halves of the smooth task
    const halfA = path.join(tmp, 'smooth_half_a', 'x')
    const halfB = path.join(tmp, 'smooth_half_b', 'x')
    fs.mkdirSync(halfA, { recursive: true })
    fs.mkdirSync(halfB, { recursive: true })
    const files = fs.readdirSync(path.join(smoothAll, 'x')).sort()
    files.forEach((f, i) => {
      fs.copyFileSync(path.join(smoothAll, 'x', f), path.join(i % 2 === 0 ? halfA : halfB, f))
    })

    const smooth = (await extractProxy(smoothAll, path.join(tmp, 's.csv'), 500, 0)).vector
    const other = (await extractProxy(noisy, path.join(tmp, 'n.csv'), 500, 0)).vector
    const hA = (await extractProxy(path.dirname(halfA), path.join(tmp, 'ha.csv'), 500, 0)).vector
    const hB = (await extractProxy(path.dirname(halfB), path.join(tmp, 'hb.csv'), 500, 0)).vector

    expect(cosine(smooth, other)).toBeLessThan(cosine(hA, hB))
  })

  it('records encoder and pooling provenance in header comments', async () => {
    const dir = makeTaskFolder(path.join(tmp, 'prov'), ['x'], 3, 5)
    await extractProxy(dir, path.join(tmp, 'prov.csv'), 500, 4)
    const text = fs.readFileSync(path.join(tmp, 'prov.csv'), 'utf-8')
    expect(text).toContain(`# encoder: ${ENCODER_ID}`)
    expect(text).toContain('# pooling: mean over subset')
    expect(text).toContain('# seed: 4')
    const dataLines = text.trimEnd().split('\n').filter(l => !l.startsWith('#'))
    expect(dataLines.length).toBe(1)
    expect(dataLines[0].split(',').length).toBe(ENCODER_DIM)
  })
})
