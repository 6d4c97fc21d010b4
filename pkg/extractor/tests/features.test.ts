import * as fs from 'fs'
import * as os from 'os'
import * as path from 'path'

import { afterAll, describe, expect, it } from 'vitest'

import { extractFeatures } from '../src/features'
import { getModelSpec } from '../src/models'
import { makeTaskFolder } from './helpers'

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), 'extractor-feat-'))
afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }))

describe('feature extraction', () => {
  it('writes one labeled row per probe image at the documented width', async () => {
    const dir = makeTaskFolder(path.join(tmp, 'task'), ['a', 'b'], 8, 3)
    const out = path.join(tmp, 'features.csv')
    const result = await extractFeatures('tiny-alexnet', dir, out, 500, 0)
    expect(result.rows).toBe(16)
    expect(result.dim).toBe(getModelSpec('tiny-alexnet').penultimateDim)
    expect(result.skipped).toBe(0)
    expect(result.classCounts).toEqual({ a: 8, b: 8 })

    const lines = fs.readFileSync(out, 'utf-8').trimEnd().split('\n')
    expect(lines[0]).toBe('label,' + Array.from({ length: result.dim }, (_, i) => `f${i}`).join(','))
    expect(lines.length).toBe(17)
    const labels = lines.slice(1).map(l => Number(l.split(',')[0]))
    expect(labels.filter(l => l === 0).length).toBe(8)
    expect(labels.filter(l => l === 1).length).toBe(8)
  })

  it('stratifies when the folder exceeds the probe size', async () => {
    const dir = makeTaskFolder(path.join(tmp, 'task_big'), ['a', 'b'], 12, 5)
    const out = path.join(tmp, 'features_big.csv')
    const result = await extractFeatures('tiny-alexnet', dir, out, 10, 1)
    expect(result.rows).toBe(10)
    expect(result.classCounts).toEqual({ a: 5, b: 5 })
  })

  it('is byte-identical across reruns with the same seed', async () => {
    const dir = makeTaskFolder(path.join(tmp, 'task_rerun'), ['a', 'b'], 6, 11)
    const outA = path.join(tmp, 'rerun_a.csv')
    const outB = path.join(tmp, 'rerun_b.csv')
    await extractFeatures('tiny-resnet', dir, outA, 8, 42)
    await extractFeatures('tiny-resnet', dir, outB, 8, 42)
    expect(fs.readFileSync(outA)).toEqual(fs.readFileSync(outB))
  })

  it('skips corrupt images with a count instead of failing', async () => {
    const dir = makeTaskFolder(path.join(tmp, 'task_corrupt'), ['a'], 5, 21)
    fs.writeFileSync(path.join(dir, 'a', 'img_000.ppm'), 'P6\n9 9\n255\nshort')
    const out = path.join(tmp, 'features_corrupt.csv')
    const result = await extractFeatures('tiny-alexnet', dir, out, 500, 0)
    expect(result.skipped).toBe(1)
    expect(result.rows).toBe(4)
  })

  it('rejects unknown model identifiers', async () => {
    const dir = makeTaskFolder(path.join(tmp, 'task_unknown'), ['a'], 2, 31)
    await expect(extractFeatures('nonexistent-model', dir, path.join(tmp, 'x.csv'))).rejects.toThrow(
      /unknown model/,
    )
  })
})
