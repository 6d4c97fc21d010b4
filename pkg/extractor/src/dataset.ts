/**
 * Task image folders: one subdirectory per class holding netpbm images
 * (flat folders are treated as unlabeled, single-class). Probe selection
 * is seeded and stratified by class via largest-remainder quotas.
 */

import * as fs from 'fs'
import * as path from 'path'

import { Rng } from './rng'

export interface ImageEntry {
  path: string
  label: number
}

export interface TaskFolder {
  classNames: string[]
  entries: ImageEntry[]
}

const IMAGE_EXTENSIONS = new Set(['.ppm', '.pgm'])

export function scanTaskFolder(dir: string): TaskFolder {
  if (!fs.existsSync(dir) || !fs.statSync(dir).isDirectory()) {
    throw new Error(`task folder ${dir} does not exist`)
  }
  const subdirs = fs
    .readdirSync(dir, { withFileTypes: true })
    .filter(e => e.isDirectory())
    .map(e => e.name)
    .sort()

  const entries: ImageEntry[] = []
  if (subdirs.length > 0) {
    subdirs.forEach((name, label) => {
      for (const file of fs.readdirSync(path.join(dir, name)).sort()) {
        if (IMAGE_EXTENSIONS.has(path.extname(file).toLowerCase())) {
          entries.push({ path: path.join(dir, name, file), label })
        }
      }
    })
    return { classNames: subdirs, entries }
  }

  for (const file of fs.readdirSync(dir).sort()) {
    if (IMAGE_EXTENSIONS.has(path.extname(file).toLowerCase())) {
      entries.push({ path: path.join(dir, file), label: 0 })
    }
  }
  return { classNames: ['unlabeled'], entries }
}

/**
 * Seeded stratified subsample: quotas proportional to class frequency
 * (largest remainder, at least one per class), then a seeded draw without
 * replacement inside each class. Returns entries in stable path order.
 */
export function sampleProbe(folder: TaskFolder, probeSize: number, seed: number): ImageEntry[] {
  const entries = folder.entries
  if (entries.length <= probeSize) {
    return [...entries]
  }
  const byClass = new Map<number, ImageEntry[]>()
  for (const e of entries) {
    const bucket = byClass.get(e.label) ?? []
    bucket.push(e)
    byClass.set(e.label, bucket)
  }
  const labels = [...byClass.keys()].sort((a, b) => a - b)
  const exact = labels.map(l => (probeSize * byClass.get(l)!.length) / entries.length)
  const quotas = exact.map((x, i) => Math.min(byClass.get(labels[i])!.length, Math.max(1, Math.floor(x))))

  let total = quotas.reduce((a, b) => a + b, 0)
  while (total < probeSize) {
    let best = -1
    let bestFrac = -Infinity
    for (let i = 0; i < labels.length; i++) {
      if (quotas[i] >= byClass.get(labels[i])!.length) continue
      const frac = exact[i] - quotas[i]
      if (frac > bestFrac) {
        bestFrac = frac
        best = i
      }
    }
    if (best < 0) break
    quotas[best]++
    total++
  }
  while (total > probeSize) {
    let best = -1
    let bestFrac = Infinity
    for (let i = 0; i < labels.length; i++) {
      if (quotas[i] <= 1) continue
      const frac = exact[i] - quotas[i]
      if (frac < bestFrac) {
        bestFrac = frac
        best = i
      }
    }
    if (best < 0) break
    quotas[best]--
    total--
  }

  const rng = new Rng(seed)
  const picked: ImageEntry[] = []
  for (let i = 0; i < labels.length; i++) {
    const bucket = byClass.get(labels[i])!
    for (const idx of rng.sampleWithoutReplacement(bucket.length, quotas[i])) {
      picked.push(bucket[idx])
    }
  }
  picked.sort((a, b) => (a.path < b.path ? -1 : a.path > b.path ? 1 : 0))
  return picked
}
