/**
 * Writers for the core package's text formats. Numbers use JavaScript's
 * shortest round-trip rendering, which float parsers read back exactly;
 * reruns of the same extraction are byte-identical.
 */

import * as fs from 'fs'
import * as path from 'path'

function ensureDir(filePath: string): void {
  fs.mkdirSync(path.dirname(filePath), { recursive: true })
}

export function writeFeatureCsv(
  filePath: string,
  labels: number[],
  features: number[][],
): void {
  if (labels.length !== features.length) {
    throw new Error('labels and feature rows must align')
  }
  const dim = features[0]?.length ?? 0
  const header = 'label,' + Array.from({ length: dim }, (_, i) => `f${i}`).join(',')
  const lines = [header]
  for (let r = 0; r < labels.length; r++) {
    if (features[r].length !== dim) {
      throw new Error(`row ${r} has ${features[r].length} values, expected ${dim}`)
    }
    lines.push(`${labels[r]},` + features[r].map(v => String(v)).join(','))
  }
  ensureDir(filePath)
  fs.writeFileSync(filePath, lines.join('\n') + '\n', 'utf-8')
}

export function writeVectorCsv(filePath: string, vector: number[], comments: string[] = []): void {
  const lines = comments.map(c => `# ${c}`)
  lines.push(vector.map(v => String(v)).join(','))
  ensureDir(filePath)
  fs.writeFileSync(filePath, lines.join('\n') + '\n', 'utf-8')
}

export function writeJson(filePath: string, doc: unknown): void {
  ensureDir(filePath)
  fs.writeFileSync(filePath, stableStringify(doc) + '\n', 'utf-8')
}

/** JSON.stringify with sorted object keys (2-space indent), for byte-stable output. */
export function stableStringify(doc: unknown): string {
  const sort = (value: unknown): unknown => {
    if (Array.isArray(value)) return value.map(sort)
    if (value && typeof value === 'object') {
      const entries = Object.entries(value as Record<string, unknown>).sort(([a], [b]) =>
        a < b ? -1 : a > b ? 1 : 0,
      )
      return Object.fromEntries(entries.map(([k, v]) => [k, sort(v)]))
    }
    return value
  }
  return JSON.stringify(sort(doc), null, 2)
}
