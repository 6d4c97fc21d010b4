#!/usr/bin/env node
/**
 * extract graph|features|proxy: emit architecture graphs, forward-feature
 * CSVs and task proxy embeddings in the core package's file formats.
 */

import yargs from 'yargs'
import { hideBin } from 'yargs/helpers'

import { extractGraph, writeGraph } from './graph'
import { extractFeatures } from './features'
import { extractProxy } from './proxy'
import { getModelSpec, MODEL_REGISTRY } from './models'

export async function run(argv: string[]): Promise<number> {
  let exitCode = 0
  await yargs(argv)
    .scriptName('extract')
    .command(
      'graph',
      'emit the architecture graph JSON for a model',
      y =>
        y
          .option('model', { type: 'string', demandOption: true, describe: `one of: ${Object.keys(MODEL_REGISTRY).join(', ')}` })
          .option('out', { type: 'string', demandOption: true })
          .option('graph-id', { type: 'string', describe: 'graph id (defaults to the model name)' }),
      args => {
        const spec = getModelSpec(args.model)
        const extracted = extractGraph(spec.build(), args['graph-id'] ?? spec.name)
        for (const atom of new Set(extracted.unknownAtoms)) {
          console.error(`warning: no vocabulary atom for ${atom}, emitted UNKNOWN`)
        }
        writeGraph(extracted, args.out)
        console.log(`wrote ${args.out} (${extracted.graph.nodes.length} nodes, ${extracted.graph.edges.length} edges)`)
      },
    )
    .command(
      'features',
      'extract penultimate-layer features for a task image folder',
      y =>
        y
          .option('model', { type: 'string', demandOption: true })
          .option('task-dir', { type: 'string', demandOption: true })
          .option('out', { type: 'string', demandOption: true })
          .option('probe-size', { type: 'number', default: 500 })
          .option('seed', { type: 'number', default: 0 }),
      async args => {
        const result = await extractFeatures(args.model, args['task-dir'], args.out, args['probe-size'], args.seed)
        const counts = Object.entries(result.classCounts)
          .map(([name, count]) => `${name}=${count}`)
          .join(', ')
        if (result.skipped > 0) {
          console.error(`skipped ${result.skipped} undecodable image(s)`)
        }
        console.log(`wrote ${args.out} (${result.rows} rows x ${result.dim} dims; ${counts})`)
      },
    )
    .command(
      'proxy',
      'embed a task folder with the frozen encoder into one proxy vector',
      y =>
        y
          .option('task-dir', { type: 'string', demandOption: true })
          .option('out', { type: 'string', demandOption: true })
          .option('subset', { type: 'number', default: 500 })
          .option('seed', { type: 'number', default: 0 }),
      async args => {
        const result = await extractProxy(args['task-dir'], args.out, args.subset, args.seed)
        if (result.skipped > 0) {
          console.error(`skipped ${result.skipped} undecodable image(s)`)
        }
        console.log(`wrote ${args.out} (dim ${result.vector.length}, pooled over ${result.subsetSize} images)`)
      },
    )
    .demandCommand(1)
    .strict()
    .fail((msg, err) => {
      console.error(`error: ${msg ?? err?.message}`)
      exitCode = err && !msg ? 3 : 2
    })
    .parseAsync()
  return exitCode
}

if (require.main === module) {
  run(hideBin(process.argv))
    .then(code => process.exit(code))
    .catch(err => {
      console.error(`error: ${err.message}`)
      process.exit(3)
    })
}
