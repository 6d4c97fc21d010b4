/**
 * Architecture-graph extraction: walk a layers model from its outputs
 * back to its inputs and emit the directed acyclic attributed graph the
 * core package consumes. Each layer contributes a chain of atoms (its
 * operation plus any fused activation); transparent layers (dropout and
 * friends) vanish, exactly as they would from a runtime gradient trace.
 *
 * Node ids are canonicalized to a topological order with atom-name
 * tie-breaks, so extracting the same model twice produces byte-identical
 * JSON.
 */

import * as tf from '@tensorflow/tfjs'

import { layerToAtoms } from './atoms'
import { stableStringify, writeJson } from './csv'

export interface ArchGraphJson {
  graph_id: string
  nodes: { id: number; atom: string }[]
  edges: [number, number][]
}

interface RawNode {
  tmpId: number
  atom: string
}

export interface ExtractedGraph {
  graph: ArchGraphJson
  unknownAtoms: string[]
}

function layerInputs(layer: tf.layers.Layer): tf.layers.Layer[] {
  const nodes = (layer as any).inboundNodes ?? []
  const inputs: tf.layers.Layer[] = []
  for (const node of nodes) {
    for (const inbound of node.inboundLayers ?? []) {
      if (!inputs.includes(inbound)) inputs.push(inbound)
    }
  }
  return inputs
}

function layerActivation(layer: tf.layers.Layer): string | null {
  const config = layer.getConfig() as Record<string, unknown>
  const activation = config['activation']
  return typeof activation === 'string' ? activation : null
}

export function extractGraph(model: tf.LayersModel, graphId: string): ExtractedGraph {
  const rawNodes: RawNode[] = []
  const rawEdges: [number, number][] = []
  const unknownAtoms: string[] = []
  // tail node of each layer's atom chain, as seen by downstream layers
  const tails = new Map<tf.layers.Layer, number[]>()

  for (const layer of model.layers) {
    const inputs = layerInputs(layer)
    // Sequential models keep their InputLayer out of model.layers; give it
    // a Variable node the first time a consumer references it.
    for (const input of inputs) {
      if (!tails.has(input) && input.getClassName() === 'InputLayer') {
        const tmpId = rawNodes.length
        rawNodes.push({ tmpId, atom: 'Variable' })
        tails.set(input, [tmpId])
      }
    }
    const inputTails = inputs.flatMap(l => tails.get(l) ?? [])
    const { atoms, unknown } = layerToAtoms(layer.getClassName(), layerActivation(layer))
    unknownAtoms.push(...unknown)

    if (atoms.length === 0) {
      tails.set(layer, inputTails) // transparent: downstream sees our inputs
      continue
    }
    let previous: number[] = inputTails
    for (const atom of atoms) {
      const tmpId = rawNodes.length
      rawNodes.push({ tmpId, atom })
      for (const src of previous) rawEdges.push([src, tmpId])
      previous = [tmpId]
    }
    tails.set(layer, previous)
  }

  // Canonical ids: topological order, ready nodes taken in atom-name order.
  const indegree = new Array(rawNodes.length).fill(0)
  const out: number[][] = rawNodes.map(() => [])
  for (const [src, dst] of rawEdges) {
    out[src].push(dst)
    indegree[dst]++
  }
  const ready = rawNodes.filter(n => indegree[n.tmpId] === 0)
  const byAtomThenId = (a: RawNode, b: RawNode) =>
    a.atom < b.atom ? -1 : a.atom > b.atom ? 1 : a.tmpId - b.tmpId
  const canonical = new Array<number>(rawNodes.length)
  let next = 0
  while (ready.length > 0) {
    ready.sort(byAtomThenId)
    const node = ready.shift()!
    canonical[node.tmpId] = next++
    for (const dst of out[node.tmpId]) {
      if (--indegree[dst] === 0) ready.push(rawNodes[dst])
    }
  }
  if (next !== rawNodes.length) {
    throw new Error('extracted graph contains a cycle') // cannot happen for a layers model
  }

  const nodes = rawNodes
    .map(n => ({ id: canonical[n.tmpId], atom: n.atom }))
    .sort((a, b) => a.id - b.id)
  const edges = rawEdges
    .map(([s, d]) => [canonical[s], canonical[d]] as [number, number])
    .sort((a, b) => a[0] - b[0] || a[1] - b[1])

  return { graph: { graph_id: graphId, nodes, edges }, unknownAtoms }
}

export function writeGraph(extracted: ExtractedGraph, outPath: string): void {
  if (extracted.graph.nodes.length === 0) {
    throw new Error('refusing to write a graph with zero nodes')
  }
  writeJson(outPath, extracted.graph)
}

export function graphToString(extracted: ExtractedGraph): string {
  return stableStringify(extracted.graph)
}
