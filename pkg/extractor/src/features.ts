/**
 * Forward-feature extraction: run the probe images through a model up to
 * its penultimate layer and write the rows (with labels) in the core CSV
 * format. Corrupt images are skipped and counted, never fatal.
 */

import * as tf from '@tensorflow/tfjs'

import { writeFeatureCsv } from './csv'
import { sampleProbe, scanTaskFolder, type ImageEntry } from './dataset'
import { readImage, type DecodedImage } from './imageio'
import { getModelSpec } from './models'

export interface FeatureExtractionResult {
  rows: number
  dim: number
  skipped: number
  classCounts: Record<string, number>
}

export function imageToTensor(image: DecodedImage, size: number): tf.Tensor4D {
  return tf.tidy(() => {
    let t = tf.tensor3d(image.data, [image.height, image.width, image.channels])
    if (image.channels === 1) {
      t = tf.concat([t, t, t], 2)
    }
    const resized = tf.image.resizeBilinear(t as tf.Tensor3D, [size, size])
    return resized.expandDims(0) as tf.Tensor4D
  })
}

export function loadProbeImages(
  taskDir: string,
  probeSize: number,
  seed: number,
): { entries: ImageEntry[]; images: DecodedImage[]; skipped: number; classNames: string[] } {
  const folder = scanTaskFolder(taskDir)
  if (folder.entries.length === 0) {
    throw new Error(`no netpbm images under ${taskDir}`)
  }
  const probe = sampleProbe(folder, probeSize, seed)
  const entries: ImageEntry[] = []
  const images: DecodedImage[] = []
  let skipped = 0
  for (const entry of probe) {
    try {
      images.push(readImage(entry.path))
      entries.push(entry)
    } catch (err) {
      skipped++
      console.error(`skipping ${entry.path}: ${(err as Error).message}`)
    }
  }
  if (entries.length === 0) {
    throw new Error(`every probe image under ${taskDir} failed to decode`)
  }
  return { entries, images, skipped, classNames: folder.classNames }
}

export async function extractFeatures(
  modelId: string,
  taskDir: string,
  outPath: string,
  probeSize = 500,
  seed = 0,
): Promise<FeatureExtractionResult> {
  const spec = getModelSpec(modelId)
  const model = spec.build()
  const featureLayer = model.getLayer(spec.featureLayer)
  const extractor = tf.model({ inputs: model.inputs, outputs: featureLayer.output })

  const { entries, images, skipped, classNames } = loadProbeImages(taskDir, probeSize, seed)

  const labels: number[] = []
  const rows: number[][] = []
  for (let i = 0; i < entries.length; i++) {
    const input = imageToTensor(images[i], spec.inputSize)
    const output = extractor.predict(input) as tf.Tensor
    const flat = (await output.data()) as Float32Array
    rows.push(Array.from(flat))
    labels.push(entries[i].label)
    input.dispose()
    output.dispose()
  }

  const dim = rows[0].length
  if (dim !== spec.penultimateDim) {
    throw new Error(
      `feature width ${dim} does not match the documented penultimate dimension ${spec.penultimateDim}`,
    )
  }
  writeFeatureCsv(outPath, labels, rows)

  const classCounts: Record<string, number> = {}
  for (const entry of entries) {
    const name = classNames[entry.label]
    classCounts[name] = (classCounts[name] ?? 0) + 1
  }
  return { rows: rows.length, dim, skipped, classCounts }
}
