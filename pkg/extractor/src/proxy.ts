/**
 * Task proxy embeddings from a frozen encoder.
 *
 * The encoder is a fixed seeded convolutional network (identifier below)
 * standing in for a large pre-trained vision encoder, which the sandbox
 * cannot download; the contract is identical either way: embed a seeded
 * subset of the task's images, mean-pool, L2-normalize, and record the
 * encoder identifier and pooling choice in the CSV header comments.
 */

import * as tf from '@tensorflow/tfjs'

import { writeVectorCsv } from './csv'
import { loadProbeImages, imageToTensor } from './features'

export const ENCODER_ID = 'frozen-tiny-encoder-v1'
export const ENCODER_INPUT_SIZE = 32
export const ENCODER_DIM = 32

let cachedEncoder: tf.LayersModel | null = null

export function frozenEncoder(): tf.LayersModel {
  if (cachedEncoder) return cachedEncoder
  const model = tf.sequential({ name: ENCODER_ID })
  model.add(tf.layers.conv2d({
    inputShape: [ENCODER_INPUT_SIZE, ENCODER_INPUT_SIZE, 3],
    filters: 16, kernelSize: 3, strides: 2, padding: 'same', activation: 'relu',
    kernelInitializer: tf.initializers.glorotUniform({ seed: 9001 }), name: 'enc_conv1',
  }))
  model.add(tf.layers.conv2d({
    filters: ENCODER_DIM, kernelSize: 3, strides: 2, padding: 'same', activation: 'relu',
    kernelInitializer: tf.initializers.glorotUniform({ seed: 9002 }), name: 'enc_conv2',
  }))
  model.add(tf.layers.globalAveragePooling2d({ name: 'enc_pool' }))
  cachedEncoder = model
  return model
}

export interface ProxyExtractionResult {
  vector: number[]
  subsetSize: number
  skipped: number
}

export async function extractProxy(
  taskDir: string,
  outPath: string,
  subsetSize = 500,
  seed = 0,
): Promise<ProxyExtractionResult> {
  const encoder = frozenEncoder()
  const { images, skipped } = loadProbeImages(taskDir, subsetSize, seed)

  const sum = new Float64Array(ENCODER_DIM)
  for (const image of images) {
    const input = imageToTensor(image, ENCODER_INPUT_SIZE)
    const output = encoder.predict(input) as tf.Tensor
    const flat = (await output.data()) as Float32Array
    for (let i = 0; i < ENCODER_DIM; i++) sum[i] += flat[i]
    input.dispose()
    output.dispose()
  }

  const mean = Array.from(sum, v => v / images.length)
  const norm = Math.sqrt(mean.reduce((a, v) => a + v * v, 0))
  const vector = norm > 0 ? mean.map(v => v / norm) : mean

  writeVectorCsv(outPath, vector, [
    `encoder: ${ENCODER_ID}`,
    'pooling: mean over subset, then L2 normalization',
    `subset_size: ${images.length}`,
    `seed: ${seed}`,
  ])
  return { vector, subsetSize: images.length, skipped }
}
