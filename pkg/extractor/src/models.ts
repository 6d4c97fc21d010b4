/**
 * Built-in small models exercising the two structural families that
 * matter for graph extraction: a residual backbone (skip connections
 * joining through Add) and a plain sequential stack. Weights are seeded,
 * so features extracted from them are reproducible.
 */

import * as tf from '@tensorflow/tfjs'

export interface ModelSpec {
  name: string
  inputSize: number
  /** Documented width of the penultimate (feature) layer. */
  penultimateDim: number
  /** Name of the layer whose output is the forward-feature vector. */
  featureLayer: string
  build(): tf.LayersModel
}

function conv(filters: number, kernel: number, stride: number, seed: number, name: string) {
  return tf.layers.conv2d({
    filters,
    kernelSize: kernel,
    strides: stride,
    padding: 'same',
    kernelInitializer: tf.initializers.glorotUniform({ seed }),
    useBias: false,
    name,
  })
}

function buildTinyResnet(): tf.LayersModel {
  let seed = 100
  const input = tf.input({ shape: [32, 32, 3], name: 'image' })
  let x = conv(16, 3, 1, seed++, 'stem_conv').apply(input) as tf.SymbolicTensor
  x = tf.layers.batchNormalization({ name: 'stem_bn' }).apply(x) as tf.SymbolicTensor
  x = tf.layers.reLU({ name: 'stem_relu' }).apply(x) as tf.SymbolicTensor

  const widths = [32, 64]
  for (let stage = 0; stage < widths.length; stage++) {
    const w = widths[stage]
    const stride = stage === 0 ? 1 : 2
    let main = conv(w, 3, stride, seed++, `s${stage}_conv1`).apply(x) as tf.SymbolicTensor
    main = tf.layers.batchNormalization({ name: `s${stage}_bn1` }).apply(main) as tf.SymbolicTensor
    main = tf.layers.reLU({ name: `s${stage}_relu1` }).apply(main) as tf.SymbolicTensor
    main = conv(w, 3, 1, seed++, `s${stage}_conv2`).apply(main) as tf.SymbolicTensor
    main = tf.layers.batchNormalization({ name: `s${stage}_bn2` }).apply(main) as tf.SymbolicTensor

    let skip = conv(w, 1, stride, seed++, `s${stage}_proj`).apply(x) as tf.SymbolicTensor
    skip = tf.layers.batchNormalization({ name: `s${stage}_proj_bn` }).apply(skip) as tf.SymbolicTensor

    x = tf.layers.add({ name: `s${stage}_add` }).apply([main, skip]) as tf.SymbolicTensor
    x = tf.layers.reLU({ name: `s${stage}_out_relu` }).apply(x) as tf.SymbolicTensor
  }

  x = tf.layers.globalAveragePooling2d({ name: 'features' }).apply(x) as tf.SymbolicTensor
  const head = tf.layers.dense({
    units: 10,
    activation: 'softmax',
    kernelInitializer: tf.initializers.glorotUniform({ seed: seed++ }),
    name: 'head',
  }).apply(x) as tf.SymbolicTensor
  return tf.model({ inputs: input, outputs: head, name: 'tiny-resnet' })
}

function buildTinyAlexnet(): tf.LayersModel {
  let seed = 200
  const model = tf.sequential({ name: 'tiny-alexnet' })
  model.add(tf.layers.conv2d({
    inputShape: [32, 32, 3], filters: 24, kernelSize: 5, strides: 1, padding: 'same',
    activation: 'relu', kernelInitializer: tf.initializers.glorotUniform({ seed: seed++ }),
    name: 'conv1',
  }))
  model.add(tf.layers.maxPooling2d({ poolSize: 2, name: 'pool1' }))
  model.add(tf.layers.conv2d({
    filters: 48, kernelSize: 3, padding: 'same', activation: 'relu',
    kernelInitializer: tf.initializers.glorotUniform({ seed: seed++ }), name: 'conv2',
  }))
  model.add(tf.layers.maxPooling2d({ poolSize: 2, name: 'pool2' }))
  model.add(tf.layers.conv2d({
    filters: 64, kernelSize: 3, padding: 'same', activation: 'relu',
    kernelInitializer: tf.initializers.glorotUniform({ seed: seed++ }), name: 'conv3',
  }))
  model.add(tf.layers.conv2d({
    filters: 48, kernelSize: 3, padding: 'same', activation: 'relu',
    kernelInitializer: tf.initializers.glorotUniform({ seed: seed++ }), name: 'conv4',
  }))
  model.add(tf.layers.maxPooling2d({ poolSize: 2, name: 'pool3' }))
  model.add(tf.layers.flatten({ name: 'flatten' }))
  model.add(tf.layers.dense({
    units: 192, activation: 'relu',
    kernelInitializer: tf.initializers.glorotUniform({ seed: seed++ }), name: 'fc1',
  }))
  model.add(tf.layers.dropout({ rate: 0.5, name: 'drop1' }))
  model.add(tf.layers.dense({
    units: 128, activation: 'relu',
    kernelInitializer: tf.initializers.glorotUniform({ seed: seed++ }), name: 'features',
  }))
  model.add(tf.layers.dense({
    units: 10, activation: 'softmax',
    kernelInitializer: tf.initializers.glorotUniform({ seed: seed++ }), name: 'head',
  }))
  return model
}

export const MODEL_REGISTRY: Record<string, ModelSpec> = {
  'tiny-resnet': {
    name: 'tiny-resnet',
    inputSize: 32,
    penultimateDim: 64,
    featureLayer: 'features',
    build: buildTinyResnet,
  },
  'tiny-alexnet': {
    name: 'tiny-alexnet',
    inputSize: 32,
    penultimateDim: 128,
    featureLayer: 'features',
    build: buildTinyAlexnet,
  },
}

export function getModelSpec(identifier: string): ModelSpec {
  const spec = MODEL_REGISTRY[identifier]
  if (!spec) {
    const known = Object.keys(MODEL_REGISTRY).join(', ')
    throw new Error(`unknown model ${JSON.stringify(identifier)}; built-in models: ${known}`)
  }
  return spec
}
