/**
 * The closed 37-atom vocabulary of gradient-node type names used as graph
 * attributes, plus the mapping from tfjs layer classes onto it. Anything
 * that does not map is emitted as the UNKNOWN sentinel (the core loader
 * accepts it with a warning), never silently renamed.
 */

export const UNKNOWN_ATOM = 'UNKNOWN'

export const ATOM_VOCABULARY = [
  'AdaptiveAvgPool2DBackward0',
  'AdaptiveMaxPool2DBackward0',
  'AddBackward0',
  'AddmmBackward0',
  'AvgPool2DBackward0',
  'AvgPool3DBackward0',
  'CatBackward0',
  'CloneBackward0',
  'ConstantPadNdBackward0',
  'ConvolutionBackward0',
  'DivBackward0',
  'ExpandBackward0',
  'HardtanhBackward0',
  'IndexSelectBackward0',
  'MaxBackward0',
  'MaxPool2DWithIndicesBackward0',
  'MeanBackward1',
  'MulBackward0',
  'NativeBatchNormBackward0',
  'Variable',
  'PowBackward0',
  'PreluBackward0',
  'ReluBackward0',
  'RepeatBackward0',
  'ReshapeAliasBackward0',
  'SigmoidBackward0',
  'SliceBackward0',
  'SoftmaxBackward0',
  'SplitWithSizesBackward0',
  'SqueezeBackward1',
  'SumBackward1',
  'TBackward0',
  'TransposeBackward0',
  'UnsqueezeBackward0',
  'UpsampleBilinear2DBackward1',
  'UpsampleNearest2DBackward1',
  'ViewBackward0',
] as const

const ATOM_SET = new Set<string>(ATOM_VOCABULARY)

export function isKnownAtom(atom: string): boolean {
  return ATOM_SET.has(atom)
}

/** Layers that are identity at inference time and leave no trace in a runtime graph. */
const TRANSPARENT_LAYERS = new Set(['Dropout', 'SpatialDropout2D', 'GaussianNoise', 'ActivityRegularization'])

const LAYER_ATOMS: Record<string, string> = {
  InputLayer: 'Variable',
  Conv2D: 'ConvolutionBackward0',
  Conv1D: 'ConvolutionBackward0',
  DepthwiseConv2D: 'ConvolutionBackward0',
  SeparableConv2D: 'ConvolutionBackward0',
  Conv2DTranspose: 'ConvolutionBackward0',
  Dense: 'AddmmBackward0',
  BatchNormalization: 'NativeBatchNormBackward0',
  LayerNormalization: 'NativeBatchNormBackward0',
  MaxPooling2D: 'MaxPool2DWithIndicesBackward0',
  MaxPooling1D: 'MaxPool2DWithIndicesBackward0',
  AveragePooling2D: 'AvgPool2DBackward0',
  AveragePooling1D: 'AvgPool2DBackward0',
  GlobalAveragePooling2D: 'AdaptiveAvgPool2DBackward0',
  GlobalAveragePooling1D: 'AdaptiveAvgPool2DBackward0',
  GlobalMaxPooling2D: 'AdaptiveMaxPool2DBackward0',
  Add: 'AddBackward0',
  Concatenate: 'CatBackward0',
  Multiply: 'MulBackward0',
  Flatten: 'ReshapeAliasBackward0',
  Reshape: 'ViewBackward0',
  Permute: 'TransposeBackward0',
  ZeroPadding2D: 'ConstantPadNdBackward0',
  UpSampling2D: 'UpsampleNearest2DBackward1',
  Softmax: 'SoftmaxBackward0',
  ReLU: 'ReluBackward0',
  LeakyReLU: 'PreluBackward0',
  PReLU: 'PreluBackward0',
  Maximum: 'MaxBackward0',
  RepeatVector: 'RepeatBackward0',
}

const ACTIVATION_ATOMS: Record<string, string> = {
  relu: 'ReluBackward0',
  relu6: 'HardtanhBackward0',
  sigmoid: 'SigmoidBackward0',
  softmax: 'SoftmaxBackward0',
  prelu: 'PreluBackward0',
}

export interface LayerAtoms {
  /** Atom chain this layer contributes, in data-flow order; empty for transparent layers. */
  atoms: string[]
  /** Class or activation names that had no vocabulary entry. */
  unknown: string[]
}

/**
 * Atoms contributed by one layer: the main operation, then the fused
 * activation when the layer config carries one.
 */
export function layerToAtoms(className: string, activation?: string | null): LayerAtoms {
  const unknown: string[] = []
  const atoms: string[] = []

  if (TRANSPARENT_LAYERS.has(className)) {
    return { atoms, unknown }
  }
  if (className === 'Activation') {
    if (!activation || activation === 'linear') {
      return { atoms, unknown }
    }
    const atom = ACTIVATION_ATOMS[activation]
    if (atom) {
      atoms.push(atom)
    } else {
      atoms.push(UNKNOWN_ATOM)
      unknown.push(activation)
    }
    return { atoms, unknown }
  }

  const main = LAYER_ATOMS[className]
  if (main) {
    atoms.push(main)
  } else {
    atoms.push(UNKNOWN_ATOM)
    unknown.push(className)
  }

  if (activation && activation !== 'linear') {
    const act = ACTIVATION_ATOMS[activation]
    if (act) {
      atoms.push(act)
    } else {
      atoms.push(UNKNOWN_ATOM)
      unknown.push(activation)
    }
  }
  return { atoms, unknown }
}
