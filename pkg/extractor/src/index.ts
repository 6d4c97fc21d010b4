export { ATOM_VOCABULARY, UNKNOWN_ATOM, isKnownAtom, layerToAtoms } from './atoms'
export { extractGraph, writeGraph, graphToString } from './graph'
export { extractFeatures, imageToTensor, loadProbeImages } from './features'
export { extractProxy, frozenEncoder, ENCODER_ID, ENCODER_DIM } from './proxy'
export { scanTaskFolder, sampleProbe } from './dataset'
export { decodeNetpbm, readImage, writeNetpbm } from './imageio'
export { writeFeatureCsv, writeVectorCsv, writeJson, stableStringify } from './csv'
export { MODEL_REGISTRY, getModelSpec } from './models'
export { Rng, deriveSeed } from './rng'
