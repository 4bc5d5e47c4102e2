export { Augmenter, BridgeError } from "./augmenter.js";
export type { AugmentedBatch, BatchShape } from "./augmenter.js";
export { NpyError, encodeNpy, parseNpy } from "./npy.js";
export type { NpyArray } from "./npy.js";
