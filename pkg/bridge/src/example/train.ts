/**
 * Documentation-grade example: wiring augmented view pairs into a training
 * step of a user-supplied model.
 *
 * The "model" is a per-pixel logistic classifier (two classes, one intensity
 * feature), trained with the engine's consistency recipe: segmentation loss
 * (cross-entropy + soft Dice) on both augmented views plus a weighted KL
 * divergence between their predicted distributions. Real integrations swap in
 * their own network and optimizer; the structure of the step stays the same.
 */

import { Augmenter, BatchShape } from "../augmenter.js";

const H = 16;
const W = 16;
const SAMPLES = 4;
const CLASSES = 2;
const DIV_WEIGHT = 1.0;

/** Small deterministic PRNG so runs are reproducible without the engine. */
function lcg(seed: number): () => number {
  let state = (seed >>> 0) || 1;
  return () => {
    state = (Math.imul(state, 1664525) + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}

export interface SyntheticBatch {
  images: Float32Array;
  labels: Uint8Array; // [SAMPLES * H * W]
  shape: BatchShape;
}

export function makeBatch(seed: number): SyntheticBatch {
  const rand = lcg(seed);
  const images = new Float32Array(SAMPLES * H * W);
  const labels = new Uint8Array(SAMPLES * H * W);
  for (let s = 0; s < SAMPLES; s++) {
    const cy = 5 + rand() * 6;
    const cx = 5 + rand() * 6;
    const r = 3 + rand() * 3;
    const base = s * H * W;
    let sum = 0;
    let sumSq = 0;
    for (let y = 0; y < H; y++) {
      for (let x = 0; x < W; x++) {
        const inside = (y - cy) ** 2 + (x - cx) ** 2 <= r * r;
        const v = inside ? 0.8 : 0.2;
        images[base + y * W + x] = v;
        labels[base + y * W + x] = inside ? 1 : 0;
        sum += v;
        sumSq += v * v;
      }
    }
    const mean = sum / (H * W);
    const std = Math.sqrt(Math.max(sumSq / (H * W) - mean * mean, 1e-12));
    for (let i = 0; i < H * W; i++) {
      images[base + i] = (images[base + i] - mean) / std;
    }
  }
  return { images, labels, shape: { samples: SAMPLES, channels: 1, height: H, width: W } };
}

interface Model {
  w: Float64Array; // per-class weight on the intensity feature
  b: Float64Array;
}

function softmax2(l0: number, l1: number): [number, number] {
  const m = Math.max(l0, l1);
  const e0 = Math.exp(l0 - m);
  const e1 = Math.exp(l1 - m);
  const z = e0 + e1;
  return [e0 / z, e1 / z];
}

interface ViewEval {
  seg: number;
  probs: Float64Array; // [n * CLASSES]
  dlogits: Float64Array; // segmentation gradient w.r.t. logits
}

/** Cross-entropy + soft Dice (smoothing 1.0) with the logit gradient. */
function segLoss(view: Float32Array, labels: Uint8Array, model: Model): ViewEval {
  const n = view.length;
  const probs = new Float64Array(n * CLASSES);
  const dlogits = new Float64Array(n * CLASSES);
  let ce = 0;
  const sumP = [0, 0];
  const sumPy = [0, 0];
  const sumY = [0, 0];
  for (let q = 0; q < n; q++) {
    const [p0, p1] = softmax2(
      model.w[0] * view[q] + model.b[0],
      model.w[1] * view[q] + model.b[1],
    );
    probs[q * 2] = p0;
    probs[q * 2 + 1] = p1;
    const y = labels[q];
    ce -= Math.log(Math.max(y === 0 ? p0 : p1, 1e-8));
    dlogits[q * 2] = (p0 - (y === 0 ? 1 : 0)) / n;
    dlogits[q * 2 + 1] = (p1 - (y === 1 ? 1 : 0)) / n;
    sumP[0] += p0;
    sumP[1] += p1;
    sumY[y] += 1;
    sumPy[y] += y === 0 ? p0 : p1;
  }
  ce /= n;
  let dice = 0;
  const num = [0, 0];
  const den = [0, 0];
  for (let c = 0; c < CLASSES; c++) {
    num[c] = 2 * sumPy[c] + 1.0;
    den[c] = sumP[c] + sumY[c] + 1.0;
    dice += num[c] / den[c];
  }
  const diceLoss = 1 - dice / CLASSES;
  // d(diceLoss)/dp_c(q) = -(2*y_c(q)*den - num) / (den^2 * CLASSES), chained
  // through the softmax jacobian
  for (let q = 0; q < n; q++) {
    const p = [probs[q * 2], probs[q * 2 + 1]];
    const y = labels[q];
    const gp = [0, 0];
    for (let c = 0; c < CLASSES; c++) {
      const yc = y === c ? 1 : 0;
      gp[c] = -(2 * yc * den[c] - num[c]) / (den[c] * den[c] * CLASSES);
    }
    const inner = gp[0] * p[0] + gp[1] * p[1];
    dlogits[q * 2] += p[0] * (gp[0] - inner);
    dlogits[q * 2 + 1] += p[1] * (gp[1] - inner);
  }
  return { seg: ce + diceLoss, probs, dlogits };
}

/** Mean per-pixel KL(p1 || p2) and its gradients w.r.t. both logit sets. */
function klLoss(a: ViewEval, b: ViewEval): { kl: number; dA: Float64Array; dB: Float64Array } {
  const n = a.probs.length / CLASSES;
  const dA = new Float64Array(n * CLASSES);
  const dB = new Float64Array(n * CLASSES);
  let kl = 0;
  for (let q = 0; q < n; q++) {
    let pixel = 0;
    const lr = [0, 0];
    for (let c = 0; c < CLASSES; c++) {
      const pi = Math.max(a.probs[q * 2 + c], 1e-8);
      const pj = Math.max(b.probs[q * 2 + c], 1e-8);
      lr[c] = Math.log(pi) - Math.log(pj);
      pixel += a.probs[q * 2 + c] * lr[c];
    }
    kl += pixel;
    for (let c = 0; c < CLASSES; c++) {
      dA[q * 2 + c] = (a.probs[q * 2 + c] * (lr[c] - pixel)) / n;
      dB[q * 2 + c] = (b.probs[q * 2 + c] - a.probs[q * 2 + c]) / n;
    }
  }
  return { kl: kl / n, dA, dB };
}

function applyGradient(model: Model, view: Float32Array, dlogits: Float64Array, lr: number): void {
  const n = view.length;
  const gw = [0, 0];
  const gb = [0, 0];
  for (let q = 0; q < n; q++) {
    for (let c = 0; c < CLASSES; c++) {
      gw[c] += dlogits[q * 2 + c] * view[q];
      gb[c] += dlogits[q * 2 + c];
    }
  }
  for (let c = 0; c < CLASSES; c++) {
    model.w[c] -= lr * gw[c];
    model.b[c] -= lr * gb[c];
  }
}

export interface SmokeResult {
  losses: number[];
  model: { w: number[]; b: number[] };
}

export function runSmoke(seed: number, iterations = 10): SmokeResult {
  const augmenter = new Augmenter({ gin: { n_layers: 2 }, ipa_enabled: true }, seed);
  const batch = makeBatch(seed);
  const model: Model = { w: new Float64Array(CLASSES), b: new Float64Array(CLASSES) };
  const losses: number[] = [];
  const per = H * W;
  for (let t = 0; t < iterations; t++) {
    const lr = 2.0 * (1 - t / iterations);
    const { t1, t2 } = augmenter.augmentBatch(batch.images, batch.shape, t);
    let total = 0;
    for (let s = 0; s < SAMPLES; s++) {
      const v1 = t1.subarray(s * per, (s + 1) * per);
      const v2 = t2.subarray(s * per, (s + 1) * per);
      const y = batch.labels.subarray(s * per, (s + 1) * per);
      const e1 = segLoss(v1, y, model);
      const e2 = segLoss(v2, y, model);
      const { kl, dA, dB } = klLoss(e1, e2);
      total += e1.seg + e2.seg + DIV_WEIGHT * kl;
      const d1 = e1.dlogits.map((g, i) => g + DIV_WEIGHT * dA[i]);
      const d2 = e2.dlogits.map((g, i) => g + DIV_WEIGHT * dB[i]);
      applyGradient(model, v1, d1, lr / SAMPLES);
      applyGradient(model, v2, d2, lr / SAMPLES);
    }
    losses.push(total / SAMPLES);
  }
  return { losses, model: { w: Array.from(model.w), b: Array.from(model.b) } };
}

const isMain = process.argv[1]?.endsWith("train.js") ?? false;
if (isMain) {
  const seed = Number(process.argv[2] ?? 7);
  const result = runSmoke(seed);
  for (const [i, loss] of result.losses.entries()) {
    console.log(`iter ${i}: loss ${loss.toFixed(4)}`);
  }
  const head = result.losses.slice(0, 3).reduce((a, b) => a + b, 0) / 3;
  const tail = result.losses.slice(-3).reduce((a, b) => a + b, 0) / 3;
  console.log(`first-3 mean ${head.toFixed(4)} -> last-3 mean ${tail.toFixed(4)}`);
}
