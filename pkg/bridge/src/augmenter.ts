/**
 * Batch augmentation client.
 *
 * The engine is consumed strictly through its external interfaces: the
 * `causaug` CLI, NPY files and JSON sidecars. Each augmentBatch call writes
 * the batch as one NPY slice per sample, invokes `causaug augment` with the
 * per-iteration pair index, and reads the paired views (and blending maps)
 * back. Outputs are therefore bitwise identical to what the CLI produces for
 * the same config, seed and slice order.
 */

import { spawnSync } from "node:child_process";
import { mkdirSync, mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { NpyError, encodeNpy, parseNpy } from "./npy.js";

export interface BatchShape {
  samples: number;
  channels: number;
  height: number;
  width: number;
}

export interface AugmentedBatch {
  /** First views, [samples * channels * height * width], row-major. */
  t1: Float32Array;
  /** Second views, same layout. */
  t2: Float32Array;
  /** Blending maps, [samples * height * width]. */
  maps: Float32Array;
  shape: BatchShape;
}

export class BridgeError extends Error {}

function cliCommand(): string[] {
  const env = process.env.CAUSAUG_CLI;
  if (env && env.trim().length > 0) {
    return env.trim().split(/\s+/);
  }
  return ["causaug"];
}

export class Augmenter {
  private readonly config: Record<string, unknown>;
  readonly seed: number;

  constructor(config: string | Record<string, unknown>, seed: number) {
    if (!Number.isInteger(seed) || seed < 0) {
      throw new BridgeError(`seed must be a non-negative integer, got ${seed}`);
    }
    const parsed = typeof config === "string" ? JSON.parse(config) : config;
    if (parsed === null || typeof parsed !== "object" || Array.isArray(parsed)) {
      throw new BridgeError("config must be a JSON object");
    }
    this.config = { ...(parsed as Record<string, unknown>), seed };
    this.seed = seed;
  }

  /**
   * Augment a contiguous float32 batch of shape [samples, 1, height, width].
   * `iteration` selects the per-iteration substream: sample i of iteration t
   * is reproducible as CLI pair index t for slice index i.
   */
  augmentBatch(images: Float32Array, shape: BatchShape, iteration: number): AugmentedBatch {
    const { samples, channels, height, width } = shape;
    if (!(images instanceof Float32Array)) {
      throw new BridgeError("images must be a Float32Array");
    }
    if (channels !== 1) {
      throw new BridgeError(`only single-channel batches cross the file interface, got channels=${channels}`);
    }
    if (!Number.isInteger(iteration) || iteration < 0) {
      throw new BridgeError(`iteration must be a non-negative integer, got ${iteration}`);
    }
    const per = channels * height * width;
    if (images.length !== samples * per) {
      throw new BridgeError(
        `batch length ${images.length} does not match shape ${samples}x${channels}x${height}x${width}`,
      );
    }
    if (samples === 0) {
      return { t1: new Float32Array(0), t2: new Float32Array(0), maps: new Float32Array(0), shape };
    }

    const work = mkdtempSync(join(tmpdir(), "causaug-bridge-"));
    try {
      const inDir = join(work, "in");
      const outDir = join(work, "out");
      const cfgPath = join(work, "config.json");
      writeFileSync(cfgPath, JSON.stringify(this.config));
      mkdirSync(inDir);
      for (let i = 0; i < samples; i++) {
        const slice = images.subarray(i * per, (i + 1) * per);
        writeFileSync(join(inDir, `s${String(i).padStart(4, "0")}.npy`), encodeNpy([height, width], slice));
      }

      const [cmd, ...baseArgs] = cliCommand();
      const args = [
        ...baseArgs,
        "augment",
        "--input", inDir,
        "--out", outDir,
        "--pairs", "1",
        "--pair-start", String(iteration),
        "--emit-maps",
        "--config", cfgPath,
      ];
      const run = spawnSync(cmd, args, { encoding: "utf8" });
      if (run.error) {
        throw new BridgeError(`failed to launch engine CLI '${cmd}': ${run.error.message}`);
      }
      if (run.status !== 0) {
        throw new BridgeError(`engine CLI exited ${run.status}: ${run.stderr || run.stdout}`);
      }

      const t1 = new Float32Array(samples * per);
      const t2 = new Float32Array(samples * per);
      const maps = new Float32Array(samples * height * width);
      const pairTag = `p${String(iteration).padStart(2, "0")}`;
      for (let i = 0; i < samples; i++) {
        const stem = `s${String(i).padStart(4, "0")}_${pairTag}`;
        t1.set(this.readPlane(join(outDir, `${stem}_t1.npy`), height, width), i * per);
        t2.set(this.readPlane(join(outDir, `${stem}_t2.npy`), height, width), i * per);
        maps.set(this.readPlane(join(outDir, `${stem}_map.npy`), height, width), i * height * width);
      }
      return { t1, t2, maps, shape };
    } finally {
      rmSync(work, { recursive: true, force: true });
    }
  }

  private readPlane(path: string, height: number, width: number): Float32Array {
    let arr;
    try {
      arr = parseNpy(readFileSync(path), path);
    } catch (err) {
      if (err instanceof NpyError) throw new BridgeError(err.message);
      throw new BridgeError(`${path}: ${(err as Error).message}`);
    }
    if (arr.shape.length !== 2 || arr.shape[0] !== height || arr.shape[1] !== width) {
      throw new BridgeError(`${path}: unexpected shape [${arr.shape}]`);
    }
    return arr.data;
  }
}
