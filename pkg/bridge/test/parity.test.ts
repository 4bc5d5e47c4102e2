/**
 * Binding parity acceptance: augmentBatch output must be bitwise identical to
 * what the engine CLI writes for the same corpus, config and seed.
 */

import { spawnSync } from "node:child_process";
import { mkdirSync, mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, describe, expect, it } from "vitest";

import { Augmenter, BatchShape } from "../src/augmenter.js";
import { encodeNpy, parseNpy } from "../src/npy.js";

const H = 32;
const W = 32;
const SLICES = 20;
const SEED = 1234;

const CONFIGS: Array<{ name: string; config: Record<string, unknown> }> = [
  { name: "default-bspline", config: {} },
  { name: "superpixel", config: { map: { kind: "superpixel", felz: { scale: 60, min_size: 8, sigma: 0.8 } } } },
  { name: "randconv-no-blend", config: { gin: { n_layers: 1, hidden_channels: 1 }, ipa_enabled: false } },
];

function cli(): string[] {
  const env = process.env.CAUSAUG_CLI;
  return env && env.trim() ? env.trim().split(/\s+/) : ["causaug"];
}

function makeCorpus(): Float32Array {
  const data = new Float32Array(SLICES * H * W);
  let s = 987654321 >>> 0;
  for (let i = 0; i < data.length; i++) {
    // Box-Muller-free bounded noise is fine here; the engine only needs
    // nonzero finite slices
    s = (Math.imul(s, 1664525) + 1013904223) >>> 0;
    data[i] = (s / 2 ** 32) * 2 - 1;
  }
  return data;
}

const scratch: string[] = [];
afterAll(() => {
  for (const d of scratch) rmSync(d, { recursive: true, force: true });
});

describe("binding parity with the CLI", () => {
  const corpus = makeCorpus();
  const shape: BatchShape = { samples: SLICES, channels: 1, height: H, width: W };

  for (const { name, config } of CONFIGS) {
    it(`matches CLI bytes under config '${name}'`, () => {
      // reference: invoke the CLI directly on a slice directory
      const work = mkdtempSync(join(tmpdir(), "parity-"));
      scratch.push(work);
      const inDir = join(work, "in");
      const outDir = join(work, "out");
      mkdirSync(inDir);
      for (let i = 0; i < SLICES; i++) {
        const slice = corpus.subarray(i * H * W, (i + 1) * H * W);
        writeFileSync(join(inDir, `s${String(i).padStart(4, "0")}.npy`), encodeNpy([H, W], slice));
      }
      const cfgPath = join(work, "config.json");
      writeFileSync(cfgPath, JSON.stringify({ ...config, seed: SEED }));
      const [cmd, ...base] = cli();
      const run = spawnSync(cmd, [
        ...base, "augment",
        "--input", inDir, "--out", outDir,
        "--pairs", "1", "--emit-maps", "--config", cfgPath,
      ], { encoding: "utf8" });
      expect(run.status, run.stderr).toBe(0);

      // bridge path
      const augmenter = new Augmenter(config, SEED);
      const got = augmenter.augmentBatch(corpus, shape, 0);

      for (let i = 0; i < SLICES; i++) {
        const stem = join(outDir, `s${String(i).padStart(4, "0")}_p00`);
        for (const [field, view] of [["t1", got.t1], ["t2", got.t2]] as const) {
          const ref = parseNpy(readFileSync(`${stem}_${field}.npy`));
          const slice = view.subarray(i * H * W, (i + 1) * H * W);
          expect(Buffer.from(slice.slice().buffer).equals(Buffer.from(ref.data.buffer)),
            `${name} slice ${i} ${field}`).toBe(true);
        }
        const refMap = parseNpy(readFileSync(`${stem}_map.npy`));
        const mapSlice = got.maps.subarray(i * H * W, (i + 1) * H * W);
        expect(Buffer.from(mapSlice.slice().buffer).equals(Buffer.from(refMap.data.buffer)),
          `${name} slice ${i} map`).toBe(true);
      }
    });
  }

  it("addresses per-iteration substreams like CLI pair indices", () => {
    const augmenter = new Augmenter({}, SEED);
    const iter0 = augmenter.augmentBatch(corpus, shape, 0);
    const iter3 = augmenter.augmentBatch(corpus, shape, 3);
    expect(Buffer.from(iter0.t1.slice().buffer).equals(Buffer.from(iter3.t1.slice().buffer))).toBe(false);
    const again = augmenter.augmentBatch(corpus, shape, 3);
    expect(Buffer.from(again.t1.slice().buffer).equals(Buffer.from(iter3.t1.slice().buffer))).toBe(true);
  });
});
