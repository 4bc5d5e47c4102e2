import { describe, expect, it } from "vitest";

import { NpyError, encodeNpy, parseNpy } from "../src/npy.js";

function randomData(n: number, seed = 1): Float32Array {
  const out = new Float32Array(n);
  let s = seed >>> 0;
  for (let i = 0; i < n; i++) {
    s = (Math.imul(s, 1664525) + 1013904223) >>> 0;
    out[i] = (s / 2 ** 32) * 4 - 2;
  }
  return out;
}

describe("npy codec", () => {
  it("round-trips 2-D and 3-D float32 arrays bit-exactly", () => {
    for (const shape of [[3, 4], [2, 5, 7], [1, 1]]) {
      const n = shape.reduce((a, b) => a * b, 1);
      const data = randomData(n, n);
      const parsed = parseNpy(encodeNpy(shape, data));
      expect(parsed.shape).toEqual(shape);
      expect(Buffer.from(parsed.data.buffer)).toEqual(Buffer.from(data.buffer));
    }
  });

  it("writes the canonical 64-byte-aligned v1.0 header", () => {
    const buf = encodeNpy([2, 2], new Float32Array([1, 2, 3, 4]));
    expect(buf.subarray(0, 6)).toEqual(Buffer.from("\x93NUMPY", "latin1"));
    expect(buf[6]).toBe(1);
    const headerLen = buf.readUInt16LE(8);
    expect((10 + headerLen) % 64).toBe(0);
    const header = buf.subarray(10, 10 + headerLen).toString("latin1");
    expect(header).toContain("'descr': '<f4'");
    expect(header).toContain("'fortran_order': False");
    expect(header).toContain("'shape': (2, 2)");
    expect(header.endsWith("\n")).toBe(true);
  });

  it("rejects bad magic with the offset", () => {
    const buf = encodeNpy([2, 2], new Float32Array(4));
    buf[0] = 0;
    expect(() => parseNpy(buf)).toThrow(/offset 0/);
  });

  it("rejects truncated payloads", () => {
    const buf = encodeNpy([2, 2], new Float32Array(4));
    expect(() => parseNpy(buf.subarray(0, buf.length - 2))).toThrow(NpyError);
  });

  it("rejects non-float32 dtypes", () => {
    const buf = encodeNpy([2, 2], new Float32Array(4));
    const fixed = Buffer.from(
      buf.toString("latin1").replace("'descr': '<f4'", "'descr': '<f8'"),
      "latin1",
    );
    expect(() => parseNpy(fixed)).toThrow(/dtype/);
  });
});
