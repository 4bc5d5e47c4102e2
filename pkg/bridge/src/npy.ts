/**
 * Strict little-endian float32 NPY codec, byte-compatible with the engine's
 * canonical v1.0 writer (64-byte aligned headers), so files written here and
 * files written by the engine round-trip bit-exactly in both directions.
 */

const MAGIC = Buffer.from("\x93NUMPY", "latin1");

export interface NpyArray {
  shape: number[];
  /** Row-major float32 payload. */
  data: Float32Array;
}

export class NpyError extends Error {}

export function parseNpy(raw: Buffer, source = "<bytes>"): NpyArray {
  if (raw.length < 10 || !raw.subarray(0, 6).equals(MAGIC)) {
    throw new NpyError(`${source}: bad magic at offset 0`);
  }
  const major = raw[6];
  const minor = raw[7];
  if (!((major === 1 || major === 2) && minor === 0)) {
    throw new NpyError(`${source}: unsupported version ${major}.${minor} at offset 6`);
  }
  const headerLen = major === 1 ? raw.readUInt16LE(8) : raw.readUInt32LE(8);
  const headerStart = major === 1 ? 10 : 12;
  const dataStart = headerStart + headerLen;
  if (raw.length < dataStart) {
    throw new NpyError(`${source}: truncated header at offset ${headerStart}`);
  }
  const header = raw.subarray(headerStart, dataStart).toString("latin1");
  const descr = /'descr':\s*'([^']+)'/.exec(header)?.[1];
  const fortran = /'fortran_order':\s*(True|False)/.exec(header)?.[1];
  const shapeText = /'shape':\s*\(([^)]*)\)/.exec(header)?.[1];
  if (descr === undefined || fortran === undefined || shapeText === undefined) {
    throw new NpyError(`${source}: malformed header dict at offset ${headerStart}`);
  }
  if (descr !== "<f4") {
    throw new NpyError(`${source}: unsupported dtype ${descr} (only <f4)`);
  }
  if (fortran !== "False") {
    throw new NpyError(`${source}: Fortran-order layout unsupported`);
  }
  const shape = shapeText
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map((s) => {
      const v = Number(s);
      if (!Number.isInteger(v) || v < 0) {
        throw new NpyError(`${source}: bad shape entry ${s}`);
      }
      return v;
    });
  const count = shape.reduce((a, b) => a * b, 1);
  const payload = raw.subarray(dataStart);
  if (payload.length !== count * 4) {
    throw new NpyError(
      `${source}: payload is ${payload.length} bytes at offset ${dataStart}, expected ${count * 4}`,
    );
  }
  // copy into an aligned buffer before viewing as Float32Array
  const aligned = new ArrayBuffer(payload.length);
  new Uint8Array(aligned).set(payload);
  return { shape, data: new Float32Array(aligned) };
}

export function encodeNpy(shape: number[], data: Float32Array): Buffer {
  const count = shape.reduce((a, b) => a * b, 1);
  if (count !== data.length) {
    throw new NpyError(`shape [${shape}] does not match ${data.length} values`);
  }
  if (shape.length < 2 || shape.length > 3) {
    throw new NpyError(`refusing to write ${shape.length}-D array (2-D/3-D only)`);
  }
  const shapeText = `(${shape.join(", ")})`;
  let header = `{'descr': '<f4', 'fortran_order': False, 'shape': ${shapeText}, }`;
  const unpadded = 6 + 2 + 2 + header.length + 1;
  header = header + " ".repeat((64 - (unpadded % 64)) % 64) + "\n";
  const head = Buffer.alloc(10 + header.length);
  MAGIC.copy(head, 0);
  head[6] = 1;
  head[7] = 0;
  head.writeUInt16LE(header.length, 8);
  head.write(header, 10, "latin1");
  const payload = Buffer.alloc(data.length * 4);
  for (let i = 0; i < data.length; i++) {
    payload.writeFloatLE(data[i], i * 4);
  }
  return Buffer.concat([head, payload]);
}
