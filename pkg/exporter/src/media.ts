/** LATZ latent writer/reader and PPM (P6) writer, matching the engine's
 * formats byte for byte. */
import { NdArray, numel } from "./tensor.js";

export function buildLatz(dims: number[], values: Float32Array, scale = 1.0): Buffer {
  if (dims.length !== 3 && dims.length !== 4) {
    throw new Error(`latent must be CHW or TCHW, got ${dims.length} dims`);
  }
  const channel = dims.length === 3 ? dims[0] : dims[1];
  if (channel !== 4) throw new Error(`channel axis must be 4, got ${channel}`);
  if (numel(dims) !== values.length) {
    throw new Error("dims do not match value count");
  }
  const head = Buffer.alloc(12 + 8 * dims.length + 4);
  head.write("LATZ", 0, "ascii");
  head.writeUInt32LE(1, 4);
  head.writeUInt32LE(dims.length, 8);
  dims.forEach((d, i) => head.writeBigUInt64LE(BigInt(d), 12 + 8 * i));
  head.writeFloatLE(scale, 12 + 8 * dims.length);
  const payload = Buffer.allocUnsafe(values.length * 4);
  for (let i = 0; i < values.length; i++) {
    payload.writeFloatLE(Math.fround(values[i] * Math.fround(scale)), 4 * i);
  }
  return Buffer.concat([head, payload]);
}

export function parseLatz(buf: Buffer): { dims: number[]; values: Float32Array; scale: number } {
  if (buf.toString("ascii", 0, 4) !== "LATZ") throw new Error("not a LATZ file");
  if (buf.readUInt32LE(4) !== 1) throw new Error("unsupported LATZ version");
  const ndim = buf.readUInt32LE(8);
  const dims: number[] = [];
  for (let i = 0; i < ndim; i++) dims.push(Number(buf.readBigUInt64LE(12 + 8 * i)));
  const scaleAt = 12 + 8 * ndim;
  const scale = buf.readFloatLE(scaleAt);
  const count = numel(dims);
  const values = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    values[i] = Math.fround(buf.readFloatLE(scaleAt + 4 + 4 * i) / scale);
  }
  return { dims, values, scale };
}

/** EMBD embedding matrix: magic, u32 version, u64 rows, u64 dim, f32 data. */
export function buildEmbd(rows: number, dim: number, values: Float32Array): Buffer {
  if (rows * dim !== values.length) {
    throw new Error(`payload ${values.length} != ${rows} x ${dim}`);
  }
  const head = Buffer.alloc(24);
  head.write("EMBD", 0, "ascii");
  head.writeUInt32LE(1, 4);
  head.writeBigUInt64LE(BigInt(rows), 8);
  head.writeBigUInt64LE(BigInt(dim), 16);
  const payload = Buffer.allocUnsafe(values.length * 4);
  for (let i = 0; i < values.length; i++) payload.writeFloatLE(values[i], 4 * i);
  return Buffer.concat([head, payload]);
}

/** Binary PPM with round-half-up quantization, values expected in [0, 1]. */
export function buildPpm(img: NdArray): Buffer {
  const [c, h, w] = img.shape;
  if (img.shape.length !== 3 || c !== 3) {
    throw new Error(`PPM image must be [3, H, W], got ${img.shape}`);
  }
  const header = Buffer.from(`P6\n${w} ${h}\n255\n`, "ascii");
  const pixels = Buffer.allocUnsafe(3 * h * w);
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      for (let ch = 0; ch < 3; ch++) {
        const v = img.data[(ch * h + y) * w + x];
        if (v < 0 || v > 1) throw new Error(`pixel ${v} outside [0, 1]`);
        pixels[(y * w + x) * 3 + ch] = Math.min(255, Math.floor(v * 255 + 0.5));
      }
    }
  }
  return Buffer.concat([header, pixels]);
}

export function parsePpm(buf: Buffer): NdArray {
  if (buf.toString("ascii", 0, 2) !== "P6") throw new Error("not a P6 PPM");
  let pos = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    while (pos < buf.length && /\s/.test(String.fromCharCode(buf[pos]))) pos++;
    if (buf[pos] === 0x23) { // comment
      while (pos < buf.length && buf[pos] !== 0x0a) pos++;
      continue;
    }
    let start = pos;
    while (pos < buf.length && !/\s/.test(String.fromCharCode(buf[pos]))) pos++;
    fields.push(parseInt(buf.toString("ascii", start, pos), 10));
  }
  pos++;
  const [w, h, maxval] = fields;
  if (maxval !== 255) throw new Error(`only maxval 255 supported, got ${maxval}`);
  const data = new Float32Array(3 * h * w);
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      for (let ch = 0; ch < 3; ch++) {
        data[(ch * h + y) * w + x] = buf[pos + (y * w + x) * 3 + ch] / 255;
      }
    }
  }
  return { shape: [3, h, w], data };
}
