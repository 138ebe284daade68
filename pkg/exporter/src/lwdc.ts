/** LWDC weight container writer/reader.
 *
 * Layout (little-endian): "LWDC", u32 version (=1), u64 header length, UTF-8
 * JSON header {arch, dtype, tensors:[{name,dtype,shape,offset,length}]},
 * zero padding to the next 8-byte file offset, payload. Tensor offsets are
 * relative to the payload start and 8-byte aligned.
 */
import { floatToHalfBits, halfBitsToFloat } from "./half.js";
import { NdArray, numel } from "./tensor.js";

export const LWDC_MAGIC = "LWDC";
export const LWDC_VERSION = 1;

export type Dtype = "f16" | "f32";

interface ManifestEntry {
  name: string;
  dtype: Dtype;
  shape: number[];
  offset: number;
  length: number;
}

function align8(n: number): number {
  return (n + 7) & ~7;
}

function encodeTensor(arr: NdArray, dtype: Dtype): Buffer {
  if (dtype === "f32") {
    return Buffer.from(arr.data.buffer.slice(
      arr.data.byteOffset, arr.data.byteOffset + arr.data.byteLength));
  }
  const buf = Buffer.allocUnsafe(arr.data.length * 2);
  for (let i = 0; i < arr.data.length; i++) {
    buf.writeUInt16LE(floatToHalfBits(arr.data[i]), i * 2);
  }
  return buf;
}

export function buildLwdc(
  arch: string, dtype: Dtype, tensors: Array<[string, NdArray]>): Buffer {
  const entries: ManifestEntry[] = [];
  const blobs: Array<[number, Buffer]> = [];
  let offset = 0;
  for (const [name, arr] of tensors) {
    const raw = encodeTensor(arr, dtype);
    offset = align8(offset);
    entries.push({ name, dtype, shape: [...arr.shape], offset, length: raw.length });
    blobs.push([offset, raw]);
    offset += raw.length;
  }
  const header = Buffer.from(
    JSON.stringify({ arch, dtype, tensors: entries }, null, 1), "utf-8");
  const payloadStart = align8(16 + header.length);
  const payload = Buffer.alloc(blobs.length ? align8(offset) : 0);
  for (const [at, raw] of blobs) {
    raw.copy(payload, at);
  }
  const head = Buffer.alloc(payloadStart);
  head.write(LWDC_MAGIC, 0, "ascii");
  head.writeUInt32LE(LWDC_VERSION, 4);
  head.writeBigUInt64LE(BigInt(header.length), 8);
  header.copy(head, 16);
  return Buffer.concat([head, payload]);
}

export interface LwdcFile {
  arch: string;
  dtype: Dtype;
  names: string[];
  tensor(name: string): NdArray;
}

/** Parse an LWDC buffer; f16 payloads widen to float32. */
export function parseLwdc(buf: Buffer): LwdcFile {
  if (buf.length < 16 || buf.toString("ascii", 0, 4) !== LWDC_MAGIC) {
    throw new Error("not an LWDC container");
  }
  const version = buf.readUInt32LE(4);
  if (version !== LWDC_VERSION) {
    throw new Error(`unsupported LWDC version ${version}`);
  }
  const headerLen = Number(buf.readBigUInt64LE(8));
  const header = JSON.parse(buf.toString("utf-8", 16, 16 + headerLen));
  const payloadStart = align8(16 + headerLen);
  const entries: ManifestEntry[] = header.tensors;
  const byName = new Map(entries.map((e) => [e.name, e]));
  return {
    arch: header.arch,
    dtype: header.dtype,
    names: entries.map((e) => e.name),
    tensor(name: string): NdArray {
      const entry = byName.get(name);
      if (!entry) throw new Error(`no tensor ${name}`);
      const start = payloadStart + entry.offset;
      const count = numel(entry.shape);
      const out = new Float32Array(count);
      if (entry.dtype === "f32") {
        for (let i = 0; i < count; i++) out[i] = buf.readFloatLE(start + 4 * i);
      } else {
        for (let i = 0; i < count; i++) {
          out[i] = Math.fround(halfBitsToFloat(buf.readUInt16LE(start + 2 * i)));
        }
      }
      return { shape: [...entry.shape], data: out };
    },
  };
}
