/** Minimal safetensors codec: u64-LE header length, JSON header mapping
 * tensor names to {dtype, shape, data_offsets}, then the raw payload.
 * The reader widens F16 to float32; the writer emits F32 (enough for tests
 * and fixture checkpoints).
 */
import { halfBitsToFloat } from "./half.js";
import { NdArray, numel } from "./tensor.js";

interface StEntry {
  dtype: "F32" | "F16";
  shape: number[];
  data_offsets: [number, number];
}

export function parseSafetensors(buf: Buffer): Map<string, NdArray> {
  if (buf.length < 8) throw new Error("safetensors file too short");
  const headerLen = Number(buf.readBigUInt64LE(0));
  if (8 + headerLen > buf.length) {
    throw new Error("safetensors header exceeds file size");
  }
  const header = JSON.parse(buf.toString("utf-8", 8, 8 + headerLen));
  const payloadStart = 8 + headerLen;
  const out = new Map<string, NdArray>();
  for (const [name, raw] of Object.entries(header)) {
    if (name === "__metadata__") continue;
    const entry = raw as StEntry;
    const [begin, end] = entry.data_offsets;
    const count = numel(entry.shape);
    const data = new Float32Array(count);
    if (entry.dtype === "F32") {
      if (end - begin !== 4 * count) throw new Error(`bad offsets for ${name}`);
      for (let i = 0; i < count; i++) {
        data[i] = buf.readFloatLE(payloadStart + begin + 4 * i);
      }
    } else if (entry.dtype === "F16") {
      if (end - begin !== 2 * count) throw new Error(`bad offsets for ${name}`);
      for (let i = 0; i < count; i++) {
        data[i] = Math.fround(
          halfBitsToFloat(buf.readUInt16LE(payloadStart + begin + 2 * i)));
      }
    } else {
      throw new Error(`unsupported safetensors dtype ${entry.dtype} on ${name}`);
    }
    out.set(name, { shape: entry.shape, data });
  }
  return out;
}

export function buildSafetensors(tensors: Map<string, NdArray>): Buffer {
  const header: Record<string, StEntry> = {};
  const blobs: Buffer[] = [];
  let offset = 0;
  for (const [name, arr] of tensors) {
    const bytes = Buffer.from(arr.data.buffer.slice(
      arr.data.byteOffset, arr.data.byteOffset + arr.data.byteLength));
    header[name] = {
      dtype: "F32",
      shape: [...arr.shape],
      data_offsets: [offset, offset + bytes.length],
    };
    blobs.push(bytes);
    offset += bytes.length;
  }
  const headerBuf = Buffer.from(JSON.stringify(header), "utf-8");
  const lenBuf = Buffer.alloc(8);
  lenBuf.writeBigUInt64LE(BigInt(headerBuf.length));
  return Buffer.concat([lenBuf, headerBuf, ...blobs]);
}
