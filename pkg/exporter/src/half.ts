/** float32 <-> float16 bit conversion with round-to-nearest-even. */

const f32buf = new Float32Array(1);
const u32buf = new Uint32Array(f32buf.buffer);

export class HalfOverflowError extends Error {}

/** Half-precision bits for a float32 value; throws past the f16 range. */
export function floatToHalfBits(value: number): number {
  f32buf[0] = value;
  const x = u32buf[0];
  const sign = (x >>> 16) & 0x8000;
  const exp32 = (x >>> 23) & 0xff;
  const mant = x & 0x7fffff;
  if (exp32 === 0xff) {
    throw new HalfOverflowError(`cannot store ${value} as f16`);
  }
  const e = exp32 - 127 + 15;
  if (e >= 0x1f) {
    throw new HalfOverflowError(`${value} exceeds f16 range`);
  }
  if (e <= 0) {
    if (e < -10) {
      return sign; // below the smallest subnormal: rounds to zero
    }
    const m24 = mant | 0x800000;
    const shift = 14 - e;
    const base = m24 >>> shift;
    const rem = m24 & ((1 << shift) - 1);
    const halfway = 1 << (shift - 1);
    if (rem > halfway || (rem === halfway && (base & 1))) {
      return sign | (base + 1);
    }
    return sign | base;
  }
  let half = sign | (e << 10) | (mant >>> 13);
  const roundBits = mant & 0x1fff;
  if (roundBits > 0x1000 || (roundBits === 0x1000 && (half & 1))) {
    half += 1; // may carry into the exponent, which is the correct rounding
    if (((half >>> 10) & 0x1f) === 0x1f) {
      throw new HalfOverflowError(`${value} rounds past the f16 range`);
    }
  }
  return half;
}

export function halfBitsToFloat(bits: number): number {
  const sign = bits & 0x8000 ? -1 : 1;
  const exp = (bits >>> 10) & 0x1f;
  const mant = bits & 0x3ff;
  if (exp === 0) {
    return sign * mant * 2 ** -24;
  }
  if (exp === 0x1f) {
    return mant ? Number.NaN : sign * Number.POSITIVE_INFINITY;
  }
  return sign * (1 + mant / 1024) * 2 ** (exp - 15);
}
