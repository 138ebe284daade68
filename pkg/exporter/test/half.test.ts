import { describe, expect, it } from "vitest";

import { floatToHalfBits, halfBitsToFloat, HalfOverflowError } from "../src/half.js";

// Probe pairs frozen from a trusted round-to-nearest-even f16 implementation.
const PROBES: Array<[number, number]> = [
  [0.10000000149011612, 0x2e66],
  [1.0, 0x3c00],
  [-2.5, 0xc100],
  [65504.0, 0x7bff],
  [3.0517578125e-5, 0x0200],
  [1.0000000116860974e-7, 0x0002], // subnormal rounding
  [2.9802322387695312e-8, 0x0000], // exactly 2^-25: ties to even -> zero
  [-0.3333333432674408, 0xb555],
  [1.0 + 2 ** -11, 0x3c00], // tie, rounds to even mantissa
  [1.0 + 3 * 2 ** -12, 0x3c01],
  [0.0, 0x0000],
];

describe("float16 conversion", () => {
  it("matches the frozen probe table", () => {
    for (const [value, bits] of PROBES) {
      expect(floatToHalfBits(value), `bits of ${value}`).toBe(bits);
    }
  });

  it("round trips representable values exactly", () => {
    for (const bits of [0x2e66, 0x3c00, 0x0200, 0x0002, 0x7bff, 0x8001]) {
      const value = halfBitsToFloat(bits);
      expect(floatToHalfBits(Math.fround(value))).toBe(bits);
    }
  });

  it("bounds the quantization error at 2^-10 relative in [-1, 1]", () => {
    for (let i = 0; i < 2000; i++) {
      const v = Math.fround((i / 1000 - 1) * 0.999 + 1e-4);
      const back = halfBitsToFloat(floatToHalfBits(v));
      expect(Math.abs(back - v)).toBeLessThanOrEqual(Math.abs(v) * 2 ** -10);
    }
  });

  it("rejects values beyond the f16 range", () => {
    expect(() => floatToHalfBits(70000)).toThrow(HalfOverflowError);
    expect(() => floatToHalfBits(65520)).toThrow(HalfOverflowError);
    expect(() => floatToHalfBits(Infinity)).toThrow(HalfOverflowError);
  });
});
