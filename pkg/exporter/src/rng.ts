/** Deterministic fixture value streams.
 *
 * splitmix64 with the upper 53 bits mapped to a double in [0, 1). The exact
 * sequence is part of the fixture contract: the engine under test regenerates
 * fixture weights from the same rule, so every arithmetic step here must be
 * reproducible from the written description alone (64-bit wrapping adds and
 * multiplies, xor-shifts, (u >> 11) / 2^53, then IEEE double ops).
 */

const MASK = (1n << 64n) - 1n;
const GAMMA = 0x9e3779b97f4a7c15n;
const MIX1 = 0xbf58476d1ce4e5b9n;
const MIX2 = 0x94d049bb133111ebn;

export class SplitMix64 {
  private state: bigint;

  constructor(seed: bigint | number) {
    this.state = BigInt(seed) & MASK;
  }

  nextU64(): bigint {
    this.state = (this.state + GAMMA) & MASK;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * MIX1) & MASK;
    z = ((z ^ (z >> 27n)) * MIX2) & MASK;
    return z ^ (z >> 31n);
  }

  /** Double in [0, 1) from the top 53 bits. */
  nextDouble(): number {
    return Number(this.nextU64() >> 11n) / 2 ** 53;
  }
}

/** Fixture weights: uniform [-0.05, 0.05) doubles rounded to float32. */
export function uniformWeightStream(seed: number, count: number): Float32Array {
  const rng = new SplitMix64(seed);
  const out = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    out[i] = Math.fround(rng.nextDouble() * 0.1 - 0.05);
  }
  return out;
}

/** Fixture latents: uniform [-1, 1) doubles rounded to float32. */
export function uniformLatentStream(seed: number, count: number): Float32Array {
  const rng = new SplitMix64(seed);
  const out = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    out[i] = Math.fround(rng.nextDouble() * 2.0 - 1.0);
  }
  return out;
}
