/** Deterministic PRNG so identical inputs always produce identical features. */

const GOLDEN = 0x9e3779b97f4a7c15n;
const MASK = 0xffffffffffffffffn;

/** FNV-1a over UTF-8 bytes, 64-bit. */
export function hashString(s: string): bigint {
  let h = 0xcbf29ce484222325n;
  for (const byte of Buffer.from(s, "utf8")) {
    h ^= BigInt(byte);
    h = (h * 0x100000001b3n) & MASK;
  }
  return h;
}

/** splitmix64 stream. */
export class SplitMix {
  private state: bigint;

  constructor(seed: bigint | string) {
    this.state = typeof seed === "string" ? hashString(seed) : seed & MASK;
  }

  nextUint64(): bigint {
    this.state = (this.state + GOLDEN) & MASK;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK;
    return z ^ (z >> 31n);
  }

  /** Uniform in [0, 1) with 53-bit resolution. */
  nextFloat(): number {
    return Number(this.nextUint64() >> 11n) / 9007199254740992;
  }

  /** Standard normal via Box-Muller; draws two uniforms per call. */
  nextGaussian(): number {
    const u = Math.max(this.nextFloat(), 1e-12);
    const v = this.nextFloat();
    return Math.sqrt(-2.0 * Math.log(u)) * Math.cos(2.0 * Math.PI * v);
  }
}
