/** Canonical tensor manifests for the three decoder topologies.
 *
 * Name order is the contract: seeded weight streams fill tensors in exactly
 * this order, and LWDC containers are written in it.
 */

export type Entry = [name: string, shape: number[]];
export type ArchId = "refvae" | "tae192" | "tae192t";

const TAE_W = 192;
const VAE_W = 512;
const VAE_TIER_IN = [512, 512, 512, 256];
const VAE_TIER_OUT = [512, 512, 256, 128];

function conv(prefix: string, outC: number, inC: number, k = 3): Entry[] {
  return [
    [`${prefix}.weight`, [outC, inC, k, k]],
    [`${prefix}.bias`, [outC]],
  ];
}

function taeRes(prefix: string): Entry[] {
  return [1, 2, 3].flatMap((i) => conv(`${prefix}.conv${i}`, TAE_W, TAE_W));
}

function vaeRes(prefix: string, cIn: number, cOut: number): Entry[] {
  const entries: Entry[] = [
    [`${prefix}.norm1.gamma`, [cIn]],
    [`${prefix}.norm1.beta`, [cIn]],
    ...conv(`${prefix}.conv1`, cOut, cIn),
    [`${prefix}.norm2.gamma`, [cOut]],
    [`${prefix}.norm2.beta`, [cOut]],
    ...conv(`${prefix}.conv2`, cOut, cOut),
  ];
  if (cIn !== cOut) entries.push([`${prefix}.skip.weight`, [cOut, cIn, 1, 1]]);
  return entries;
}

export function manifestFor(arch: ArchId): Entry[] {
  if (arch === "tae192" || arch === "tae192t") {
    const entries: Entry[] = [...conv("in_conv", TAE_W, 4)];
    if (arch === "tae192t") {
      entries.push(...taeRes("mid.pre"));
      entries.push(["mid.attn.wq", [TAE_W, TAE_W]], ["mid.attn.wk", [TAE_W, TAE_W]]);
      entries.push(...taeRes("mid.post"));
    }
    for (let s = 0; s < 3; s++) {
      for (let b = 0; b < 3; b++) entries.push(...taeRes(`stages.${s}.blocks.${b}`));
      entries.push(...conv(`stages.${s}.up_conv`, TAE_W, TAE_W));
    }
    entries.push(...conv("out_conv", 3, TAE_W));
    return entries;
  }
  if (arch === "refvae") {
    const entries: Entry[] = [...conv("in_conv", VAE_W, 4)];
    entries.push(...vaeRes("mid.res1", VAE_W, VAE_W));
    entries.push(["mid.attn.norm.gamma", [VAE_W]], ["mid.attn.norm.beta", [VAE_W]]);
    for (const n of ["wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo"]) {
      entries.push([`mid.attn.${n}`, n.startsWith("w") ? [VAE_W, VAE_W] : [VAE_W]]);
    }
    entries.push(...vaeRes("mid.res2", VAE_W, VAE_W));
    for (let t = 0; t < VAE_TIER_OUT.length; t++) {
      const cOut = VAE_TIER_OUT[t];
      for (let r = 0; r < 3; r++) {
        const cIn = r === 0 ? VAE_TIER_IN[t] : cOut;
        entries.push(...vaeRes(`up.${t}.res.${r}`, cIn, cOut));
      }
      if (t < VAE_TIER_OUT.length - 1) {
        entries.push(...conv(`up.${t}.up_conv`, cOut, cOut));
      }
    }
    entries.push(["out_norm.gamma", [VAE_TIER_OUT[3]]], ["out_norm.beta", [VAE_TIER_OUT[3]]]);
    entries.push(...conv("out_conv", 3, VAE_TIER_OUT[3]));
    return entries;
  }
  throw new Error(`unknown architecture ${arch}`);
}

export function paramCount(arch: ArchId): number {
  return manifestFor(arch).reduce(
    (acc, [, shape]) => acc + shape.reduce((a, b) => a * b, 1), 0);
}
