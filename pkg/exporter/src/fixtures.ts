/** Golden fixture generation.
 *
 * A fixture is a directory holding the latent (LATZ), the reference decoded
 * outputs (PPM, computed by the reference implementation here), and a
 * fixture.json describing how to regenerate the weights: either the
 * "splitmix-uniform-v1" stream (seeded splitmix64 doubles mapped to
 * [-0.05, 0.05) float32, filling the canonical manifest in order) or
 * "zeros-bias-half-v1" (all zeros, output conv bias 0.5). A sha256 over the
 * little-endian f32 weight bytes pins the stream so both implementations
 * can prove they built the same model. Full LWDC weight containers are
 * 20-190 MB and are only written when asked for.
 */
import { createHash } from "node:crypto";
import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { buildLwdc, Dtype } from "./lwdc.js";
import { buildEmbd, buildLatz, buildPpm } from "./media.js";
import { ArchId, manifestFor, paramCount } from "./manifests.js";
import { decode, Params, paramsFromStream } from "./reference.js";
import { uniformLatentStream, uniformWeightStream } from "./rng.js";
import { NdArray, numel } from "./tensor.js";

export type WeightRule = "splitmix-uniform-v1" | "zeros-bias-half-v1";

export interface FixtureSpec {
  name: string;
  arch: ArchId;
  seed: number;
  latentDims: number[];
  weightRule: WeightRule;
}

export const STANDARD_FIXTURES: FixtureSpec[] = [
  { name: "tae192_image", arch: "tae192", seed: 1001,
    latentDims: [4, 8, 8], weightRule: "splitmix-uniform-v1" },
  { name: "tae192t_video", arch: "tae192t", seed: 2002,
    latentDims: [8, 4, 8, 8], weightRule: "splitmix-uniform-v1" },
  { name: "refvae_image", arch: "refvae", seed: 3003,
    latentDims: [4, 8, 8], weightRule: "splitmix-uniform-v1" },
  { name: "tae192_zero", arch: "tae192", seed: 0,
    latentDims: [4, 8, 8], weightRule: "zeros-bias-half-v1" },
];

export function weightStream(spec: FixtureSpec): Float32Array {
  const count = paramCount(spec.arch);
  if (spec.weightRule === "splitmix-uniform-v1") {
    return uniformWeightStream(spec.seed, count);
  }
  const values = new Float32Array(count);
  let at = 0;
  for (const [name, shape] of manifestFor(spec.arch)) {
    const n = numel(shape);
    if (name === "out_conv.bias") values.fill(0.5, at, at + n);
    at += n;
  }
  return values;
}

export function fixtureParams(spec: FixtureSpec): Params {
  return paramsFromStream(spec.arch, weightStream(spec));
}

export function fixtureLatent(spec: FixtureSpec): NdArray {
  // latent stream seeded independently of the weights
  const values = uniformLatentStream(spec.seed + 1, numel(spec.latentDims));
  return { shape: [...spec.latentDims], data: values };
}

function sha256(data: Float32Array): string {
  return createHash("sha256")
    .update(Buffer.from(data.buffer, data.byteOffset, data.byteLength))
    .digest("hex");
}

export interface WrittenFixture {
  dir: string;
  frames: number;
}

export function writeFixture(
  spec: FixtureSpec, outRoot: string,
  options: { weights?: Dtype[] } = {}): WrittenFixture {
  const dir = join(outRoot, spec.name);
  mkdirSync(dir, { recursive: true });
  const weights = weightStream(spec);
  const params = paramsFromStream(spec.arch, weights);
  const latent = fixtureLatent(spec);
  writeFileSync(join(dir, "latent.latz"), buildLatz(latent.shape, latent.data, 1.0));
  const frames = decode(params, spec.arch, latent);
  frames.forEach((frame, i) => {
    writeFileSync(join(dir, `ref_${String(i).padStart(4, "0")}.ppm`),
                  buildPpm(frame));
  });
  const meta = {
    arch: spec.arch,
    seed: spec.seed,
    latent_dims: spec.latentDims,
    latent_scale: 1.0,
    weight_rule: spec.weightRule,
    weight_sha256: sha256(weights),
    frames: frames.length,
    tolerance: { f32: 1e-3, f16: 1e-2 },
  };
  writeFileSync(join(dir, "fixture.json"), JSON.stringify(meta, null, 2) + "\n");
  for (const dtype of options.weights ?? []) {
    const tensors: Array<[string, NdArray]> = [];
    for (const [name] of manifestFor(spec.arch)) {
      const arr = params.get(name);
      if (!arr) throw new Error(`missing ${name}`);
      tensors.push([name, arr]);
    }
    writeFileSync(join(dir, `weights.${dtype}.lwdc`),
                  buildLwdc(spec.arch, dtype, tensors));
  }
  return { dir, frames: frames.length };
}

/** Tiny containers written by this implementation so the engine's tests can
 * prove it parses foreign-produced LWDC/EMBD files bit-correctly. */
export function writeInteropProbes(outRoot: string): string {
  const dir = join(outRoot, "interop");
  mkdirSync(dir, { recursive: true });
  const values = uniformWeightStream(424242, 40);
  const tensors: Array<[string, NdArray]> = [
    ["probe.matrix", { shape: [2, 3, 2, 3], data: values.slice(0, 36) }],
    ["probe.vector", { shape: [4], data: values.slice(36, 40) }],
  ];
  writeFileSync(join(dir, "probe.f32.lwdc"), buildLwdc("probe", "f32", tensors));
  writeFileSync(join(dir, "probe.f16.lwdc"), buildLwdc("probe", "f16", tensors));
  const emb = uniformLatentStream(424243, 12);
  writeFileSync(join(dir, "probe.embd"), buildEmbd(4, 3, emb));
  const meta = {
    weight_rule: "splitmix-uniform-v1",
    weight_seed: 424242,
    weight_count: 40,
    tensor_names: tensors.map(([n]) => n),
    embd_rule: "splitmix-latent-v1",
    embd_seed: 424243,
    embd_rows: 4,
    embd_dim: 3,
  };
  writeFileSync(join(dir, "probe.json"), JSON.stringify(meta, null, 2) + "\n");
  return dir;
}
