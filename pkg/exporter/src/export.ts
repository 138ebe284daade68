/** Checkpoint-to-LWDC export driven by a name-mapping manifest. */
import { readFileSync } from "node:fs";

import { buildLwdc, Dtype } from "./lwdc.js";
import { ArchId, manifestFor } from "./manifests.js";
import { parseSafetensors } from "./safetensors.js";
import { NdArray, shapesEqual } from "./tensor.js";

export class MissingTensorError extends Error {}
export class ShapeMismatchError extends Error {}

export interface ExportManifest {
  src: string;
  arch: ArchId;
  /** source tensor name -> LWDC tensor name; must cover the whole arch */
  map: Record<string, string>;
  dtype: Dtype;
}

export function exportWeights(manifest: ExportManifest): Buffer {
  const source = parseSafetensors(readFileSync(manifest.src));
  return exportFromTensors(source, manifest);
}

export function exportFromTensors(
  source: Map<string, NdArray>, manifest: ExportManifest): Buffer {
  const inverse = new Map<string, string>();
  for (const [src, dst] of Object.entries(manifest.map)) {
    if (inverse.has(dst)) {
      throw new ShapeMismatchError(`duplicate mapping target ${dst}`);
    }
    inverse.set(dst, src);
  }
  const tensors: Array<[string, NdArray]> = [];
  for (const [name, shape] of manifestFor(manifest.arch)) {
    const srcName = inverse.get(name) ?? name;
    const arr = source.get(srcName);
    if (!arr) {
      throw new MissingTensorError(
        `checkpoint has no tensor ${srcName} (target ${name})`);
    }
    if (!shapesEqual(arr.shape, shape)) {
      throw new ShapeMismatchError(
        `tensor ${srcName} has shape [${arr.shape}], target ${name} needs [${shape}]`);
    }
    tensors.push([name, arr]);
  }
  return buildLwdc(manifest.arch, manifest.dtype, tensors);
}
