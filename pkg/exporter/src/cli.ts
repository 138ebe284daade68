/** Exporter CLI.
 *
 * Usage:
 *   node dist/cli.js export --src ckpt.safetensors --arch tae192 \
 *     --map mapping.json --dtype f16 --out weights.lwdc
 *   node dist/cli.js fixtures --out DIR [--weights f32,f16]
 *   node dist/cli.js fixture --name tae192_image --out DIR [--weights f32]
 */
import { readFileSync, writeFileSync } from "node:fs";

import { exportWeights, MissingTensorError, ShapeMismatchError } from "./export.js";
import { Dtype } from "./lwdc.js";
import { ArchId } from "./manifests.js";
import { STANDARD_FIXTURES, writeFixture, writeInteropProbes } from "./fixtures.js";

function parseArgs(argv: string[]): Map<string, string> {
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    if (!argv[i].startsWith("--")) throw new Error(`unexpected argument ${argv[i]}`);
    args.set(argv[i].slice(2), argv[++i] ?? "");
  }
  return args;
}

function need(args: Map<string, string>, key: string): string {
  const value = args.get(key);
  if (!value) throw new Error(`missing required --${key}`);
  return value;
}

function weightList(args: Map<string, string>): Dtype[] {
  const raw = args.get("weights");
  if (!raw) return [];
  return raw.split(",").map((d) => {
    if (d !== "f16" && d !== "f32") throw new Error(`bad dtype ${d}`);
    return d;
  });
}

function main(): number {
  const [command, ...rest] = process.argv.slice(2);
  try {
    const args = parseArgs(rest);
    if (command === "export") {
      const dtype = (args.get("dtype") ?? "f16") as Dtype;
      if (dtype !== "f16" && dtype !== "f32") throw new Error(`bad dtype ${dtype}`);
      const map = args.has("map")
        ? JSON.parse(readFileSync(need(args, "map"), "utf-8"))
        : {};
      const buf = exportWeights({
        src: need(args, "src"),
        arch: need(args, "arch") as ArchId,
        map,
        dtype,
      });
      const out = need(args, "out");
      writeFileSync(out, buf);
      console.log(`wrote ${out} (${(buf.length / 2 ** 20).toFixed(1)} MB)`);
      return 0;
    }
    if (command === "fixtures") {
      const out = need(args, "out");
      for (const spec of STANDARD_FIXTURES) {
        const written = writeFixture(spec, out, { weights: weightList(args) });
        console.log(`fixture ${spec.name}: ${written.frames} frame(s) -> ${written.dir}`);
      }
      console.log(`interop probes -> ${writeInteropProbes(out)}`);
      return 0;
    }
    if (command === "fixture") {
      const name = need(args, "name");
      const spec = STANDARD_FIXTURES.find((s) => s.name === name);
      if (!spec) throw new Error(`unknown fixture ${name}`);
      const written = writeFixture(spec, need(args, "out"),
                                   { weights: weightList(args) });
      console.log(`fixture ${spec.name}: ${written.frames} frame(s) -> ${written.dir}`);
      return 0;
    }
    console.error("usage: cli.js <export|fixtures|fixture> [flags]");
    return 2;
  } catch (err) {
    if (err instanceof MissingTensorError || err instanceof ShapeMismatchError) {
      console.error(`export error: ${(err as Error).message}`);
      return 2;
    }
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

process.exit(main());
