/** Independent reference implementation of the three decoder topologies.
 *
 * Deliberately written as plain scalar loops (double accumulation, float32
 * storage per layer) so golden outputs come from a computation path that
 * shares nothing with the engine under test: same padding (3x3 convs pad 1,
 * 1x1 skips pad 0), same activations, same normalization, same final clamp.
 */
import { ArchId, manifestFor } from "./manifests.js";
import { NdArray, numel } from "./tensor.js";

export type Params = Map<string, NdArray>;

export function paramsFromStream(arch: ArchId, values: Float32Array): Params {
  const params: Params = new Map();
  let at = 0;
  for (const [name, shape] of manifestFor(arch)) {
    const count = numel(shape);
    params.set(name, { shape, data: values.slice(at, at + count) });
    at += count;
  }
  if (at !== values.length) {
    throw new Error(`stream has ${values.length} values, manifest needs ${at}`);
  }
  return params;
}

function get(params: Params, name: string): NdArray {
  const arr = params.get(name);
  if (!arr) throw new Error(`missing tensor ${name}`);
  return arr;
}

// ---------------------------------------------------------------------------
// kernels
// ---------------------------------------------------------------------------

export function conv2d(
  x: NdArray, w: NdArray, b: Float32Array | null, stride: number,
  pad: number): NdArray {
  const [inC, h, wid] = x.shape;
  const [outC, wInC, kh, kw] = w.shape;
  if (wInC !== inC) throw new Error(`conv channels ${inC} != weight ${wInC}`);
  const hOut = Math.floor((h + 2 * pad - kh) / stride) + 1;
  const wOut = Math.floor((wid + 2 * pad - kw) / stride) + 1;
  // zero-padded copy so the inner loops stay branch-free
  const hp = h + 2 * pad;
  const wp = wid + 2 * pad;
  const padded = new Float32Array(inC * hp * wp);
  for (let c = 0; c < inC; c++) {
    for (let i = 0; i < h; i++) {
      const src = (c * h + i) * wid;
      const dst = (c * hp + i + pad) * wp + pad;
      for (let j = 0; j < wid; j++) padded[dst + j] = x.data[src + j];
    }
  }
  const acc = new Float64Array(hOut * wOut);
  const out = new Float32Array(outC * hOut * wOut);
  for (let oc = 0; oc < outC; oc++) {
    acc.fill(b ? b[oc] : 0);
    for (let ic = 0; ic < inC; ic++) {
      for (let u = 0; u < kh; u++) {
        for (let v = 0; v < kw; v++) {
          const wv = w.data[((oc * inC + ic) * kh + u) * kw + v];
          if (wv === 0) continue;
          for (let i = 0; i < hOut; i++) {
            const row = (ic * hp + i * stride + u) * wp + v;
            const dst = i * wOut;
            for (let j = 0; j < wOut; j++) {
              acc[dst + j] += wv * padded[row + j * stride];
            }
          }
        }
      }
    }
    out.set(Float32Array.from(acc), oc * hOut * wOut);
  }
  return { shape: [outC, hOut, wOut], data: out };
}

export function relu(x: NdArray): NdArray {
  const out = new Float32Array(x.data.length);
  for (let i = 0; i < out.length; i++) out[i] = x.data[i] > 0 ? x.data[i] : 0;
  return { shape: [...x.shape], data: out };
}

export function silu(x: NdArray): NdArray {
  const out = new Float32Array(x.data.length);
  for (let i = 0; i < out.length; i++) {
    const v = x.data[i];
    out[i] = Math.fround(v / (1 + Math.exp(-v)));
  }
  return { shape: [...x.shape], data: out };
}

export function groupNorm(
  x: NdArray, groups: number, gamma: Float32Array, beta: Float32Array,
  eps = 1e-6): NdArray {
  const [c, h, w] = x.shape;
  const per = c / groups;
  const plane = h * w;
  const out = new Float32Array(x.data.length);
  for (let g = 0; g < groups; g++) {
    const start = g * per * plane;
    const count = per * plane;
    let sum = 0;
    for (let i = 0; i < count; i++) sum += x.data[start + i];
    const mu = sum / count;
    let varsum = 0;
    for (let i = 0; i < count; i++) {
      const d = x.data[start + i] - mu;
      varsum += d * d;
    }
    const inv = 1 / Math.sqrt(varsum / count + eps);
    for (let ch = g * per; ch < (g + 1) * per; ch++) {
      const scale = inv * gamma[ch];
      const shift = beta[ch];
      for (let i = 0; i < plane; i++) {
        const at = ch * plane + i;
        out[at] = Math.fround((x.data[at] - mu) * scale + shift);
      }
    }
  }
  return { shape: [...x.shape], data: out };
}

export function upsample2x(x: NdArray): NdArray {
  const [c, h, w] = x.shape;
  const out = new Float32Array(c * 4 * h * w);
  for (let ch = 0; ch < c; ch++) {
    for (let i = 0; i < h; i++) {
      for (let j = 0; j < w; j++) {
        const v = x.data[(ch * h + i) * w + j];
        const base = (ch * 2 * h + 2 * i) * 2 * w + 2 * j;
        out[base] = v;
        out[base + 1] = v;
        out[base + 2 * w] = v;
        out[base + 2 * w + 1] = v;
      }
    }
  }
  return { shape: [c, 2 * h, 2 * w], data: out };
}

/** softmax(q k^T * scale) v over row-major [n, d] token matrices. */
export function attention(
  q: Float64Array, k: Float64Array, v: Float64Array, n: number, d: number,
  scale: number): Float64Array {
  const out = new Float64Array(n * d);
  const scores = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    let max = -Infinity;
    for (let j = 0; j < n; j++) {
      let s = 0;
      for (let c = 0; c < d; c++) s += q[i * d + c] * k[j * d + c];
      scores[j] = s * scale;
      if (scores[j] > max) max = scores[j];
    }
    let total = 0;
    for (let j = 0; j < n; j++) {
      scores[j] = Math.exp(scores[j] - max);
      total += scores[j];
    }
    for (let j = 0; j < n; j++) {
      const wgt = scores[j] / total;
      for (let c = 0; c < d; c++) out[i * d + c] += wgt * v[j * d + c];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// blocks
// ---------------------------------------------------------------------------

function taeResBlock(params: Params, prefix: string, x: NdArray): NdArray {
  let h = relu(conv2d(x, get(params, `${prefix}.conv1.weight`),
                      get(params, `${prefix}.conv1.bias`).data, 1, 1));
  h = relu(conv2d(h, get(params, `${prefix}.conv2.weight`),
                  get(params, `${prefix}.conv2.bias`).data, 1, 1));
  h = relu(conv2d(h, get(params, `${prefix}.conv3.weight`),
                  get(params, `${prefix}.conv3.bias`).data, 1, 1));
  const out = new Float32Array(h.data.length);
  for (let i = 0; i < out.length; i++) out[i] = Math.fround(h.data[i] + x.data[i]);
  return { shape: [...h.shape], data: out };
}

function vaeResBlock(params: Params, prefix: string, x: NdArray): NdArray {
  let h = groupNorm(x, 32, get(params, `${prefix}.norm1.gamma`).data,
                    get(params, `${prefix}.norm1.beta`).data);
  h = conv2d(silu(h), get(params, `${prefix}.conv1.weight`),
             get(params, `${prefix}.conv1.bias`).data, 1, 1);
  h = groupNorm(h, 32, get(params, `${prefix}.norm2.gamma`).data,
                get(params, `${prefix}.norm2.beta`).data);
  h = conv2d(silu(h), get(params, `${prefix}.conv2.weight`),
             get(params, `${prefix}.conv2.bias`).data, 1, 1);
  const skipName = `${prefix}.skip.weight`;
  const residual = params.has(skipName)
    ? conv2d(x, get(params, skipName), null, 1, 0)
    : x;
  const out = new Float32Array(h.data.length);
  for (let i = 0; i < out.length; i++) {
    out[i] = Math.fround(h.data[i] + residual.data[i]);
  }
  return { shape: [...h.shape], data: out };
}

function vaeAttnBlock(params: Params, x: NdArray): NdArray {
  const [c, h, w] = x.shape;
  const n = h * w;
  const normed = groupNorm(x, 32, get(params, "mid.attn.norm.gamma").data,
                           get(params, "mid.attn.norm.beta").data);
  const project = (wName: string, bName: string): Float64Array => {
    const wm = get(params, wName).data;
    const bm = get(params, bName).data;
    const out = new Float64Array(n * c);
    for (let p = 0; p < n; p++) {
      for (let oc = 0; oc < c; oc++) {
        let s = bm[oc];
        for (let ic = 0; ic < c; ic++) {
          s += wm[oc * c + ic] * normed.data[ic * n + p];
        }
        out[p * c + oc] = s;
      }
    }
    return out;
  };
  const q = project("mid.attn.wq", "mid.attn.bq");
  const k = project("mid.attn.wk", "mid.attn.bk");
  const v = project("mid.attn.wv", "mid.attn.bv");
  const attended = attention(q, k, v, n, c, 1 / Math.sqrt(c));
  const wo = get(params, "mid.attn.wo").data;
  const bo = get(params, "mid.attn.bo").data;
  const out = new Float32Array(x.data.length);
  for (let p = 0; p < n; p++) {
    for (let oc = 0; oc < c; oc++) {
      let s = bo[oc];
      for (let ic = 0; ic < c; ic++) s += wo[oc * c + ic] * attended[p * c + ic];
      out[oc * n + p] = Math.fround(x.data[oc * n + p] + Math.fround(s));
    }
  }
  return { shape: [...x.shape], data: out };
}

/** Per-position attention over frames: q/k projected, values are the tokens. */
function temporalMix(params: Params, frames: NdArray[]): NdArray[] {
  const t = frames.length;
  if (t === 1) return frames;
  const [c, h, w] = frames[0].shape;
  const n = h * w;
  const wq = get(params, "mid.attn.wq").data;
  const wk = get(params, "mid.attn.wk").data;
  const scale = 1 / Math.sqrt(c);
  const mixed = frames.map((f) => ({
    shape: [...f.shape],
    data: new Float32Array(f.data.length),
  }));
  const tokens = new Float64Array(t * c);
  for (let p = 0; p < n; p++) {
    for (let ft = 0; ft < t; ft++) {
      for (let ch = 0; ch < c; ch++) {
        tokens[ft * c + ch] = frames[ft].data[ch * n + p];
      }
    }
    const q = new Float64Array(t * c);
    const k = new Float64Array(t * c);
    for (let ft = 0; ft < t; ft++) {
      for (let oc = 0; oc < c; oc++) {
        let sq = 0;
        let sk = 0;
        for (let ic = 0; ic < c; ic++) {
          const tok = tokens[ft * c + ic];
          sq += wq[oc * c + ic] * tok;
          sk += wk[oc * c + ic] * tok;
        }
        q[ft * c + oc] = sq;
        k[ft * c + oc] = sk;
      }
    }
    const out = attention(q, k, tokens, t, c, scale);
    for (let ft = 0; ft < t; ft++) {
      for (let ch = 0; ch < c; ch++) {
        mixed[ft].data[ch * n + p] = Math.fround(out[ft * c + ch]);
      }
    }
  }
  return mixed;
}

// ---------------------------------------------------------------------------
// full decoders
// ---------------------------------------------------------------------------

function clamp01(x: NdArray): NdArray {
  const out = new Float32Array(x.data.length);
  for (let i = 0; i < out.length; i++) {
    out[i] = Math.min(1, Math.max(0, x.data[i]));
  }
  return { shape: [...x.shape], data: out };
}

function taeHead(params: Params, latent: NdArray): NdArray {
  return conv2d(latent, get(params, "in_conv.weight"),
                get(params, "in_conv.bias").data, 1, 1);
}

function taeTail(params: Params, x: NdArray): NdArray {
  for (let s = 0; s < 3; s++) {
    for (let b = 0; b < 3; b++) {
      x = taeResBlock(params, `stages.${s}.blocks.${b}`, x);
    }
    x = conv2d(upsample2x(x), get(params, `stages.${s}.up_conv.weight`),
               get(params, `stages.${s}.up_conv.bias`).data, 1, 1);
  }
  return conv2d(x, get(params, "out_conv.weight"),
                get(params, "out_conv.bias").data, 1, 1);
}

export function decodeTaeImage(params: Params, latent: NdArray): NdArray {
  return clamp01(taeTail(params, taeHead(params, latent)));
}

export function decodeTaeTemporalVideo(params: Params, latents: NdArray[]): NdArray[] {
  let frames = latents.map((latent) => taeHead(params, latent));
  frames = frames.map((f) => taeResBlock(params, "mid.pre", f));
  frames = temporalMix(params, frames);
  frames = frames.map((f) => taeResBlock(params, "mid.post", f));
  return frames.map((f) => clamp01(taeTail(params, f)));
}

export function decodeRefVaeImage(params: Params, latent: NdArray): NdArray {
  let x = conv2d(latent, get(params, "in_conv.weight"),
                 get(params, "in_conv.bias").data, 1, 1);
  x = vaeResBlock(params, "mid.res1", x);
  x = vaeAttnBlock(params, x);
  x = vaeResBlock(params, "mid.res2", x);
  for (let t = 0; t < 4; t++) {
    for (let r = 0; r < 3; r++) x = vaeResBlock(params, `up.${t}.res.${r}`, x);
    if (t < 3) {
      x = conv2d(upsample2x(x), get(params, `up.${t}.up_conv.weight`),
                 get(params, `up.${t}.up_conv.bias`).data, 1, 1);
    }
  }
  x = groupNorm(x, 32, get(params, "out_norm.gamma").data,
                get(params, "out_norm.beta").data);
  x = conv2d(silu(x), get(params, "out_conv.weight"),
             get(params, "out_conv.bias").data, 1, 1);
  return clamp01(x);
}

export function decode(params: Params, arch: ArchId, latent: NdArray): NdArray[] {
  if (arch === "refvae" || arch === "tae192") {
    if (latent.shape.length === 3) {
      const fn = arch === "refvae" ? decodeRefVaeImage : decodeTaeImage;
      return [fn(params, latent)];
    }
    const [t, c, h, w] = latent.shape;
    const frames: NdArray[] = [];
    for (let f = 0; f < t; f++) {
      const frame = {
        shape: [c, h, w],
        data: latent.data.slice(f * c * h * w, (f + 1) * c * h * w),
      };
      frames.push(arch === "refvae" ? decodeRefVaeImage(params, frame)
                                    : decodeTaeImage(params, frame));
    }
    return frames;
  }
  if (latent.shape.length !== 4) {
    throw new Error("temporal decoder needs TCHW latents");
  }
  const [t, c, h, w] = latent.shape;
  const frames: NdArray[] = [];
  for (let f = 0; f < t; f++) {
    frames.push({
      shape: [c, h, w],
      data: latent.data.slice(f * c * h * w, (f + 1) * c * h * w),
    });
  }
  return decodeTaeTemporalVideo(params, frames);
}
