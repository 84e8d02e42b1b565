/**
 * Pluggable feature encoders. The engine only sees unit-normalized vectors
 * in a shared space; any encoder honoring that contract can stand behind
 * this interface (a real VLM backbone included). The built-in "toy-<d>"
 * encoder is fully deterministic and needs no model weights: images are
 * box-downsampled to a 4x4x3 patch grid and pushed through a fixed random
 * projection derived from the encoder id; prompts naming a known color are
 * encoded as a solid image of that color, aligning the text and image
 * spaces the same way a contrastive backbone would.
 */

import { RawImage, solidImage } from "./image.js";
import { SplitMix } from "./prng.js";

export interface Encoder {
  id: string;
  dim: number;
  encodeImage(image: RawImage): Float64Array;
  encodeText(prompt: string): Float64Array;
}

const PATCH = 4;
const RAW_DIM = PATCH * PATCH * 3;

const COLOR_TABLE: Record<string, [number, number, number]> = {
  red: [220, 40, 40],
  green: [40, 200, 60],
  blue: [40, 70, 220],
  yellow: [230, 220, 50],
  cyan: [60, 210, 210],
  magenta: [210, 60, 200],
  orange: [240, 150, 40],
  white: [245, 245, 245],
  black: [15, 15, 15],
  gray: [128, 128, 128],
};

export function unitNormalize(v: Float64Array): Float64Array {
  let norm = 0;
  for (const x of v) norm += x * x;
  norm = Math.sqrt(norm);
  if (norm === 0) return v;
  const out = new Float64Array(v.length);
  for (let i = 0; i < v.length; i++) out[i] = v[i] / norm;
  return out;
}

function patchGrid(image: RawImage): Float64Array {
  // box-average the image into PATCH x PATCH cells per channel, in [0, 1]
  const out = new Float64Array(RAW_DIM);
  const counts = new Float64Array(PATCH * PATCH);
  for (let y = 0; y < image.height; y++) {
    const py = Math.min(PATCH - 1, Math.floor((y * PATCH) / image.height));
    for (let x = 0; x < image.width; x++) {
      const px = Math.min(PATCH - 1, Math.floor((x * PATCH) / image.width));
      const cell = py * PATCH + px;
      const base = 3 * (y * image.width + x);
      out[3 * cell] += image.pixels[base] / 255;
      out[3 * cell + 1] += image.pixels[base + 1] / 255;
      out[3 * cell + 2] += image.pixels[base + 2] / 255;
      counts[cell] += 1;
    }
  }
  for (let cell = 0; cell < PATCH * PATCH; cell++) {
    if (counts[cell] > 0) {
      out[3 * cell] /= counts[cell];
      out[3 * cell + 1] /= counts[cell];
      out[3 * cell + 2] /= counts[cell];
    }
  }
  return out;
}

export function makeToyEncoder(dim: number): Encoder {
  const id = `toy-${dim}`;
  // fixed projection rows derived from the encoder id alone
  const rng = new SplitMix(`${id}/projection`);
  const projection = new Float64Array(dim * RAW_DIM);
  for (let i = 0; i < projection.length; i++) {
    projection[i] = rng.nextGaussian() / Math.sqrt(RAW_DIM);
  }

  function project(raw: Float64Array): Float64Array {
    const out = new Float64Array(dim);
    for (let i = 0; i < dim; i++) {
      let acc = 0;
      const row = i * RAW_DIM;
      for (let j = 0; j < RAW_DIM; j++) acc += projection[row + j] * raw[j];
      out[i] = acc;
    }
    return unitNormalize(out);
  }

  return {
    id,
    dim,
    encodeImage(image: RawImage): Float64Array {
      return project(patchGrid(image));
    },
    encodeText(prompt: string): Float64Array {
      const lowered = prompt.toLowerCase();
      for (const [name, [r, g, b]] of Object.entries(COLOR_TABLE)) {
        if (lowered.includes(name)) {
          return project(patchGrid(solidImage(r, g, b)));
        }
      }
      // unknown vocabulary: a stable direction derived from the prompt
      const prng = new SplitMix(`${id}/text/${prompt}`);
      const v = new Float64Array(dim);
      for (let i = 0; i < dim; i++) v[i] = prng.nextGaussian();
      return unitNormalize(v);
    },
  };
}

export function resolveEncoder(encoderId: string): Encoder {
  const match = /^toy-(\d+)$/.exec(encoderId);
  if (match) {
    const dim = parseInt(match[1], 10);
    if (dim >= 2 && dim <= 4096) return makeToyEncoder(dim);
  }
  throw new Error(
    `unknown encoder '${encoderId}' (built-in encoders: toy-<dim>, e.g. toy-16)`,
  );
}
