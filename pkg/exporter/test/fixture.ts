import * as fs from "node:fs";
import * as path from "node:path";

import { encodePpm, RawImage } from "../src/image.js";
import { SplitMix } from "../src/prng.js";

const CLASSES: Array<[string, [number, number, number]]> = [
  ["blue", [40, 70, 220]],
  ["green", [40, 200, 60]],
  ["red", [220, 40, 40]],
];

function noisyImage(base: [number, number, number], rng: SplitMix, w = 10, h = 8): RawImage {
  const pixels = new Uint8Array(w * h * 3);
  for (let i = 0; i < w * h; i++) {
    for (let c = 0; c < 3; c++) {
      const v = base[c] + Math.round(24 * (rng.nextFloat() - 0.5));
      pixels[3 * i + c] = Math.max(0, Math.min(255, v));
    }
  }
  return { width: w, height: h, pixels };
}

/** 3-class, 12-image deterministic dataset under `root`. */
export function buildFixtureDataset(root: string): void {
  for (const [name, base] of CLASSES) {
    const dir = path.join(root, name);
    fs.mkdirSync(dir, { recursive: true });
    const rng = new SplitMix(`fixture/${name}`);
    for (let i = 0; i < 4; i++) {
      fs.writeFileSync(path.join(dir, `img_${i}.ppm`), encodePpm(noisyImage(base, rng)));
    }
  }
}
