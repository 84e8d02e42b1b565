/**
 * Directory dataset loader. Layout: one subdirectory per class, raster
 * images inside. Record order is fixed and documented: classes sorted
 * lexicographically, files sorted lexicographically within each class,
 * emitted class by class.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { RawImage, decodeImage } from "./image.js";

export interface DatasetImage {
  label: number;
  className: string;
  file: string;
  image: RawImage;
}

export interface ImageDataset {
  classNames: string[];
  images: DatasetImage[];
  skipped: string[];
}

const RASTER_EXTENSIONS = new Set([".ppm", ".pgm"]);

export function loadImageDataset(root: string): ImageDataset {
  const entries = fs
    .readdirSync(root, { withFileTypes: true })
    .filter((e) => e.isDirectory())
    .map((e) => e.name)
    .sort();
  if (entries.length < 2) {
    throw new Error(`dataset needs at least 2 class directories, found ${entries.length}`);
  }

  const images: DatasetImage[] = [];
  const skipped: string[] = [];
  entries.forEach((className, label) => {
    const dir = path.join(root, className);
    const files = fs
      .readdirSync(dir)
      .filter((f) => RASTER_EXTENSIONS.has(path.extname(f).toLowerCase()))
      .sort();
    for (const file of files) {
      const full = path.join(dir, file);
      try {
        images.push({ label, className, file: full, image: decodeImage(fs.readFileSync(full)) });
      } catch (err) {
        skipped.push(`${full}: ${(err as Error).message}`);
      }
    }
  });
  return { classNames: entries, images, skipped };
}
