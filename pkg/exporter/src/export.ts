/**
 * Export pipeline: encode a class-directory image dataset plus per-class
 * prompt templates into an EMBSTRM1 container with a JSON manifest sidecar.
 *
 * Per-class text embeddings average the raw template embeddings first and
 * unit-normalize afterwards; the manifest records this so the consuming
 * side never has to guess. The exporter also computes its own zero-shot
 * prediction per record (from the single-precision values exactly as
 * written, renormalized in doubles the way the engine does) so the engine's
 * report can be cross-checked against an independent oracle.
 */

import * as fs from "node:fs";

import { loadImageDataset } from "./dataset.js";
import { Encoder, unitNormalize } from "./encoder.js";
import {
  EmbeddingRecord,
  FLAG_LABELS,
  FLAG_NORMALIZED,
  writeEmbeddingFile,
} from "./format.js";

export interface ExportOptions {
  datasetDir: string;
  encoder: Encoder;
  templates: string[];
  outPath: string;
  datasetName?: string;
}

export interface ExportManifest {
  dataset: string;
  encoder: string;
  dim: number;
  record_count: number;
  class_names: string[];
  templates: string[];
  template_averaging: "average-then-normalize";
  normalized: boolean;
  labels: boolean;
  zero_shot_accuracy: number;
}

export interface ExportSummary {
  manifest: ExportManifest;
  manifestPath: string;
  labels: number[];
  predictions: number[];
  topCosines: number[];
  skipped: string[];
}

function toFloat32(v: Float64Array): Float32Array {
  return Float32Array.from(v);
}

function normalizedF64(row: Float32Array): Float64Array {
  return unitNormalize(Float64Array.from(row));
}

export function exportDataset(options: ExportOptions): ExportSummary {
  const { encoder, templates } = options;
  if (templates.length === 0) {
    throw new Error("at least one prompt template is required");
  }
  const dataset = loadImageDataset(options.datasetDir);

  const textRows: Float32Array[] = dataset.classNames.map((name) => {
    const sum = new Float64Array(encoder.dim);
    for (const template of templates) {
      const prompt = template.includes("{}") ? template.replaceAll("{}", name) : `${template} ${name}`;
      const emb = encoder.encodeText(prompt);
      for (let i = 0; i < encoder.dim; i++) sum[i] += emb[i];
    }
    for (let i = 0; i < encoder.dim; i++) sum[i] /= templates.length;
    return toFloat32(unitNormalize(sum));
  });

  const records: EmbeddingRecord[] = dataset.images.map((img) => ({
    feature: toFloat32(encoder.encodeImage(img.image)),
    label: img.label,
  }));

  // oracle pass over the values exactly as they sit in the file
  const textUnit = textRows.map(normalizedF64);
  const labels: number[] = [];
  const predictions: number[] = [];
  const topCosines: number[] = [];
  let correct = 0;
  for (const rec of records) {
    const x = normalizedF64(rec.feature);
    let best = 0;
    let bestCos = -Infinity;
    for (let y = 0; y < textUnit.length; y++) {
      let cos = 0;
      for (let j = 0; j < encoder.dim; j++) cos += textUnit[y][j] * x[j];
      if (cos > bestCos) {
        bestCos = cos;
        best = y;
      }
    }
    labels.push(rec.label as number);
    predictions.push(best);
    topCosines.push(bestCos);
    if (best === rec.label) correct++;
  }

  const blob = writeEmbeddingFile(
    {
      dim: encoder.dim,
      numClasses: dataset.classNames.length,
      recordCount: records.length,
      flags: FLAG_LABELS | FLAG_NORMALIZED,
      version: 1,
    },
    textRows,
    records,
  );
  fs.writeFileSync(options.outPath, blob);

  const manifest: ExportManifest = {
    dataset: options.datasetName ?? options.datasetDir,
    encoder: encoder.id,
    dim: encoder.dim,
    record_count: records.length,
    class_names: dataset.classNames,
    templates,
    template_averaging: "average-then-normalize",
    normalized: true,
    labels: true,
    zero_shot_accuracy: records.length ? correct / records.length : 0,
  };
  const manifestPath = `${options.outPath}.manifest.json`;
  fs.writeFileSync(manifestPath, JSON.stringify(manifest, null, 2) + "\n");

  return {
    manifest,
    manifestPath,
    labels,
    predictions,
    topCosines,
    skipped: dataset.skipped,
  };
}
