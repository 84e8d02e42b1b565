import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { resolveEncoder } from "../src/encoder.js";
import { exportDataset } from "../src/export.js";
import { FLAG_LABELS, FLAG_NORMALIZED, readEmbeddingFile } from "../src/format.js";
import { buildFixtureDataset } from "./fixture.js";

let work: string;
let datasetDir: string;

beforeAll(() => {
  work = fs.mkdtempSync(path.join(os.tmpdir(), "exporter-"));
  datasetDir = path.join(work, "dataset");
  buildFixtureDataset(datasetDir);
});

afterAll(() => {
  fs.rmSync(work, { recursive: true, force: true });
});

const TEMPLATES = ["a photo of a {} object", "a {} block"];

describe("export pipeline", () => {
  it("exports the fixture with labels, normalization and fixed order", () => {
    const out = path.join(work, "fixture.emb");
    const summary = exportDataset({
      datasetDir,
      encoder: resolveEncoder("toy-16"),
      templates: TEMPLATES,
      outPath: out,
    });
    const back = readEmbeddingFile(fs.readFileSync(out));
    expect(back.header.numClasses).toBe(3);
    expect(back.header.dim).toBe(16);
    expect(back.header.recordCount).toBe(12);
    expect(back.header.flags).toBe(FLAG_LABELS | FLAG_NORMALIZED);
    // class-major fixed order: blue, green, red, 4 images each
    expect(back.records.map((r) => r.label)).toEqual([0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
    expect(summary.manifest.class_names).toEqual(["blue", "green", "red"]);
    expect(summary.manifest.template_averaging).toBe("average-then-normalize");
    // color fixture is well separated; the toy encoder should nail it
    expect(summary.manifest.zero_shot_accuracy).toBe(1.0);
    for (const rec of back.records) {
      let norm = 0;
      for (const v of rec.feature) norm += v * v;
      expect(Math.abs(Math.sqrt(norm) - 1)).toBeLessThan(1e-6);
    }
  });

  it("is byte-deterministic for identical inputs", () => {
    const a = path.join(work, "a.emb");
    const b = path.join(work, "b.emb");
    for (const out of [a, b]) {
      exportDataset({
        datasetDir,
        encoder: resolveEncoder("toy-16"),
        templates: TEMPLATES,
        outPath: out,
      });
    }
    expect(fs.readFileSync(a).equals(fs.readFileSync(b))).toBe(true);
    expect(fs.readFileSync(`${a}.manifest.json`, "utf8")).toBe(
      fs.readFileSync(`${b}.manifest.json`, "utf8"),
    );
  });

  it("rejects unknown encoders and empty template sets", () => {
    expect(() => resolveEncoder("resnet-50")).toThrow(/unknown encoder/);
    expect(() =>
      exportDataset({
        datasetDir,
        encoder: resolveEncoder("toy-8"),
        templates: [],
        outPath: path.join(work, "x.emb"),
      }),
    ).toThrow(/template/);
  });
});
