import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { resolveEncoder } from "./encoder.js";
import { exportDataset } from "./export.js";

async function main(): Promise<void> {
  await yargs(hideBin(process.argv))
    .command(
      "export",
      "encode an image dataset into an EMBSTRM1 container",
      (y) =>
        y
          .option("dataset", { type: "string", demandOption: true, describe: "class-directory dataset root" })
          .option("encoder", { type: "string", default: "toy-16", describe: "encoder id (toy-<dim>)" })
          .option("template", {
            type: "string",
            array: true,
            default: ["a photo of a {} object"],
            describe: "prompt templates; {} is replaced by the class name",
          })
          .option("out", { type: "string", demandOption: true, describe: "output .emb path" })
          .option("name", { type: "string", describe: "dataset name recorded in the manifest" }),
      (args) => {
        const summary = exportDataset({
          datasetDir: args.dataset,
          encoder: resolveEncoder(args.encoder),
          templates: args.template as string[],
          outPath: args.out,
          datasetName: args.name,
        });
        for (const msg of summary.skipped) {
          process.stderr.write(`skipped ${msg}\n`);
        }
        process.stdout.write(
          `wrote ${args.out}: K=${summary.manifest.class_names.length} ` +
            `records=${summary.manifest.record_count} ` +
            `zero_shot_accuracy=${summary.manifest.zero_shot_accuracy.toFixed(6)}\n`,
        );
      },
    )
    .demandCommand(1)
    .strict()
    .parseAsync();
}

main().catch((err) => {
  process.stderr.write(`error: ${err.message}\n`);
  process.exit(2);
});
