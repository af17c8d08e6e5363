#!/usr/bin/env node
/**
 * nn2c-export: convert a TensorFlow.js layers model (model.json + weight
 * shards) into the nn2c interchange format.
 *
 *     nn2c-export export <model_path> --out <dir> [--name <name>]
 */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { exportModel } from "./export.js";
import { writeModelFiles } from "./interchange.js";
import { loadLayersModel } from "./layersModel.js";

async function main(): Promise<number> {
  const argv = await yargs(hideBin(process.argv))
    .command("export <model_path>", "convert a tfjs layers model", (y) =>
      y
        .positional("model_path", {
          describe: "model.json file or the directory holding it",
          type: "string",
          demandOption: true,
        })
        .option("out", { type: "string", demandOption: true, describe: "output directory" })
        .option("name", { type: "string", describe: "model name (defaults to the topology name)" }),
    )
    .demandCommand(1)
    .strict()
    .parse();

  const model = loadLayersModel(argv.model_path as string);
  const result = exportModel(model, { name: argv.name as string | undefined });
  const name = (argv.name as string | undefined) ?? model.name;
  const { manifestPath, weightsPath } = writeModelFiles(argv.out as string, name, result);
  console.log(`wrote ${manifestPath} and ${weightsPath} (${result.parameterCount} parameters)`);
  return 0;
}

main()
  .then((code) => process.exit(code))
  .catch((err) => {
    console.error(`error: ${err instanceof Error ? `${err.constructor.name}: ${err.message}` : err}`);
    process.exit(1);
  });
