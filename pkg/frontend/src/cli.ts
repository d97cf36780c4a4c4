#!/usr/bin/env node
/**
 * plot --kind <snr_curves|budget_surface|roc> --in <csv> [--in <csv>...]
 *      --out <svg> [--width px] [--height px]
 *
 * Exit codes: 0 success, 2 bad arguments, unreadable input or a CSV
 * that does not match the kind's schema.
 */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { EmptyInputError, FIGURE_KINDS, FigureKind, SchemaError } from "./csv.js";
import { renderFigure } from "./render.js";

function main(): void {
  const argv = yargs(hideBin(process.argv))
    .scriptName("plot")
    .usage("$0 --kind <kind> --in <csv> --out <svg>")
    .option("kind", {
      choices: FIGURE_KINDS,
      demandOption: true,
      describe: "figure kind, must match the CSV schema",
    })
    .option("in", {
      type: "string",
      array: true,
      demandOption: true,
      describe: "input CSV path, repeatable",
    })
    .option("out", {
      type: "string",
      demandOption: true,
      describe: "output SVG path",
    })
    .option("width", { type: "number", describe: "canvas width in px" })
    .option("height", { type: "number", describe: "canvas height in px" })
    .strict()
    .fail((msg, err) => {
      process.stderr.write(`${msg ?? err?.message}\n`);
      process.exit(2);
    })
    .parseSync();

  try {
    renderFigure({
      kind: argv.kind as FigureKind,
      inputs: argv.in,
      output: argv.out,
      width: argv.width,
      height: argv.height,
    });
  } catch (err) {
    if (
      err instanceof SchemaError ||
      err instanceof EmptyInputError ||
      (err as NodeJS.ErrnoException).code === "ENOENT"
    ) {
      process.stderr.write(`${(err as Error).message}\n`);
      process.exit(2);
    }
    throw err;
  }
}

main();
