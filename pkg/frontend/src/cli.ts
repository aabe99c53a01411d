#!/usr/bin/env node
/** Render figures from analysis CSVs.
 *
 * Usage:
 *   resilnet-figures norms <trajectory.csv> <out.svg> [--log]
 *   resilnet-figures feedback <trajectory.csv> <out.svg>
 *   resilnet-figures spec <plotspec.json>
 */

import * as fs from "node:fs";
import { render, normEnvelopeFigure, feedbackFigure, PlotSpec } from "./plot.js";

function main(argv: string[]): number {
  const [mode, ...rest] = argv;
  try {
    if (mode === "norms") {
      const [csv, out] = rest;
      if (!csv || !out) throw new Error("usage: norms <csv> <out.svg> [--log]");
      render(normEnvelopeFigure(csv, out, rest.includes("--log")));
    } else if (mode === "feedback") {
      const [csv, out] = rest;
      if (!csv || !out) throw new Error("usage: feedback <csv> <out.svg>");
      render(feedbackFigure(csv, out));
    } else if (mode === "spec") {
      const [specPath] = rest;
      if (!specPath) throw new Error("usage: spec <plotspec.json>");
      const spec = JSON.parse(fs.readFileSync(specPath, "utf-8")) as PlotSpec;
      render(spec);
    } else {
      throw new Error(`unknown mode "${mode ?? ""}"`);
    }
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
  return 0;
}

process.exit(main(process.argv.slice(2)));
