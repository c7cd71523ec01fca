#!/usr/bin/env node
/**
 * plot curves <records.csv> --out <dir> [--summary <summary.json>]
 * plot tradeoff <tradeoff.csv> --out <dir>
 *
 * Writes SVG and PNG images (plus a markdown table for the tradeoff).
 * Exit codes: 0 success, 2 schema or argument error, 3 i/o error.
 */

import * as fs from "fs";
import * as path from "path";

import { aggregate, compareWithSummary } from "./aggregate";
import { renderCurvePanels } from "./curves";
import { svgToPng } from "./render";
import { parseRecordsCsv, parseSummaryJson, parseTradeoffCsv, SchemaError } from "./schema";
import { flagRows, tradeoffMarkdown, tradeoffSvg } from "./tradeoff";

interface Args {
  command: string;
  input: string;
  out: string;
  summary?: string;
}

function parseArgs(argv: string[]): Args {
  const [command, input, ...rest] = argv;
  if (!command || !input || !["curves", "tradeoff"].includes(command)) {
    throw new SchemaError(
      "usage: plot curves <records.csv> --out <dir> [--summary <summary.json>] | " +
        "plot tradeoff <tradeoff.csv> --out <dir>"
    );
  }
  let out = ".";
  let summary: string | undefined;
  for (let i = 0; i < rest.length; i++) {
    if (rest[i] === "--out" && rest[i + 1]) {
      out = rest[++i];
    } else if (rest[i] === "--summary" && rest[i + 1]) {
      summary = rest[++i];
    } else {
      throw new SchemaError(`unknown argument: ${rest[i]}`);
    }
  }
  return { command, input, out, summary };
}

function writeImagePair(outDir: string, baseName: string, svg: string): void {
  fs.writeFileSync(path.join(outDir, `${baseName}.svg`), svg);
  fs.writeFileSync(path.join(outDir, `${baseName}.png`), svgToPng(svg));
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }
  let text: string;
  try {
    text = fs.readFileSync(args.input, "utf8");
  } catch (err) {
    console.error(`cannot read ${args.input}: ${err}`);
    return 2;
  }
  try {
    fs.mkdirSync(args.out, { recursive: true });
    if (args.command === "curves") {
      const records = parseRecordsCsv(text);
      const series = aggregate(records);
      if (args.summary) {
        const summary = parseSummaryJson(fs.readFileSync(args.summary, "utf8"));
        const mismatches = compareWithSummary(series, summary.groups);
        if (mismatches.length > 0) {
          const worst = mismatches[0];
          console.error(
            `recomputed aggregates disagree with the summary beyond 1e-9 ` +
              `(${mismatches.length} entries; first: ${worst.estimator} step ${worst.step} ` +
              `${worst.field} ${worst.got} vs ${worst.expected})`
          );
          return 2;
        }
        console.log("aggregates match the summary within 1e-9");
      }
      const panels = renderCurvePanels(series);
      for (const panel of panels) {
        if (panel.series.length === 0) {
          console.warn(`panel k=${panel.k} has no series; skipped`);
          continue;
        }
        writeImagePair(args.out, `curves-k${panel.k}`, panel.svg);
        console.log(`wrote curves-k${panel.k}.svg/.png (${panel.series.length} series)`);
      }
    } else {
      const rows = flagRows(parseTradeoffCsv(text));
      writeImagePair(args.out, "tradeoff", tradeoffSvg(rows));
      fs.writeFileSync(path.join(args.out, "tradeoff.md"), tradeoffMarkdown(rows));
      const flagged = rows.filter((r) => r.flagged).length;
      console.log(`wrote tradeoff.svg/.png/.md (${rows.length} rows, ${flagged} flagged)`);
    }
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(String(err.message));
      return 2;
    }
    console.error(`i/o or render failure: ${err}`);
    return 3;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
