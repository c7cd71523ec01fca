/**
 * The accuracy/robustness tradeoff table: analytic sigma0 and sigma_t
 * against the Monte Carlo estimate, with rows flagged when the empirical
 * value strays more than 0.005 from the analytic one.
 */

import { TradeoffRow } from "./schema";
import { fmt, SvgDocument } from "./svg";

export const FLAG_TOLERANCE = 0.005;

export interface FlaggedRow extends TradeoffRow {
  flagged: boolean;
}

export function flagRows(rows: TradeoffRow[]): FlaggedRow[] {
  return rows.map((row) => ({
    ...row,
    flagged: Math.abs(row.empirical - row.sigmaT) > FLAG_TOLERANCE,
  }));
}

export function tradeoffMarkdown(rows: FlaggedRow[]): string {
  const lines = [
    "| k | sigma | sigma0 | sigma_t | empirical | flag |",
    "|---:|---:|---:|---:|---:|:---|",
  ];
  for (const row of rows) {
    lines.push(
      `| ${row.k} | ${fmt(row.sigma, 3)} | ${fmt(row.sigma0, 4)} | ${fmt(row.sigmaT, 4)} | ` +
        `${fmt(row.empirical, 4)} | ${row.flagged ? "DRIFT" : ""} |`
    );
  }
  return lines.join("\n") + "\n";
}

const COLUMNS = ["k", "sigma", "sigma0", "sigma_t", "empirical"];
const COLUMN_X = [70, 150, 240, 330, 430];
const ROW_HEIGHT = 24;

export function tradeoffSvg(rows: FlaggedRow[]): string {
  const width = 520;
  const height = 70 + ROW_HEIGHT * rows.length;
  const doc = new SvgDocument(width, height);
  doc.text(20, 26, "norm estimator error scale vs robustness noise", { size: 14 });
  COLUMNS.forEach((name, i) => {
    doc.text(COLUMN_X[i], 52, name, { size: 12, anchor: "end" });
  });
  doc.line(20, 58, width - 20, 58, "#222222");
  rows.forEach((row, index) => {
    const yRow = 58 + ROW_HEIGHT * (index + 1) - 7;
    if (row.flagged) {
      doc.rect(20, yRow - 15, width - 40, ROW_HEIGHT - 4, "#ffe4e1");
    }
    const values = [
      String(row.k),
      fmt(row.sigma, 3),
      fmt(row.sigma0, 4),
      fmt(row.sigmaT, 4),
      fmt(row.empirical, 4),
    ];
    values.forEach((value, i) => {
      doc.text(COLUMN_X[i], yRow, value, { size: 12, anchor: "end" });
    });
    if (row.flagged) {
      doc.text(COLUMN_X[4] + 24, yRow, "DRIFT", { size: 11, fill: "#b22222" });
    }
  });
  return doc.toString();
}
