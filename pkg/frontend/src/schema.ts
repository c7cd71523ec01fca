/**
 * The frozen telemetry schemas this tool consumes.
 *
 * Campaign records CSV:
 *   k,estimator,sigma,trial,step,deviation,err_rate,seed
 * Tradeoff CSV:
 *   k,sigma,sigma0,sigma_t,empirical,draws
 *
 * Any header deviation is a schema error (the producer and this tool
 * version together).
 */

export const RECORDS_HEADER = "k,estimator,sigma,trial,step,deviation,err_rate,seed";
export const TRADEOFF_HEADER = "k,sigma,sigma0,sigma_t,empirical,draws";

export class SchemaError extends Error {}

export interface CampaignRecord {
  k: number;
  estimator: string;
  sigma: number;
  trial: number;
  step: number;
  deviation: number;
  errRate: number;
  seed: string;
}

export interface TradeoffRow {
  k: number;
  sigma: number;
  sigma0: number;
  sigmaT: number;
  empirical: number;
  draws: number;
}

export interface SummaryGroup {
  k: number;
  estimator: string;
  sigma: number;
  trials: number;
  r: number;
  mean_abs_deviation: number[];
  std_abs_deviation: number[];
  final_mean_deviation: number;
}

export interface CampaignSummary {
  schema: string;
  groups: SummaryGroup[];
}

function splitLines(text: string): string[] {
  const lines = text.split("\n");
  while (lines.length > 0 && lines[lines.length - 1].trim() === "") lines.pop();
  return lines;
}

function toNumber(raw: string, line: number, column: string): number {
  const value = Number(raw);
  if (raw.trim() === "" || Number.isNaN(value)) {
    throw new SchemaError(`line ${line}: column ${column} is not a number: "${raw}"`);
  }
  return value;
}

export function parseRecordsCsv(text: string): CampaignRecord[] {
  const lines = splitLines(text);
  if (lines.length === 0 || lines[0].trim() !== RECORDS_HEADER) {
    throw new SchemaError(
      `records CSV header mismatch: expected "${RECORDS_HEADER}", got "${lines[0] ?? ""}"`
    );
  }
  const records: CampaignRecord[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== 8) {
      throw new SchemaError(`line ${i + 1}: expected 8 fields, got ${parts.length}`);
    }
    records.push({
      k: toNumber(parts[0], i + 1, "k"),
      estimator: parts[1],
      sigma: toNumber(parts[2], i + 1, "sigma"),
      trial: toNumber(parts[3], i + 1, "trial"),
      step: toNumber(parts[4], i + 1, "step"),
      deviation: toNumber(parts[5], i + 1, "deviation"),
      errRate: toNumber(parts[6], i + 1, "err_rate"),
      seed: parts[7],
    });
  }
  if (records.length === 0) {
    throw new SchemaError("records CSV has no data rows");
  }
  return records;
}

export function parseTradeoffCsv(text: string): TradeoffRow[] {
  const lines = splitLines(text);
  if (lines.length === 0 || lines[0].trim() !== TRADEOFF_HEADER) {
    throw new SchemaError(
      `tradeoff CSV header mismatch: expected "${TRADEOFF_HEADER}", got "${lines[0] ?? ""}"`
    );
  }
  const rows: TradeoffRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== 6) {
      throw new SchemaError(`line ${i + 1}: expected 6 fields, got ${parts.length}`);
    }
    rows.push({
      k: toNumber(parts[0], i + 1, "k"),
      sigma: toNumber(parts[1], i + 1, "sigma"),
      sigma0: toNumber(parts[2], i + 1, "sigma0"),
      sigmaT: toNumber(parts[3], i + 1, "sigma_t"),
      empirical: toNumber(parts[4], i + 1, "empirical"),
      draws: toNumber(parts[5], i + 1, "draws"),
    });
  }
  if (rows.length === 0) {
    throw new SchemaError("tradeoff CSV has no data rows");
  }
  return rows;
}

export function parseSummaryJson(text: string): CampaignSummary {
  const data = JSON.parse(text);
  if (!data || !Array.isArray(data.groups)) {
    throw new SchemaError("summary JSON is missing the groups array");
  }
  return data as CampaignSummary;
}
