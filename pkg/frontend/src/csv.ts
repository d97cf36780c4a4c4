/**
 * Typed loaders for the simulator's three sweep CSVs.
 *
 * Every loader validates the header before touching a row, so a CSV
 * fed to the wrong figure kind fails with the list of missing columns
 * instead of producing NaN plots.  Cells holding the literal
 * "unreachable" become null and stay masked downstream.
 */

import Papa from "papaparse";

export type FigureKind = "snr_curves" | "budget_surface" | "roc";

export const FIGURE_KINDS: FigureKind[] = [
  "snr_curves",
  "budget_surface",
  "roc",
];

export class SchemaError extends Error {}

export class EmptyInputError extends Error {}

/** One row of an error-rate-vs-SNR sweep. */
export interface SnrPoint {
  scheme: string;
  budget: number;
  length: number;
  snrDb: number;
  pe: number;
  ci: number;
}

/** One (scheme, budget, length) cell of a required-SNR grid. */
export interface BudgetCell {
  scheme: string;
  budget: number;
  length: number;
  /** null marks an unreachable cell; it is masked, never interpolated. */
  requiredSnrDb: number | null;
}

/** One threshold point of a detection trade-off curve. */
export interface RocPoint {
  scheme: string;
  budget: number;
  threshold: number;
  pFp: number;
  pFn: number;
}

const REQUIRED_COLUMNS: Record<FigureKind, string[]> = {
  snr_curves: ["scheme", "B", "N", "snr_db", "pe", "ci"],
  budget_surface: ["scheme", "B", "N", "required_snr_db"],
  roc: ["scheme", "threshold", "p_fp", "p_fn", "B"],
};

type RawRow = Record<string, string>;

function parseRows(text: string, kind: FigureKind): RawRow[] {
  const parsed = Papa.parse<RawRow>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  const fields = parsed.meta.fields ?? [];
  const missing = REQUIRED_COLUMNS[kind].filter((c) => !fields.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(
      `CSV does not match the ${kind} schema, missing columns: ` +
        missing.join(", ")
    );
  }
  return parsed.data;
}

// The simulator prints floats with printf %g, so infinities arrive as
// the strings "inf" / "-inf" and failed cells as "nan".
function num(raw: string | undefined, column: string): number {
  if (raw === "inf" || raw === "Infinity") return Infinity;
  if (raw === "-inf" || raw === "-Infinity") return -Infinity;
  if (raw === "nan") return NaN;
  const value = Number(raw);
  if (raw === "" || raw === undefined || Number.isNaN(value)) {
    throw new SchemaError(`column ${column}: not a number: "${raw}"`);
  }
  return value;
}

function loadMany<T>(
  texts: string[],
  kind: FigureKind,
  convert: (row: RawRow) => T
): T[] {
  const out: T[] = [];
  for (const text of texts) {
    for (const row of parseRows(text, kind)) out.push(convert(row));
  }
  if (out.length === 0) {
    throw new EmptyInputError(`no data rows for ${kind}`);
  }
  return out;
}

export function loadSnrPoints(texts: string[]): SnrPoint[] {
  return loadMany(texts, "snr_curves", (row) => ({
    scheme: row.scheme,
    budget: num(row.B, "B"),
    length: num(row.N, "N"),
    snrDb: num(row.snr_db, "snr_db"),
    pe: num(row.pe, "pe"),
    ci: num(row.ci, "ci"),
  }));
}

export function loadBudgetCells(texts: string[]): BudgetCell[] {
  return loadMany(texts, "budget_surface", (row) => ({
    scheme: row.scheme,
    budget: num(row.B, "B"),
    length: num(row.N, "N"),
    requiredSnrDb:
      row.required_snr_db === "unreachable"
        ? null
        : num(row.required_snr_db, "required_snr_db"),
  }));
}

export function loadRocPoints(texts: string[]): RocPoint[] {
  return loadMany(texts, "roc", (row) => ({
    scheme: row.scheme,
    budget: num(row.B, "B"),
    threshold: num(row.threshold, "threshold"),
    pFp: num(row.p_fp, "p_fp"),
    pFn: num(row.p_fn, "p_fn"),
  }));
}
