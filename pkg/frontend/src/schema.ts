/**
 * CSV loading + schema checks for the summary files the harness `report`
 * command writes. Columns are matched exactly (order included) so a schema
 * drift on either side fails loudly instead of plotting garbage.
 */
import { readFileSync } from "fs";
import { parse } from "papaparse";

export type FigureKind = "trajectory" | "survival" | "scaling" | "eventA";

export const KINDS: FigureKind[] = ["trajectory", "survival", "scaling", "eventA"];

/** Parsed CSV: column names in file order plus row-major numeric cells. */
export interface Table {
  file: string;
  columns: string[];
  rows: number[][];
}

export class SchemaError extends Error {}

// Fixed column lists; survival is special-cased (x + one err_k<k> per curve).
const FIXED_COLUMNS: Partial<Record<FigureKind, string[]>> = {
  trajectory: ["x", "empirical", "predicted", "residual"],
  scaling: ["n", "ratio", "c_fit", "ratio_nolog", "c_fit_nolog"],
  eventA: ["i", "devA1", "devA2", "devA3_j1", "devA3_j2", "devA3_j3", "devA3_j4", "devA3_j5"],
};

const ERR_COL = /^err_k\d+$/;

function checkColumns(kind: FigureKind, columns: string[], file: string): void {
  if (kind === "survival") {
    if (columns[0] !== "x") {
      throw new SchemaError(
        `${file}: first column must be "x" for kind "survival", got "${columns[0] ?? ""}"`
      );
    }
    const curves = columns.slice(1);
    if (curves.length === 0) {
      throw new SchemaError(`${file}: no err_k<k> columns for kind "survival"`);
    }
    for (const c of curves) {
      if (!ERR_COL.test(c)) {
        throw new SchemaError(`${file}: unexpected column "${c}" for kind "survival"`);
      }
    }
    return;
  }
  const want = FIXED_COLUMNS[kind]!;
  for (const w of want) {
    if (!columns.includes(w)) {
      throw new SchemaError(`${file}: missing column "${w}" for kind "${kind}"`);
    }
  }
  for (const c of columns) {
    if (!want.includes(c)) {
      throw new SchemaError(`${file}: unexpected column "${c}" for kind "${kind}"`);
    }
  }
}

/** Read one CSV and verify it against the schema of `kind`. */
export function loadTable(file: string, kind: FigureKind): Table {
  let text: string;
  try {
    text = readFileSync(file, "utf-8");
  } catch (err) {
    throw new SchemaError(`cannot read ${file}: ${(err as Error).message}`);
  }
  const parsed = parse<Record<string, unknown>>(text, {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  const columns = (parsed.meta.fields ?? []).map((f) => f.trim());
  checkColumns(kind, columns, file);
  if (parsed.data.length === 0) {
    throw new SchemaError(`${file}: no data rows`);
  }
  const rows: number[][] = [];
  parsed.data.forEach((rec, i) => {
    const row = columns.map((c) => {
      const v = rec[c];
      if (typeof v !== "number" || !isFinite(v)) {
        throw new SchemaError(
          `${file}: column "${c}" has non-numeric value ${JSON.stringify(v)} (data row ${i + 1})`
        );
      }
      return v;
    });
    rows.push(row);
  });
  return { file, columns, rows };
}

/** Column values in file order. The column is assumed present (post-check). */
export function column(t: Table, name: string): number[] {
  const idx = t.columns.indexOf(name);
  return t.rows.map((r) => r[idx]);
}
