import { describe, expect, it } from "vitest";
import { mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import path from "path";
import { FigureKind, SchemaError, column, loadTable } from "../src/schema";

const SAMPLES = path.join(__dirname, "..", "samples");

function tmpCsv(text: string): string {
  const dir = mkdtempSync(path.join(tmpdir(), "plots-"));
  const file = path.join(dir, "t.csv");
  writeFileSync(file, text);
  return file;
}

const SAMPLE_FILES: Array<[FigureKind, string]> = [
  ["trajectory", "trajectory_overlay.csv"],
  ["survival", "survival_errors.csv"],
  ["scaling", "scaling_fit.csv"],
  ["eventA", "eventA.csv"],
];

describe("loadTable", () => {
  it("accepts every bundled summary CSV", () => {
    for (const [kind, name] of SAMPLE_FILES) {
      const t = loadTable(path.join(SAMPLES, name), kind);
      expect(t.rows.length).toBeGreaterThan(0);
      expect(t.rows.every((r) => r.length === t.columns.length)).toBe(true);
    }
  });

  it("keeps column order and exposes columns by name", () => {
    const t = loadTable(path.join(SAMPLES, "scaling_fit.csv"), "scaling");
    expect(t.columns).toEqual(["n", "ratio", "c_fit", "ratio_nolog", "c_fit_nolog"]);
    const ns = column(t, "n");
    expect(ns).toEqual([...ns].sort((a, b) => a - b));
    // c_fit is one fitted constant repeated per row
    expect(new Set(column(t, "c_fit")).size).toBe(1);
  });

  it("names a missing column", () => {
    const real = readFileSync(path.join(SAMPLES, "trajectory_overlay.csv"), "utf-8");
    const broken = real
      .split("\n")
      .map((ln) => ln.split(",").slice(0, 3).join(","))
      .join("\n");
    expect(() => loadTable(tmpCsv(broken), "trajectory")).toThrowError(
      /missing column "residual"/
    );
  });

  it("names an unexpected column", () => {
    const f = tmpCsv("x,empirical,predicted,residual,extra\n1,2,3,4,5\n");
    expect(() => loadTable(f, "trajectory")).toThrowError(/unexpected column "extra"/);
  });

  it("rejects survival columns that are not err_k<k>", () => {
    const f = tmpCsv("x,err_k100,err_q10\n0,1,1\n");
    expect(() => loadTable(f, "survival")).toThrowError(/unexpected column "err_q10"/);
    const g = tmpCsv("t,err_k100\n0,1\n");
    expect(() => loadTable(g, "survival")).toThrowError(/first column must be "x"/);
    const h = tmpCsv("x\n0\n");
    expect(() => loadTable(h, "survival")).toThrowError(/no err_k<k> columns/);
  });

  it("names the column and row of a non-numeric cell", () => {
    const f = tmpCsv("x,empirical,predicted,residual\n1,2,3,4\n5,oops,7,8\n");
    expect(() => loadTable(f, "trajectory")).toThrowError(
      /column "empirical" has non-numeric value "oops" \(data row 2\)/
    );
  });

  it("rejects an empty table and a missing file", () => {
    const f = tmpCsv("x,empirical,predicted,residual\n");
    expect(() => loadTable(f, "trajectory")).toThrowError(/no data rows/);
    expect(() => loadTable("/nonexistent/q.csv", "trajectory")).toThrowError(SchemaError);
  });
});
