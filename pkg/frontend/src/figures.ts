/**
 * Figure specs and echarts option builders.
 *
 * A FigureSpec says which summary CSV(s) to read, which of the four figure
 * kinds to draw, and where the SVG goes. Everything plotted comes straight
 * out of the CSV columns — predictions are exported by the harness next to
 * the empirics, so nothing numeric happens here beyond picking axis scales.
 */
import path from "path";
import { readFileSync } from "fs";
import { FigureKind, KINDS, SchemaError, Table, column } from "./schema";

export class SpecError extends Error {}

export interface AxisOptions {
  xLog?: boolean;
  yLog?: boolean;
  xLabel?: string;
  yLabel?: string;
}

export interface FigureSpec {
  kind: FigureKind;
  /** CSV path(s); relative paths resolve against the spec file's directory. */
  input: string[];
  output: string;
  title?: string;
  width: number;
  height: number;
  axes: AxisOptions;
}

const SPEC_KEYS = new Set(["kind", "input", "output", "title", "width", "height", "axes"]);
const AXIS_KEYS = new Set(["xLog", "yLog", "xLabel", "yLabel"]);

function asOptNumber(v: unknown, name: string): number | undefined {
  if (v === undefined) return undefined;
  if (typeof v !== "number" || !isFinite(v) || v <= 0) {
    throw new SpecError(`spec field "${name}" must be a positive number`);
  }
  return v;
}

/** Validate a parsed JSON object and resolve its paths against baseDir. */
export function parseSpec(raw: unknown, baseDir: string): FigureSpec {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new SpecError("figure spec must be a JSON object");
  }
  const obj = raw as Record<string, unknown>;
  for (const k of Object.keys(obj)) {
    if (!SPEC_KEYS.has(k)) throw new SpecError(`unknown spec field "${k}"`);
  }
  const kind = obj.kind;
  if (typeof kind !== "string" || !(KINDS as string[]).includes(kind)) {
    throw new SpecError(
      `spec field "kind" must be one of ${KINDS.join(", ")}, got ${JSON.stringify(kind)}`
    );
  }
  const rawInput = obj.input;
  const inputs =
    typeof rawInput === "string" ? [rawInput] : Array.isArray(rawInput) ? rawInput : null;
  if (!inputs || inputs.length === 0 || !inputs.every((p) => typeof p === "string")) {
    throw new SpecError(`spec field "input" must be a CSV path or non-empty list of paths`);
  }
  if (typeof obj.output !== "string" || !obj.output.endsWith(".svg")) {
    throw new SpecError(`spec field "output" must be a .svg path`);
  }
  if (obj.title !== undefined && typeof obj.title !== "string") {
    throw new SpecError(`spec field "title" must be a string`);
  }
  const axes: AxisOptions = {};
  if (obj.axes !== undefined) {
    if (typeof obj.axes !== "object" || obj.axes === null) {
      throw new SpecError(`spec field "axes" must be an object`);
    }
    for (const [k, v] of Object.entries(obj.axes as Record<string, unknown>)) {
      if (!AXIS_KEYS.has(k)) throw new SpecError(`unknown axes field "${k}"`);
      if ((k === "xLog" || k === "yLog") && typeof v !== "boolean") {
        throw new SpecError(`axes field "${k}" must be a boolean`);
      }
      if ((k === "xLabel" || k === "yLabel") && typeof v !== "string") {
        throw new SpecError(`axes field "${k}" must be a string`);
      }
      (axes as Record<string, unknown>)[k] = v;
    }
  }
  return {
    kind: kind as FigureKind,
    input: (inputs as string[]).map((p) => path.resolve(baseDir, p)),
    output: path.resolve(baseDir, obj.output),
    title: obj.title as string | undefined,
    width: asOptNumber(obj.width, "width") ?? 800,
    height: asOptNumber(obj.height, "height") ?? 500,
    axes,
  };
}

export function loadSpecFile(file: string): FigureSpec {
  let text: string;
  try {
    text = readFileSync(file, "utf-8");
  } catch (err) {
    throw new SpecError(`cannot read ${file}: ${(err as Error).message}`);
  }
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new SpecError(`${file}: not valid JSON (${(err as Error).message})`);
  }
  try {
    return parseSpec(raw, path.dirname(path.resolve(file)));
  } catch (err) {
    if (err instanceof SpecError) throw new SpecError(`${file}: ${err.message}`);
    throw err;
  }
}

// ---------------------------------------------------------------------------
// echarts option builders (plain data objects; rendering lives in render.ts)
// ---------------------------------------------------------------------------

type Dict = Record<string, unknown>;

function axis(log: boolean, name: string | undefined, extra: Dict = {}): Dict {
  return {
    type: log ? "log" : "value",
    name: name ?? "",
    nameLocation: "middle",
    nameGap: 28,
    axisLine: { show: true },
    ...extra,
  };
}

function line(name: string, xs: number[], ys: number[], extra: Dict = {}): Dict {
  return {
    name,
    type: "line",
    showSymbol: false,
    data: xs.map((x, i) => [x, ys[i]]),
    ...extra,
  };
}

/** Series label; tagged with the file stem when several CSVs are overlaid. */
function tag(base: string, t: Table, multi: boolean): string {
  return multi ? `${base} (${path.basename(t.file, ".csv")})` : base;
}

function trajectoryOption(tables: Table[], spec: FigureSpec): Dict {
  const multi = tables.length > 1;
  const series: Dict[] = [];
  for (const t of tables) {
    const xs = column(t, "x");
    series.push(
      line(tag("empirical", t, multi), xs, column(t, "empirical")),
      line(tag("predicted", t, multi), xs, column(t, "predicted"), {
        lineStyle: { type: "dashed" },
      }),
      line(tag("residual", t, multi), xs, column(t, "residual"), {
        xAxisIndex: 1,
        yAxisIndex: 1,
      })
    );
  }
  const xType = spec.axes.xLog ?? false;
  return {
    grid: [
      { left: 80, right: 30, top: 60, height: "50%" },
      { left: 80, right: 30, bottom: 45, height: "18%" },
    ],
    xAxis: [
      axis(xType, spec.axes.xLabel ?? "traversal step", { gridIndex: 0 }),
      axis(xType, spec.axes.xLabel ?? "traversal step", { gridIndex: 1 }),
    ],
    yAxis: [
      axis(spec.axes.yLog ?? false, spec.axes.yLabel ?? "open pairs", {
        gridIndex: 0,
        nameGap: 55,
      }),
      axis(false, "residual", { gridIndex: 1, nameGap: 55 }),
    ],
    series,
  };
}

function survivalOption(tables: Table[], spec: FigureSpec): Dict {
  const multi = tables.length > 1;
  const series: Dict[] = [];
  for (const t of tables) {
    const xs = column(t, "x");
    for (const c of t.columns.slice(1)) {
      series.push(line(tag(c, t, multi), xs, column(t, c)));
    }
  }
  return {
    xAxis: axis(spec.axes.xLog ?? false, spec.axes.xLabel ?? "x"),
    yAxis: axis(spec.axes.yLog ?? true, spec.axes.yLabel ?? "|P_k - phi|", { nameGap: 48 }),
    series,
  };
}

function scalingOption(tables: Table[], spec: FigureSpec): Dict {
  const multi = tables.length > 1;
  const series: Dict[] = [];
  for (const t of tables) {
    const ns = column(t, "n");
    const cFit = column(t, "c_fit")[0];
    const cAlt = column(t, "c_fit_nolog")[0];
    const mark = (v: number, label: string) => ({
      silent: true,
      symbol: "none",
      label: { formatter: `${label} = ${v}`, position: "insideEndTop" },
      lineStyle: { type: "dashed" },
      data: [{ yAxis: v }],
    });
    series.push(
      line(tag("ratio", t, multi), ns, column(t, "ratio"), {
        showSymbol: true,
        markLine: mark(cFit, "c_fit"),
      }),
      line(tag("ratio_nolog", t, multi), ns, column(t, "ratio_nolog"), {
        showSymbol: true,
        lineStyle: { type: "dotted" },
        markLine: mark(cAlt, "c_fit_nolog"),
      })
    );
  }
  return {
    xAxis: axis(spec.axes.xLog ?? true, spec.axes.xLabel ?? "n"),
    yAxis: axis(spec.axes.yLog ?? false, spec.axes.yLabel ?? "final edges / model", {
      nameGap: 48,
      scale: true,
    }),
    series,
  };
}

function eventAOption(tables: Table[], spec: FigureSpec): Dict {
  const multi = tables.length > 1;
  const series: Dict[] = [];
  for (const t of tables) {
    const xs = column(t, "i");
    for (const c of t.columns.slice(1)) {
      series.push(line(tag(c, t, multi), xs, column(t, c), { showSymbol: true }));
    }
  }
  return {
    xAxis: axis(spec.axes.xLog ?? false, spec.axes.xLabel ?? "round", { minInterval: 1 }),
    yAxis: axis(spec.axes.yLog ?? false, spec.axes.yLabel ?? "tracking deviation", {
      nameGap: 48,
    }),
    series,
  };
}

const BUILDERS: Record<FigureKind, (tables: Table[], spec: FigureSpec) => Dict> = {
  trajectory: trajectoryOption,
  survival: survivalOption,
  scaling: scalingOption,
  eventA: eventAOption,
};

/** Full echarts option for a spec whose tables are already loaded. */
export function buildOption(spec: FigureSpec, tables: Table[]): Dict {
  if (tables.length === 0) throw new SchemaError("no input tables");
  const base: Dict = {
    animation: false,
    backgroundColor: "#ffffff",
    legend: { top: spec.title ? 26 : 6, type: "plain" },
    ...BUILDERS[spec.kind](tables, spec),
  };
  if (spec.title) {
    base.title = { text: spec.title, left: "center", textStyle: { fontSize: 14 } };
  }
  return base;
}
