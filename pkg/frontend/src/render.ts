/**
 * Server-side SVG rendering. Re-rendering a spec must give identical bytes,
 * but zrender numbers its instances, clip paths and hover-style classes with
 * process-global counters that leak into ids like `zr3-c0` / `zr3-cls-17`.
 * Renumbering those tokens by first appearance makes the output a pure
 * function of the chart option, however many charts rendered before it.
 */
import { mkdirSync, writeFileSync } from "fs";
import path from "path";
import * as echarts from "echarts";
import { FigureSpec, buildOption, loadSpecFile } from "./figures";
import { loadTable } from "./schema";

function canonicalizeIds(svg: string): string {
  const seen = new Map<string, string>();
  const counters = new Map<string, number>();
  return svg.replace(/\bzr\d+-([a-z]+)(-?)(\d+)\b/g, (tok, prefix, sep) => {
    let out = seen.get(tok);
    if (out === undefined) {
      const n = counters.get(prefix) ?? 0;
      counters.set(prefix, n + 1);
      out = `zr0-${prefix}${sep}${n}`;
      seen.set(tok, out);
    }
    return out;
  });
}

export function renderToSvg(spec: FigureSpec): string {
  const tables = spec.input.map((f) => loadTable(f, spec.kind));
  const option = buildOption(spec, tables);
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width: spec.width,
    height: spec.height,
  });
  try {
    chart.setOption(option);
    return canonicalizeIds(chart.renderToSVGString());
  } finally {
    chart.dispose();
  }
}

/** Render one spec and write its SVG; returns the output path. */
export function renderFigure(spec: FigureSpec): string {
  const svg = renderToSvg(spec);
  mkdirSync(path.dirname(spec.output), { recursive: true });
  writeFileSync(spec.output, svg);
  return spec.output;
}

export function renderSpecFile(file: string): string {
  return renderFigure(loadSpecFile(file));
}
