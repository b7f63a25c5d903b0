export { FigureKind, KINDS, SchemaError, Table, loadTable, column } from "./schema";
export { AxisOptions, FigureSpec, SpecError, buildOption, loadSpecFile, parseSpec } from "./figures";
export { renderFigure, renderSpecFile, renderToSvg } from "./render";
