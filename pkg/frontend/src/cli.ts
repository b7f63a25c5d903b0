#!/usr/bin/env node
/**
 * plots render --spec <figure.json> [--spec <figure.json> ...]
 *
 * Exit codes follow the simulator's convention: 0 ok, 2 bad spec/CSV.
 */
import { parseArgs } from "node:util";
import { SpecError } from "./figures";
import { SchemaError } from "./schema";
import { renderSpecFile } from "./render";

const USAGE = "usage: plots render --spec <figure.json> [--spec ...]";

export function run(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: { spec: { type: "string", multiple: true } },
    });
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    console.error(USAGE);
    return 2;
  }
  const [command, ...rest] = parsed.positionals;
  if (command !== "render" || rest.length > 0) {
    console.error(USAGE);
    return 2;
  }
  const specs = parsed.values.spec ?? [];
  if (specs.length === 0) {
    console.error("error: at least one --spec is required");
    console.error(USAGE);
    return 2;
  }
  try {
    for (const file of specs) {
      const out = renderSpecFile(file);
      console.log(`wrote ${out}`);
    }
  } catch (err) {
    if (err instanceof SpecError || err instanceof SchemaError) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    throw err;
  }
  return 0;
}

if (require.main === module) {
  process.exit(run(process.argv.slice(2)));
}
