/** Shared argument handling for the figure scripts. */

import { writeFileSync } from "node:fs";
import { join } from "node:path";

import { SchemaError } from "./csv";

export interface Args {
  inputs: string[];
  out: string;
}

export function parseArgs(argv: string[], usage: string): Args {
  const inputs: string[] = [];
  let out = "";
  for (let i = 0; i < argv.length; i += 1) {
    if (argv[i] === "--in") {
      inputs.push(argv[i + 1]);
      i += 1;
    } else if (argv[i] === "--out") {
      out = argv[i + 1];
      i += 1;
    } else {
      throw new SchemaError(`unknown argument '${argv[i]}'\nusage: ${usage}`);
    }
  }
  if (inputs.length === 0 || !out) {
    throw new SchemaError(`usage: ${usage}`);
  }
  return { inputs, out };
}

export function inPath(args: Args, index: number, file: string): string {
  const base = args.inputs[Math.min(index, args.inputs.length - 1)];
  return base.endsWith(".csv") ? base : join(base, file);
}

export function runFigure(
  usage: string,
  render: (args: Args) => string,
): void {
  try {
    const args = parseArgs(process.argv.slice(2), usage);
    writeFileSync(args.out, render(args));
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`${err.message}\n`);
      process.exit(1);
    }
    const msg = err instanceof Error ? err.message : String(err);
    process.stderr.write(`${msg}\n`);
    process.exit(1);
  }
}
