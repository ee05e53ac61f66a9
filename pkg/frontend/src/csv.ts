/** Minimal CSV reading for the documented twinmarket output schemas. */

import { readFileSync } from "node:fs";

export interface Table {
  header: string[];
  rows: string[][];
}

export class SchemaError extends Error {}

export function parseCsv(text: string): Table {
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length === 0) throw new SchemaError("empty CSV");
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((l) => l.split(","));
  for (const row of rows) {
    if (row.length !== header.length) {
      throw new SchemaError(
        `row width ${row.length} does not match header width ${header.length}`,
      );
    }
  }
  return { header, rows };
}

export function readCsv(path: string): Table {
  return parseCsv(readFileSync(path, "utf8"));
}

/** Column values as numbers; throws naming the column when absent. */
export function column(table: Table, name: string): number[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) throw new SchemaError(`missing column '${name}'`);
  return table.rows.map((r) => {
    const v = Number(r[idx]);
    if (Number.isNaN(v) && r[idx] !== "nan") {
      throw new SchemaError(`non-numeric value '${r[idx]}' in column '${name}'`);
    }
    return v;
  });
}

/** String-valued column (e.g. class labels, booleans). */
export function textColumn(table: Table, name: string): string[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) throw new SchemaError(`missing column '${name}'`);
  return table.rows.map((r) => r[idx]);
}

export function requireColumns(table: Table, names: string[]): void {
  for (const n of names) {
    if (!table.header.includes(n)) throw new SchemaError(`missing column '${n}'`);
  }
}
