/** Column-oriented CSV reader for the trajectory/constants outputs. */

import * as fs from "node:fs";

export interface Table {
  columns: string[];
  data: Map<string, number[]>;
  rows: number;
}

export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new Error("CSV is empty");
  }
  const columns = lines[0].split(",").map((c) => c.trim());
  if (columns.length === 0 || columns[0] === "") {
    throw new Error("CSV has no header");
  }
  const data = new Map<string, number[]>(columns.map((c) => [c, []]));
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== columns.length) {
      throw new Error(
        `CSV row ${i} has ${parts.length} fields, expected ${columns.length}`,
      );
    }
    for (let j = 0; j < columns.length; j++) {
      data.get(columns[j])!.push(Number(parts[j]));
    }
  }
  return { columns, data, rows: lines.length - 1 };
}

export function readCsv(path: string): Table {
  if (!fs.existsSync(path)) {
    throw new Error(`CSV file not found: ${path}`);
  }
  return parseCsv(fs.readFileSync(path, "utf-8"));
}

/** Fetch a column, throwing an error that names the missing column. */
export function column(table: Table, name: string, source = "CSV"): number[] {
  const col = table.data.get(name);
  if (col === undefined) {
    throw new Error(`column "${name}" not found in ${source}`);
  }
  return col;
}
