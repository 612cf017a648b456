/** Strict parsing for the harness's CSV outputs (plain comma-separated
 * numerics, one header line, no quoting). */

export interface Table {
  columns: string[];
  rows: number[][];
}

export function parseCsv(text: string, path: string): Table {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new Error(`${path}: empty file`);
  }
  const columns = lines[0].split(",");
  const rows: number[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== columns.length) {
      throw new Error(`${path}: line ${i + 1} has ${cells.length} cells, expected ${columns.length}`);
    }
    const row = cells.map((cell) => {
      const v = Number(cell);
      if (cell === "" || Number.isNaN(v) && cell !== "nan") {
        throw new Error(`${path}: line ${i + 1} has a non-numeric cell ${JSON.stringify(cell)}`);
      }
      return v;
    });
    rows.push(row);
  }
  return { columns, rows };
}

export function requireColumns(table: Table, needed: string[], path: string): void {
  for (const name of needed) {
    if (!table.columns.includes(name)) {
      throw new Error(`${path}: missing required column "${name}"`);
    }
  }
}

export function column(table: Table, name: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new Error(`missing required column "${name}"`);
  }
  return table.rows.map((row) => row[idx]);
}
