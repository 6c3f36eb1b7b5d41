// Reader for the convergence table: "# N l1 l2 order_l1 order_l2" then
// one row per grid; the coarsest row has no order entries.
import { readFileSync } from "node:fs";

export interface ConvergenceRow {
  n: number;
  l1: number;
  l2: number;
  orderL1: number | null;
  orderL2: number | null;
}

export function parseConvergenceTable(text: string): ConvergenceRow[] {
  const rows: ConvergenceRow[] = [];
  for (const raw of text.split("\n")) {
    const line = raw.trim();
    if (line === "" || line.startsWith("#")) continue;
    const parts = line.split(/\s+/).map(Number);
    if (parts.some((v) => !Number.isFinite(v))) {
      throw new Error(`convergence table: non-numeric entry in '${line}'`);
    }
    if (parts.length === 3) {
      rows.push({ n: parts[0], l1: parts[1], l2: parts[2], orderL1: null, orderL2: null });
    } else if (parts.length === 5) {
      rows.push({ n: parts[0], l1: parts[1], l2: parts[2], orderL1: parts[3], orderL2: parts[4] });
    } else {
      throw new Error(`convergence table: expected 3 or 5 columns, got ${parts.length}`);
    }
  }
  if (rows.length < 2) throw new Error("convergence table: need at least two rows");
  for (const r of rows) {
    if (!(r.n > 0) || !(r.l1 > 0) || !(r.l2 > 0)) {
      throw new Error("convergence table: N and errors must be positive");
    }
  }
  return rows;
}

export function readConvergenceTable(path: string): ConvergenceRow[] {
  return parseConvergenceTable(readFileSync(path, "utf8"));
}
