// Reader for the solver's plain-text snapshot format: three "#" header
// lines (time/grid, problem/domain, column names) followed by one row of
// cell means per line, j-outer. Only the text table is consumed; the
// .modal restart sidecar is out of scope here.
import { readFileSync } from "node:fs";

export interface SnapshotMeta {
  time: number;
  nx: number;
  ny: number;
  gamma: number;
  k: number;
  problem: string;
  domain: [number, number, number, number];
}

export interface Snapshot {
  meta: SnapshotMeta;
  columns: string[];
  /** column name -> ny*nx values, row-major with j (y) outer */
  fields: Map<string, Float64Array>;
}

function parseKeyValues(line: string): Map<string, string> {
  const out = new Map<string, string>();
  for (const tok of line.replace(/^#\s*/, "").trim().split(/\s+/)) {
    const eq = tok.indexOf("=");
    if (eq > 0) out.set(tok.slice(0, eq), tok.slice(eq + 1));
  }
  return out;
}

export function parseSnapshot(text: string): Snapshot {
  const lines = text.split("\n");
  if (lines.length < 4 || !lines[0].startsWith("#") || !lines[1].startsWith("#") || !lines[2].startsWith("#")) {
    throw new Error("snapshot: expected three # header lines");
  }
  const h1 = parseKeyValues(lines[0]);
  const h2 = parseKeyValues(lines[1]);
  const need = (m: Map<string, string>, k: string): string => {
    const v = m.get(k);
    if (v === undefined) throw new Error(`snapshot: header missing ${k}=`);
    return v;
  };
  const domain = need(h2, "domain").split(",").map(Number);
  if (domain.length !== 4 || domain.some((d) => !Number.isFinite(d))) {
    throw new Error("snapshot: bad domain header");
  }
  const meta: SnapshotMeta = {
    time: Number(need(h1, "time")),
    nx: Number(need(h1, "Nx")),
    ny: Number(need(h1, "Ny")),
    gamma: Number(need(h1, "gamma")),
    k: Number(need(h1, "k")),
    problem: h2.get("problem") ?? "",
    domain: domain as [number, number, number, number],
  };
  if (!Number.isInteger(meta.nx) || !Number.isInteger(meta.ny) || meta.nx < 1 || meta.ny < 1) {
    throw new Error("snapshot: bad Nx/Ny header");
  }

  const columns = lines[2].replace(/^#\s*/, "").trim().split(/\s+/);
  const ncell = meta.nx * meta.ny;
  const data = columns.map(() => new Float64Array(ncell));
  let row = 0;
  for (let li = 3; li < lines.length; li++) {
    const line = lines[li].trim();
    if (line === "" || line.startsWith("#")) continue;
    const parts = line.split(/\s+/);
    if (parts.length !== columns.length) {
      throw new Error(`snapshot: row ${row} has ${parts.length} values, expected ${columns.length}`);
    }
    if (row >= ncell) throw new Error(`snapshot: more than ${ncell} rows`);
    for (let c = 0; c < columns.length; c++) {
      const v = Number(parts[c]);
      if (!Number.isFinite(v)) throw new Error(`snapshot: non-finite value in row ${row}`);
      data[c][row] = v;
    }
    row++;
  }
  if (row !== ncell) throw new Error(`snapshot: ${row} rows, expected ${ncell}`);

  const fields = new Map<string, Float64Array>();
  columns.forEach((name, c) => fields.set(name, data[c]));
  return { meta, columns, fields };
}

export function readSnapshot(path: string): Snapshot {
  return parseSnapshot(readFileSync(path, "utf8"));
}

export function requireField(snap: Snapshot, name: string): Float64Array {
  const f = snap.fields.get(name);
  if (!f) throw new Error(`snapshot: missing column '${name}'`);
  return f;
}
