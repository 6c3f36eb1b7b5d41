import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";

export const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

/** Minimal snapshot text with the solver's three-line header. */
export function syntheticSnapshot(
  nx: number,
  ny: number,
  cell: (i: number, j: number) => Partial<Record<string, number>>,
  problem = "test",
  domain: [number, number, number, number] = [0, 1, 0, 1],
): string {
  const cols = ["i", "j", "x", "y", "rho", "v1", "v2", "v3", "p", "B1", "B2", "B3", "D", "m1", "m2", "m3", "E"];
  const lines = [
    `# time=0 Nx=${nx} Ny=${ny} gamma=1.6666666666666667 k=2`,
    `# problem=${problem} domain=${domain.join(",")}`,
    `# ${cols.join(" ")}`,
  ];
  const [x0, x1, y0, y1] = domain;
  const dx = (x1 - x0) / nx;
  const dy = (y1 - y0) / ny;
  for (let j = 0; j < ny; j++) {
    for (let i = 0; i < nx; i++) {
      const base: Record<string, number> = {
        i,
        j,
        x: x0 + (i + 0.5) * dx,
        y: y0 + (j + 0.5) * dy,
        rho: 1,
        v1: 0,
        v2: 0,
        v3: 0,
        p: 1,
        B1: 0,
        B2: 0,
        B3: 0,
        D: 1,
        m1: 0,
        m2: 0,
        m3: 0,
        E: 2,
      };
      Object.assign(base, cell(i, j));
      lines.push(cols.map((c) => String(base[c])).join(" "));
    }
  }
  return lines.join("\n") + "\n";
}
