// Contour rendering: equally spaced levels of log(rho) or |B|, each level
// drawn as the set of pixels where the (upsampled) field crosses it. A
// constant field has no crossings and renders blank rather than failing.
import type { Snapshot } from "./snapshot.js";
import { requireField } from "./snapshot.js";
import type { GrayImage } from "./schlieren.js";
import { mirrorAboutX } from "./schlieren.js";
import { upsample } from "./raster.js";

export type ContourField = "log_rho" | "Bmag";

export interface ContourOptions {
  levels?: number;
  scale?: number;
}

export function contourLevels(lo: number, hi: number, n: number): number[] {
  // n interior levels, none sitting on the extremes
  const out: number[] = [];
  for (let i = 1; i <= n; i++) out.push(lo + (i * (hi - lo)) / (n + 1));
  return out;
}

export function extractField(snap: Snapshot, which: ContourField): Float64Array {
  if (which === "log_rho") {
    const rho = requireField(snap, "rho");
    const out = new Float64Array(rho.length);
    for (let c = 0; c < rho.length; c++) {
      if (!(rho[c] > 0)) throw new Error(`contours: nonpositive density in cell ${c}`);
      out[c] = Math.log(rho[c]);
    }
    return out;
  }
  const b1 = requireField(snap, "B1");
  const b2 = requireField(snap, "B2");
  const b3 = requireField(snap, "B3");
  const out = new Float64Array(b1.length);
  for (let c = 0; c < out.length; c++) {
    out[c] = Math.hypot(b1[c], b2[c], b3[c]);
  }
  return out;
}

export function contourImage(snap: Snapshot, which: ContourField, opts: ContourOptions = {}): GrayImage {
  const nLevels = opts.levels ?? 40;
  const scale = Math.max(1, Math.round(opts.scale ?? 4));
  if (!(nLevels >= 1)) throw new Error("contours: levels must be >= 1");

  let { nx, ny } = snap.meta;
  let field = extractField(snap, which);
  if (snap.meta.problem === "jet") {
    field = mirrorAboutX(field, nx, ny);
    nx *= 2;
  }
  const up = upsample(field, nx, ny, scale);
  field = up.field;
  nx = up.nx;
  ny = up.ny;

  let lo = Infinity;
  let hi = -Infinity;
  for (const v of field) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  const levels = hi > lo ? contourLevels(lo, hi, nLevels) : [];

  const pixels = new Uint8Array(nx * ny).fill(255);
  for (const L of levels) {
    for (let j = 0; j < ny; j++) {
      for (let i = 0; i < nx; i++) {
        const f = field[j * nx + i] - L;
        const right = i + 1 < nx ? field[j * nx + i + 1] - L : f;
        const down = j + 1 < ny ? field[(j + 1) * nx + i] - L : f;
        if (f === 0 || f * right < 0 || f * down < 0) {
          pixels[(ny - 1 - j) * nx + i] = 0;
        }
      }
    }
  }
  return { width: nx, height: ny, pixels };
}
