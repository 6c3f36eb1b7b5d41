// Schlieren rendering: grayscale exp(-c |grad log rho| / max), dark where
// the density gradient is steep. Jet snapshots are mirrored about x=0 so
// the half-domain run renders at full width.
import type { Snapshot } from "./snapshot.js";
import { requireField } from "./snapshot.js";
import { toGray, upsample } from "./raster.js";

export interface SchlierenOptions {
  /** contrast exponent coefficient */
  contrast?: number;
  /** integer pixel upscale */
  scale?: number;
}

export interface GrayImage {
  width: number;
  height: number;
  pixels: Uint8Array;
}

export function mirrorAboutX(field: Float64Array, nx: number, ny: number): Float64Array {
  const out = new Float64Array(2 * nx * ny);
  for (let j = 0; j < ny; j++) {
    for (let i = 0; i < nx; i++) {
      const v = field[j * nx + i];
      out[j * 2 * nx + (nx - 1 - i)] = v;
      out[j * 2 * nx + nx + i] = v;
    }
  }
  return out;
}

/** |grad f| by central differences on the cell-center lattice. */
export function gradientMagnitude(field: Float64Array, nx: number, ny: number, dx: number, dy: number): Float64Array {
  const g = new Float64Array(nx * ny);
  for (let j = 0; j < ny; j++) {
    for (let i = 0; i < nx; i++) {
      const il = Math.max(0, i - 1);
      const ir = Math.min(nx - 1, i + 1);
      const jl = Math.max(0, j - 1);
      const jr = Math.min(ny - 1, j + 1);
      const gx = (field[j * nx + ir] - field[j * nx + il]) / ((ir - il) * dx || 1);
      const gy = (field[jr * nx + i] - field[jl * nx + i]) / ((jr - jl) * dy || 1);
      g[j * nx + i] = Math.hypot(gx, gy);
    }
  }
  return g;
}

export function schlierenImage(snap: Snapshot, opts: SchlierenOptions = {}): GrayImage {
  const contrast = opts.contrast ?? 5.0;
  const scale = Math.max(1, Math.round(opts.scale ?? 4));
  let { nx, ny } = snap.meta;
  const [x0, x1, y0, y1] = snap.meta.domain;
  const dx = (x1 - x0) / nx;
  const dy = (y1 - y0) / ny;

  const rho = requireField(snap, "rho");
  let logRho: Float64Array = new Float64Array(nx * ny);
  for (let c = 0; c < logRho.length; c++) {
    if (!(rho[c] > 0)) throw new Error(`schlieren: nonpositive density in cell ${c}`);
    logRho[c] = Math.log(rho[c]);
  }
  if (snap.meta.problem === "jet") {
    logRho = mirrorAboutX(logRho, nx, ny);
    nx *= 2;
  }

  const grad = gradientMagnitude(logRho, nx, ny, dx, dy);
  let gmax = 0;
  for (const v of grad) if (v > gmax) gmax = v;
  const shade = new Float64Array(nx * ny);
  for (let c = 0; c < shade.length; c++) {
    shade[c] = gmax > 0 ? Math.exp((-contrast * grad[c]) / gmax) : 1.0;
  }

  const up = upsample(shade, nx, ny, scale);
  return { width: up.nx, height: up.ny, pixels: toGray(up.field, up.nx, up.ny, 0, 1) };
}
