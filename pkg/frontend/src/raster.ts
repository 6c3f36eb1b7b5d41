// Small software canvas (RGB, top-left origin) plus grid-field helpers
// shared by the image renderers.

export class Canvas {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8Array;

  constructor(width: number, height: number, fill: [number, number, number] = [255, 255, 255]) {
    this.width = width;
    this.height = height;
    this.data = new Uint8Array(width * height * 3);
    for (let i = 0; i < width * height; i++) this.data.set(fill, i * 3);
  }

  set(x: number, y: number, rgb: readonly [number, number, number]): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    this.data.set(rgb, (y * this.width + x) * 3);
  }

  line(x0: number, y0: number, x1: number, y1: number, rgb: readonly [number, number, number]): void {
    // Bresenham
    let x = Math.round(x0);
    let y = Math.round(y0);
    const xe = Math.round(x1);
    const ye = Math.round(y1);
    const dx = Math.abs(xe - x);
    const dy = -Math.abs(ye - y);
    const sx = x < xe ? 1 : -1;
    const sy = y < ye ? 1 : -1;
    let err = dx + dy;
    for (;;) {
      this.set(x, y, rgb);
      if (x === xe && y === ye) break;
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y += sy;
      }
    }
  }

  dashedLine(x0: number, y0: number, x1: number, y1: number, rgb: readonly [number, number, number], on = 6, off = 4): void {
    const len = Math.hypot(x1 - x0, y1 - y0);
    if (len === 0) return;
    const steps = Math.ceil(len);
    for (let i = 0; i <= steps; i++) {
      if (i % (on + off) < on) {
        const t = i / steps;
        this.set(Math.round(x0 + t * (x1 - x0)), Math.round(y0 + t * (y1 - y0)), rgb);
      }
    }
  }

  marker(x: number, y: number, rgb: readonly [number, number, number], r = 3): void {
    for (let dy = -r; dy <= r; dy++) {
      for (let dx = -r; dx <= r; dx++) {
        if (dx * dx + dy * dy <= r * r) this.set(Math.round(x) + dx, Math.round(y) + dy, rgb);
      }
    }
  }

  text(x: number, y: number, s: string, rgb: readonly [number, number, number], scale = 1): void {
    let cx = Math.round(x);
    for (const ch of s) {
      const glyph = FONT[ch];
      if (glyph) {
        for (let gy = 0; gy < 7; gy++) {
          for (let gx = 0; gx < 5; gx++) {
            if ((glyph[gy] >> (4 - gx)) & 1) {
              for (let sy = 0; sy < scale; sy++) {
                for (let sx = 0; sx < scale; sx++) {
                  this.set(cx + gx * scale + sx, Math.round(y) + gy * scale + sy, rgb);
                }
              }
            }
          }
        }
      }
      cx += 6 * scale;
    }
  }
}

// 5x7 glyphs, one byte per row, bit 4 = leftmost column. Only the
// characters the plot labels use.
const FONT: Record<string, number[]> = {
  "0": [0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e],
  "1": [0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e],
  "2": [0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f],
  "3": [0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e],
  "4": [0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02],
  "5": [0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e],
  "6": [0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e],
  "7": [0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
  "8": [0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e],
  "9": [0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c],
  "-": [0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00],
  ".": [0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c],
  e: [0x00, 0x00, 0x0e, 0x11, 0x1f, 0x10, 0x0e],
  l: [0x0c, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e],
  N: [0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11],
  s: [0x00, 0x00, 0x0f, 0x10, 0x0e, 0x01, 0x1e],
  o: [0x00, 0x00, 0x0e, 0x11, 0x11, 0x11, 0x0e],
  p: [0x00, 0x00, 0x1e, 0x11, 0x1e, 0x10, 0x10],
  r: [0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10],
  " ": [0, 0, 0, 0, 0, 0, 0],
};

/** Bilinear upsample of an ny*nx grid by an integer factor (>= 1). */
export function upsample(field: Float64Array, nx: number, ny: number, factor: number): { field: Float64Array; nx: number; ny: number } {
  if (factor <= 1) return { field, nx, ny };
  const ox = nx * factor;
  const oy = ny * factor;
  const out = new Float64Array(ox * oy);
  for (let j = 0; j < oy; j++) {
    // output pixel centers map back onto the input cell-center lattice
    const fy = ny === 1 ? 0 : (j + 0.5) / factor - 0.5;
    const y0 = Math.max(0, Math.min(ny - 1, Math.floor(fy)));
    const y1 = Math.min(ny - 1, y0 + 1);
    const ty = Math.max(0, Math.min(1, fy - y0));
    for (let i = 0; i < ox; i++) {
      const fx = nx === 1 ? 0 : (i + 0.5) / factor - 0.5;
      const x0 = Math.max(0, Math.min(nx - 1, Math.floor(fx)));
      const x1 = Math.min(nx - 1, x0 + 1);
      const tx = Math.max(0, Math.min(1, fx - x0));
      const a = field[y0 * nx + x0];
      const b = field[y0 * nx + x1];
      const c = field[y1 * nx + x0];
      const d = field[y1 * nx + x1];
      out[j * ox + i] = (1 - ty) * ((1 - tx) * a + tx * b) + ty * ((1 - tx) * c + tx * d);
    }
  }
  return { field: out, nx: ox, ny: oy };
}

/** Map an ny*nx field (j-outer, y increasing upward) to gray8 pixels, top row first. */
export function toGray(field: Float64Array, nx: number, ny: number, lo: number, hi: number): Uint8Array {
  const px = new Uint8Array(nx * ny);
  const span = hi - lo;
  for (let j = 0; j < ny; j++) {
    const dst = (ny - 1 - j) * nx;
    for (let i = 0; i < nx; i++) {
      const t = span > 0 ? (field[j * nx + i] - lo) / span : 0;
      px[dst + i] = Math.max(0, Math.min(255, Math.round(255 * t)));
    }
  }
  return px;
}
