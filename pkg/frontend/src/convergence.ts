// Log-log convergence plot: l1 and l2 error series against N plus a
// slope -3 reference anchored at the coarsest l1 entry. Geometry is
// computed separately from rasterization so tests can assert on exact
// pixel coordinates.
import type { ConvergenceRow } from "./table.js";
import { Canvas } from "./raster.js";

export interface Point {
  x: number;
  y: number;
}

export interface PlotGeometry {
  width: number;
  height: number;
  margins: { left: number; right: number; top: number; bottom: number };
  l1: Point[];
  l2: Point[];
  ref: [Point, Point];
  xTicks: { x: number; label: string }[];
  yTicks: { y: number; label: string }[];
}

function powLabel(exp: number): string {
  return `1e${exp}`;
}

export function convergenceGeometry(rows: ConvergenceRow[], width = 640, height = 480): PlotGeometry {
  const margins = { left: 70, right: 24, top: 24, bottom: 48 };
  const xs = rows.map((r) => Math.log10(r.n));
  const refVals = rows.map((r) => Math.log10(rows[0].l1) - 3 * (Math.log10(r.n) - xs[0]));
  const ys = [
    ...rows.map((r) => Math.log10(r.l1)),
    ...rows.map((r) => Math.log10(r.l2)),
    ...refVals,
  ];
  const xlo = Math.min(...xs);
  const xhi = Math.max(...xs);
  const ylo = Math.min(...ys);
  const yhi = Math.max(...ys);
  const xpad = 0.05 * (xhi - xlo || 1);
  const ypad = 0.05 * (yhi - ylo || 1);
  const X0 = xlo - xpad;
  const X1 = xhi + xpad;
  const Y0 = ylo - ypad;
  const Y1 = yhi + ypad;

  const innerW = width - margins.left - margins.right;
  const innerH = height - margins.top - margins.bottom;
  const px = (xl: number): number => margins.left + ((xl - X0) / (X1 - X0)) * innerW;
  const py = (yl: number): number => margins.top + ((Y1 - yl) / (Y1 - Y0)) * innerH;

  const l1 = rows.map((r) => ({ x: px(Math.log10(r.n)), y: py(Math.log10(r.l1)) }));
  const l2 = rows.map((r) => ({ x: px(Math.log10(r.n)), y: py(Math.log10(r.l2)) }));
  const ref: [Point, Point] = [
    { x: px(xs[0]), y: py(refVals[0]) },
    { x: px(xs[xs.length - 1]), y: py(refVals[refVals.length - 1]) },
  ];

  const xTicks = rows.map((r) => ({ x: px(Math.log10(r.n)), label: String(r.n) }));
  const yTicks: { y: number; label: string }[] = [];
  for (let exp = Math.ceil(Y0); exp <= Math.floor(Y1); exp++) {
    yTicks.push({ y: py(exp), label: powLabel(exp) });
  }
  return { width, height, margins, l1, l2, ref, xTicks, yTicks };
}

const BLUE: [number, number, number] = [40, 70, 200];
const RED: [number, number, number] = [200, 40, 40];
const GRAY: [number, number, number] = [120, 120, 120];
const BLACK: [number, number, number] = [0, 0, 0];

export function renderConvergence(rows: ConvergenceRow[], width = 640, height = 480): Canvas {
  const g = convergenceGeometry(rows, width, height);
  const cv = new Canvas(width, height);
  const { left, right, top, bottom } = g.margins;

  // frame
  cv.line(left, top, left, height - bottom, BLACK);
  cv.line(left, height - bottom, width - right, height - bottom, BLACK);

  for (const t of g.xTicks) {
    cv.line(t.x, height - bottom, t.x, height - bottom + 4, BLACK);
    cv.text(t.x - 3 * t.label.length, height - bottom + 8, t.label, BLACK);
  }
  for (const t of g.yTicks) {
    cv.line(left - 4, t.y, left, t.y, BLACK);
    cv.text(left - 6 - 6 * t.label.length, t.y - 3, t.label, BLACK);
  }
  cv.text(Math.round((left + width - right) / 2) - 3, height - bottom + 24, "N", BLACK);
  cv.text(8, top - 10, "error", BLACK);

  cv.dashedLine(g.ref[0].x, g.ref[0].y, g.ref[1].x, g.ref[1].y, GRAY);
  for (const [pts, color] of [
    [g.l1, BLUE],
    [g.l2, RED],
  ] as const) {
    for (let i = 1; i < pts.length; i++) {
      cv.line(pts[i - 1].x, pts[i - 1].y, pts[i].x, pts[i].y, color);
    }
    for (const p of pts) cv.marker(p.x, p.y, color);
  }

  // legend, top right inside the frame
  const lx = width - right - 110;
  let ly = top + 8;
  cv.marker(lx, ly + 3, BLUE, 2);
  cv.text(lx + 8, ly, "l1", BLACK);
  ly += 14;
  cv.marker(lx, ly + 3, RED, 2);
  cv.text(lx + 8, ly, "l2", BLACK);
  ly += 14;
  cv.dashedLine(lx - 4, ly + 3, lx + 4, ly + 3, GRAY);
  cv.text(lx + 8, ly, "slope -3", BLACK);
  return cv;
}
