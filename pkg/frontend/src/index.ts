export { parseSnapshot, readSnapshot, requireField } from "./snapshot.js";
export type { Snapshot, SnapshotMeta } from "./snapshot.js";
export { parseConvergenceTable, readConvergenceTable } from "./table.js";
export type { ConvergenceRow } from "./table.js";
export { encodePng } from "./png.js";
export { schlierenImage, mirrorAboutX, gradientMagnitude } from "./schlieren.js";
export type { GrayImage } from "./schlieren.js";
export { contourImage, contourLevels, extractField } from "./contours.js";
export type { ContourField } from "./contours.js";
export { convergenceGeometry, renderConvergence } from "./convergence.js";
export { Canvas, upsample, toGray } from "./raster.js";
