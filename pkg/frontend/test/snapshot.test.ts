import { describe, expect, it } from "vitest";
import { join } from "node:path";
import { parseSnapshot, readSnapshot, requireField } from "../src/snapshot.js";
import { FIXTURES, syntheticSnapshot } from "./helpers.js";

describe("parseSnapshot", () => {
  it("reads meta and fields with j-outer row order", () => {
    const text = syntheticSnapshot(3, 2, (i, j) => ({ rho: 1 + i + 10 * j }));
    const snap = parseSnapshot(text);
    expect(snap.meta.nx).toBe(3);
    expect(snap.meta.ny).toBe(2);
    expect(snap.meta.problem).toBe("test");
    expect(snap.meta.domain).toEqual([0, 1, 0, 1]);
    const rho = requireField(snap, "rho");
    expect(Array.from(rho)).toEqual([1, 2, 3, 11, 12, 13]);
  });

  it("rejects missing headers", () => {
    expect(() => parseSnapshot("1 2 3\n")).toThrow(/header/);
  });

  it("rejects wrong row count", () => {
    const text = syntheticSnapshot(3, 2, () => ({}));
    const short = text.trim().split("\n").slice(0, -1).join("\n");
    expect(() => parseSnapshot(short)).toThrow(/rows/);
  });

  it("rejects rows with wrong column count", () => {
    const text = syntheticSnapshot(2, 1, () => ({}));
    const lines = text.trim().split("\n");
    lines[3] = lines[3] + " 99";
    expect(() => parseSnapshot(lines.join("\n"))).toThrow(/values/);
  });

  it("rejects non-finite entries", () => {
    const text = syntheticSnapshot(2, 1, () => ({}));
    expect(() => parseSnapshot(text.replace(/^1 /m, "nope "))).toThrow(/non-finite|values/);
  });

  it("names the missing column", () => {
    const snap = parseSnapshot(syntheticSnapshot(2, 2, () => ({})));
    expect(() => requireField(snap, "Q7")).toThrow(/'Q7'/);
  });

  it("loads a real vortex snapshot", () => {
    const snap = readSnapshot(join(FIXTURES, "orszag_tang_n50.dat"));
    expect(snap.meta.problem).toBe("orszag_tang");
    expect(snap.meta.nx).toBe(50);
    expect(snap.meta.ny).toBe(50);
    expect(snap.meta.time).toBeGreaterThan(0);
    const rho = requireField(snap, "rho");
    expect(rho.length).toBe(2500);
    for (const v of rho) expect(v).toBeGreaterThan(0);
  });
});
