#!/usr/bin/env node
// plotviz <kind> <input> -o <output.png> [options]
import { realpathSync, writeFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { encodePng } from "./png.js";
import { readSnapshot } from "./snapshot.js";
import { readConvergenceTable } from "./table.js";
import { schlierenImage } from "./schlieren.js";
import { contourImage, type ContourField } from "./contours.js";
import { renderConvergence } from "./convergence.js";

const USAGE = `usage: plotviz <kind> <input> -o <output.png> [options]

kinds:
  schlieren    <snapshot.dat>     gradient-magnitude image of log density
  contours     <snapshot.dat>     equally spaced contour lines
  convergence  <convergence.dat>  log-log error plot with slope -3 reference

options:
  -o, --output FILE   output PNG path (required)
  --field NAME        contour field: log_rho (default) or Bmag
  --levels N          contour line count (default 40)
  --scale N           pixel upscale for snapshot images (default 4)
  --contrast X        schlieren contrast coefficient (default 5)
`;

interface Args {
  kind: string;
  input: string;
  output: string;
  field: ContourField;
  levels: number;
  scale: number;
  contrast: number;
}

export function parseArgs(argv: string[]): Args {
  const positional: string[] = [];
  let output = "";
  let field: ContourField = "log_rho";
  let levels = 40;
  let scale = 4;
  let contrast = 5;

  const takeValue = (flag: string, i: number): string => {
    if (i + 1 >= argv.length) throw new Error(`${flag} needs a value`);
    return argv[i + 1];
  };

  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (a === "-o" || a === "--output") {
      output = takeValue(a, i);
      i++;
    } else if (a === "--field") {
      const v = takeValue(a, i);
      i++;
      if (v !== "log_rho" && v !== "Bmag") throw new Error(`unknown field '${v}'`);
      field = v;
    } else if (a === "--levels" || a === "--scale" || a === "--contrast") {
      const v = Number(takeValue(a, i));
      i++;
      if (!Number.isFinite(v) || v <= 0) throw new Error(`${a} needs a positive number`);
      if (a === "--levels") levels = Math.round(v);
      else if (a === "--scale") scale = Math.round(v);
      else contrast = v;
    } else if (a.startsWith("-")) {
      throw new Error(`unknown option '${a}'`);
    } else {
      positional.push(a);
    }
  }
  if (positional.length !== 2) throw new Error("expected <kind> and <input>");
  if (!output) throw new Error("-o <output.png> is required");
  const [kind, input] = positional;
  if (kind !== "schlieren" && kind !== "contours" && kind !== "convergence") {
    throw new Error(`unknown kind '${kind}'`);
  }
  return { kind, input, output, field, levels, scale, contrast };
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n\n${USAGE}`);
    return 2;
  }
  try {
    let png: Buffer;
    if (args.kind === "convergence") {
      const rows = readConvergenceTable(args.input);
      const cv = renderConvergence(rows);
      png = encodePng(cv.width, cv.height, cv.data, "rgb");
    } else {
      const snap = readSnapshot(args.input);
      const img =
        args.kind === "schlieren"
          ? schlierenImage(snap, { scale: args.scale, contrast: args.contrast })
          : contourImage(snap, args.field, { levels: args.levels, scale: args.scale });
      png = encodePng(img.width, img.height, img.pixels, "gray");
    }
    writeFileSync(args.output, png);
    process.stdout.write(`wrote ${args.output}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

const invokedAs = process.argv[1] ? realpathSync(process.argv[1]) : "";
if (invokedAs && invokedAs === fileURLToPath(import.meta.url)) {
  process.exit(main(process.argv.slice(2)));
}
