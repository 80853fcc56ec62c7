#!/usr/bin/env node
/** plotkit <figure-kind> --in <run-dir> --out <dir>
 *
 * Renders one figure kind from a finished run directory as both SVG and
 * PNG. Exit codes: 0 ok, 2 bundle validation failed (hash mismatch or
 * missing artifact), 1 usage or runtime error.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { loadBundle } from "./bundle.js";
import { BundleError } from "./errors.js";
import { FIGURE_KINDS, FigureKind, buildScene } from "./figures.js";
import { renderPng } from "./raster.js";
import { renderSvg } from "./svg.js";

export function renderFigure(
  runDir: string,
  kind: FigureKind,
): { svg: string; png: Buffer } {
  const bundle = loadBundle(runDir);
  const scene = buildScene(bundle, kind);
  return { svg: renderSvg(scene), png: renderPng(scene) };
}

export function main(argv: string[]): number {
  const usage = `usage: plotkit <${FIGURE_KINDS.join("|")}> --in DIR --out DIR`;
  const [kind, ...rest] = argv;
  if (kind === undefined || !FIGURE_KINDS.includes(kind as FigureKind)) {
    console.error(usage);
    return 1;
  }
  let inDir: string | undefined;
  let outDir: string | undefined;
  for (let i = 0; i < rest.length; i += 2) {
    if (rest[i] === "--in") inDir = rest[i + 1];
    else if (rest[i] === "--out") outDir = rest[i + 1];
    else {
      console.error(usage);
      return 1;
    }
  }
  if (!inDir || !outDir) {
    console.error(usage);
    return 1;
  }
  try {
    const { svg, png } = renderFigure(inDir, kind as FigureKind);
    mkdirSync(outDir, { recursive: true });
    writeFileSync(join(outDir, `${kind}.svg`), svg);
    writeFileSync(join(outDir, `${kind}.png`), png);
    console.log(`wrote ${kind}.svg and ${kind}.png to ${outDir}`);
    return 0;
  } catch (err) {
    if (err instanceof BundleError) {
      console.error(`bundle error: ${(err as Error).message}`);
      return 2;
    }
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
