export { loadBundle, table, report } from "./bundle.js";
export type { ResultBundle, SnapshotRecord, Manifest } from "./bundle.js";
export {
  BundleError,
  HashMismatchError,
  MissingManifestError,
  MissingTableError,
} from "./errors.js";
export { parseCsv } from "./csv.js";
export type { CsvTable } from "./csv.js";
export { FIGURE_KINDS, buildScene } from "./figures.js";
export type { FigureKind } from "./figures.js";
export { renderSvg } from "./svg.js";
export { renderPng } from "./raster.js";
export { renderFigure, main } from "./cli.js";
