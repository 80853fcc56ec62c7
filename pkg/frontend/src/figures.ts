/** Figure builders: each consumes published tables from a run directory and
 * emits a deterministic scene. No physics is recomputed here; the only
 * arithmetic is axis scaling and, for the QQ plot, sorting point counts. */

import { ResultBundle, table } from "./bundle.js";
import { MissingTableError } from "./errors.js";
import { num } from "./csv.js";
import {
  COLORS,
  Frame,
  HEIGHT,
  Scene,
  WIDTH,
  drawFrame,
  newScene,
  padRange,
  sx,
  sy,
} from "./scene.js";

export const FIGURE_KINDS = [
  "rigidity",
  "movefn",
  "dlr-z",
  "locallaw",
  "ti-qq",
  "loctrans",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

const BOX = { x0: 70, y0: 50, x1: WIDTH - 30, y1: HEIGHT - 60 };

function makeFrame(xs: number[], ys: number[]): Frame {
  const [xmin, xmax] = padRange(Math.min(...xs), Math.max(...xs));
  const [ymin, ymax] = padRange(Math.min(...ys), Math.max(...ys));
  return { ...BOX, xmin, xmax, ymin, ymax };
}

function errorBar(scene: Scene, f: Frame, x: number, y: number, half: number, color: string): void {
  const px = sx(f, x);
  scene.prims.push(
    { t: "line", x1: px, y1: sy(f, y - half), x2: px, y2: sy(f, y + half), color },
    { t: "line", x1: px - 3, y1: sy(f, y - half), x2: px + 3, y2: sy(f, y - half), color },
    { t: "line", x1: px - 3, y1: sy(f, y + half), x2: px + 3, y2: sy(f, y + half), color },
  );
}

function figRigidity(bundle: ResultBundle): Scene {
  const rows = table(bundle, "rigidity").rows;
  const scene = newScene();
  const xs = rows.map((r) => num(r, "ell"));
  const ys = rows.flatMap((r) => [
    num(r, "var") - num(r, "se"),
    num(r, "var") + num(r, "se"),
  ]);
  const f = makeFrame(xs, ys);
  drawFrame(scene, f, "window scale", "Var[Fluct]", "rigidity variance scan");
  const epsValues = [...new Set(rows.map((r) => r["eps"]))];
  epsValues.forEach((eps, i) => {
    const color = COLORS[i % COLORS.length];
    const group = rows.filter((r) => r["eps"] === eps);
    const pts: [number, number][] = group.map((r) => [
      sx(f, num(r, "ell")),
      sy(f, num(r, "var")),
    ]);
    if (pts.length > 1) scene.prims.push({ t: "poly", pts, color });
    for (const r of group) {
      errorBar(scene, f, num(r, "ell"), num(r, "var"), num(r, "se"), color);
      scene.prims.push({
        t: "circle",
        cx: sx(f, num(r, "ell")),
        cy: sy(f, num(r, "var")),
        r: 3,
        fill: color,
      });
    }
    scene.prims.push({
      t: "text",
      x: BOX.x1 - 8,
      y: BOX.y0 + 16 + 14 * i,
      s: `eps=${eps}`,
      color,
      size: 10,
      anchor: "end",
    });
  });
  return scene;
}

function figMovefn(bundle: ResultBundle): Scene {
  const rows = table(bundle, "movefn").rows;
  const scene = newScene();
  const floor = 1e-16;
  const pMax = Math.max(...rows.map((r) => num(r, "p")));
  const withInc = rows.filter((r) => num(r, "p") < pMax);
  const logInc = (r: Record<string, string>) =>
    Math.log10(Math.max(Math.abs(num(r, "increment")), floor));
  const f = makeFrame(
    withInc.map((r) => num(r, "p")),
    withInc.map(logInc),
  );
  drawFrame(
    scene,
    f,
    "truncation level p",
    "log10 |increment|",
    "move function convergence",
  );
  const pairs = [...new Set(withInc.map((r) => r["pair"]))];
  pairs.forEach((pair, i) => {
    const color = COLORS[i % COLORS.length];
    const pts: [number, number][] = withInc
      .filter((r) => r["pair"] === pair)
      .map((r) => [sx(f, num(r, "p")), sy(f, logInc(r))]);
    scene.prims.push({ t: "poly", pts, color });
    for (const [px, py] of pts) {
      scene.prims.push({ t: "circle", cx: px, cy: py, r: 2, fill: color });
    }
  });
  return scene;
}

function figDlrZ(bundle: ResultBundle): Scene {
  const t = table(bundle, "dlr_z");
  const rows = t.rows;
  const thr = Number(t.meta["z_threshold"] ?? 3);
  const scene = newScene();
  const zs = rows.map((r) => num(r, "z"));
  const [xminRaw, xmaxRaw] = padRange(
    Math.min(...zs, -thr),
    Math.max(...zs, thr),
  );
  const f: Frame = {
    ...BOX,
    x0: 170,
    xmin: xminRaw,
    xmax: xmaxRaw,
    ymin: 0,
    ymax: rows.length + 1,
  };
  // acceptance band first so points draw on top of it
  scene.prims.push({
    t: "rect",
    x: sx(f, -thr),
    y: f.y0,
    w: sx(f, thr) - sx(f, -thr),
    h: f.y1 - f.y0,
    fill: "#e8f0e8",
  });
  drawFrame(scene, f, "paired z score", "", "conditional-law z forest");
  scene.prims.push({
    t: "line",
    x1: sx(f, 0),
    y1: f.y0,
    x2: sx(f, 0),
    y2: f.y1,
    color: "#aaaaaa",
  });
  rows.forEach((r, i) => {
    const y = rows.length - i;
    const pass = r["pass"] === "True" || r["pass"] === "true";
    const color = pass ? COLORS[0] : COLORS[1];
    scene.prims.push(
      {
        t: "circle",
        cx: sx(f, num(r, "z")),
        cy: sy(f, y),
        r: 3,
        fill: color,
      },
      {
        t: "text",
        x: f.x0 - 8,
        y: sy(f, y) + 4,
        s: r["name"],
        color: "#000000",
        size: 10,
        anchor: "end",
      },
    );
  });
  return scene;
}

function figLocallaw(bundle: ResultBundle): Scene {
  const rows = table(bundle, "locallaw").rows;
  const scene = newScene();
  const ys = rows.flatMap((r) => [num(r, "q25"), num(r, "q75"), 0]);
  const f = makeFrame(
    rows.map((r) => num(r, "ell")),
    ys,
  );
  drawFrame(
    scene,
    f,
    "window radius",
    "energy / radius squared",
    "local energy density across scales",
  );
  const color = COLORS[0];
  const pts: [number, number][] = rows.map((r) => [
    sx(f, num(r, "ell")),
    sy(f, num(r, "mean")),
  ]);
  if (pts.length > 1) scene.prims.push({ t: "poly", pts, color });
  for (const r of rows) {
    const x = num(r, "ell");
    errorBar(scene, f, x, num(r, "mean"), num(r, "se"), color);
    for (const q of ["q25", "q75"] as const) {
      scene.prims.push({
        t: "line",
        x1: sx(f, x) - 5,
        y1: sy(f, num(r, q)),
        x2: sx(f, x) + 5,
        y2: sy(f, num(r, q)),
        color: COLORS[4],
      });
    }
    scene.prims.push({
      t: "circle",
      cx: sx(f, x),
      cy: sy(f, num(r, "mean")),
      r: 3,
      fill: color,
    });
  }
  return scene;
}

function unitDiskCounts(bundle: ResultBundle, cx: number, cy: number): number[] {
  if (bundle.snapshots.length === 0) {
    throw new MissingTableError("bundle has no snapshots");
  }
  return bundle.snapshots.map(
    (rec) =>
      rec.points.filter(([x, y]) => (x - cx) ** 2 + (y - cy) ** 2 <= 1.0)
        .length,
  );
}

function figTiQq(bundle: ResultBundle): Scene {
  const a = unitDiskCounts(bundle, 0, 0).sort((u, v) => u - v);
  const b = unitDiskCounts(bundle, 1, 0).sort((u, v) => u - v);
  const scene = newScene();
  const lo = Math.min(a[0], b[0]);
  const hi = Math.max(a[a.length - 1], b[b.length - 1]);
  const [min, max] = padRange(lo, hi);
  const f: Frame = { ...BOX, xmin: min, xmax: max, ymin: min, ymax: max };
  drawFrame(
    scene,
    f,
    "count quantiles at origin",
    "count quantiles at shifted view",
    "translation invariance QQ",
  );
  scene.prims.push({
    t: "line",
    x1: sx(f, min),
    y1: sy(f, min),
    x2: sx(f, max),
    y2: sy(f, max),
    color: "#aaaaaa",
  });
  for (let i = 0; i < a.length; i++) {
    scene.prims.push({
      t: "circle",
      cx: sx(f, a[i]),
      cy: sy(f, b[i]),
      r: 2,
      fill: COLORS[0],
    });
  }
  return scene;
}

function figLoctrans(bundle: ResultBundle): Scene {
  const rows = table(bundle, "loctrans_constants").rows;
  const scene = newScene();
  const cols = [
    "L",
    "psi_plus_1",
    "psi_minus_1",
    "rem_0",
    "jacobian_det_max_dev",
    "inverse_composition_max_err",
  ];
  const labels = ["L", "psi+ (1)", "psi- (1)", "rem (0)", "jac dev", "inv err"];
  scene.prims.push({
    t: "text",
    x: WIDTH / 2,
    y: 30,
    s: "localized translation constants",
    color: "#000000",
    size: 14,
    anchor: "middle",
  });
  const x0 = 40;
  const colW = (WIDTH - 2 * x0) / cols.length;
  const rowH = 26;
  const y0 = 80;
  labels.forEach((label, j) => {
    scene.prims.push({
      t: "text",
      x: x0 + colW * (j + 0.5),
      y: y0,
      s: label,
      color: "#000000",
      size: 10,
      anchor: "middle",
    });
  });
  scene.prims.push({
    t: "line",
    x1: x0,
    y1: y0 + 8,
    x2: WIDTH - x0,
    y2: y0 + 8,
    color: "#000000",
  });
  rows.forEach((r, i) => {
    cols.forEach((c, j) => {
      const v = num(r, c);
      const s =
        Math.abs(v) !== 0 && (Math.abs(v) >= 1e3 || Math.abs(v) < 1e-2)
          ? v.toExponential(2)
          : String(Number(v.toPrecision(4)));
      scene.prims.push({
        t: "text",
        x: x0 + colW * (j + 0.5),
        y: y0 + rowH * (i + 1),
        s,
        color: "#000000",
        size: 10,
        anchor: "middle",
      });
    });
  });
  const certified = bundle.reports.get("loctrans")?.["certified"];
  scene.prims.push({
    t: "text",
    x: WIDTH / 2,
    y: y0 + rowH * (rows.length + 2),
    s: certified === true ? "certified: yes" : "certified: no",
    color: certified === true ? COLORS[2] : COLORS[1],
    size: 12,
    anchor: "middle",
  });
  return scene;
}

const BUILDERS: Record<FigureKind, (bundle: ResultBundle) => Scene> = {
  rigidity: figRigidity,
  movefn: figMovefn,
  "dlr-z": figDlrZ,
  locallaw: figLocallaw,
  "ti-qq": figTiQq,
  loctrans: figLoctrans,
};

export function buildScene(bundle: ResultBundle, kind: FigureKind): Scene {
  const builder = BUILDERS[kind];
  if (builder === undefined) {
    throw new Error(`unknown figure kind '${kind}'`);
  }
  return builder(bundle);
}
