/** Resolution-independent scene description shared by the SVG and PNG
 * backends. Coordinates are in pixels on a fixed 640x480 canvas. */

export type Prim =
  | { t: "rect"; x: number; y: number; w: number; h: number; fill: string }
  | { t: "line"; x1: number; y1: number; x2: number; y2: number; color: string }
  | { t: "poly"; pts: [number, number][]; color: string }
  | { t: "circle"; cx: number; cy: number; r: number; fill: string }
  | {
      t: "text";
      x: number;
      y: number;
      s: string;
      color: string;
      size: number;
      anchor: "start" | "middle" | "end";
    };

export interface Scene {
  width: number;
  height: number;
  prims: Prim[];
}

export const WIDTH = 640;
export const HEIGHT = 480;

export const COLORS = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

export function newScene(): Scene {
  return {
    width: WIDTH,
    height: HEIGHT,
    prims: [{ t: "rect", x: 0, y: 0, w: WIDTH, h: HEIGHT, fill: "#ffffff" }],
  };
}

export interface Frame {
  x0: number;
  y0: number;
  x1: number;
  y1: number; // pixel box (y0 = top)
  xmin: number;
  xmax: number;
  ymin: number;
  ymax: number; // data ranges
}

export function sx(f: Frame, x: number): number {
  return f.x0 + ((x - f.xmin) / (f.xmax - f.xmin)) * (f.x1 - f.x0);
}

export function sy(f: Frame, y: number): number {
  return f.y1 - ((y - f.ymin) / (f.ymax - f.ymin)) * (f.y1 - f.y0);
}

/** Tick positions at 1/2/5 multiples covering [min, max]. */
export function niceTicks(min: number, max: number, target = 5): number[] {
  if (!(max > min)) return [min];
  const span = max - min;
  const raw = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  let step = mag;
  for (const m of [1, 2, 5, 10]) {
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  }
  const ticks: number[] = [];
  let t = Math.ceil(min / step) * step;
  // snap tiny float noise so tick labels stay short and reproducible
  for (; t <= max + 1e-9 * span; t += step) {
    ticks.push(Math.abs(t) < 1e-12 ? 0 : Number(t.toPrecision(12)));
  }
  return ticks;
}

export function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return String(Number(v.toPrecision(6)));
}

/** Pad a data range so points do not sit on the frame edge. */
export function padRange(min: number, max: number, frac = 0.08): [number, number] {
  if (min === max) {
    const d = Math.abs(min) > 1e-12 ? Math.abs(min) * 0.5 : 1.0;
    return [min - d, max + d];
  }
  const d = (max - min) * frac;
  return [min - d, max + d];
}

export function drawFrame(
  scene: Scene,
  f: Frame,
  xlabel: string,
  ylabel: string,
  title: string,
): void {
  const axis = "#000000";
  scene.prims.push(
    { t: "line", x1: f.x0, y1: f.y1, x2: f.x1, y2: f.y1, color: axis },
    { t: "line", x1: f.x0, y1: f.y0, x2: f.x0, y2: f.y1, color: axis },
  );
  for (const tx of niceTicks(f.xmin, f.xmax)) {
    const px = sx(f, tx);
    if (px < f.x0 - 0.5 || px > f.x1 + 0.5) continue;
    scene.prims.push(
      { t: "line", x1: px, y1: f.y1, x2: px, y2: f.y1 + 5, color: axis },
      {
        t: "text",
        x: px,
        y: f.y1 + 18,
        s: fmtTick(tx),
        color: axis,
        size: 10,
        anchor: "middle",
      },
    );
  }
  for (const ty of niceTicks(f.ymin, f.ymax)) {
    const py = sy(f, ty);
    if (py < f.y0 - 0.5 || py > f.y1 + 0.5) continue;
    scene.prims.push(
      { t: "line", x1: f.x0 - 5, y1: py, x2: f.x0, y2: py, color: axis },
      {
        t: "text",
        x: f.x0 - 8,
        y: py + 4,
        s: fmtTick(ty),
        color: axis,
        size: 10,
        anchor: "end",
      },
    );
  }
  scene.prims.push(
    {
      t: "text",
      x: (f.x0 + f.x1) / 2,
      y: f.y1 + 36,
      s: xlabel,
      color: axis,
      size: 12,
      anchor: "middle",
    },
    {
      t: "text",
      x: f.x0,
      y: f.y0 - 10,
      s: ylabel,
      color: axis,
      size: 12,
      anchor: "start",
    },
    {
      t: "text",
      x: (f.x0 + f.x1) / 2,
      y: 24,
      s: title,
      color: axis,
      size: 14,
      anchor: "middle",
    },
  );
}
