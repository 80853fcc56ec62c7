import { Prim, Scene } from "./scene.js";

const f = (x: number): string => x.toFixed(2).replace(/^-0\.00$/, "0.00");

function esc(s: string): string {
  return s
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;");
}

function prim(p: Prim): string {
  switch (p.t) {
    case "rect":
      return `<rect x="${f(p.x)}" y="${f(p.y)}" width="${f(p.w)}" height="${f(p.h)}" fill="${p.fill}"/>`;
    case "line":
      return `<line x1="${f(p.x1)}" y1="${f(p.y1)}" x2="${f(p.x2)}" y2="${f(p.y2)}" stroke="${p.color}" stroke-width="1"/>`;
    case "poly":
      return `<polyline points="${p.pts.map(([x, y]) => `${f(x)},${f(y)}`).join(" ")}" fill="none" stroke="${p.color}" stroke-width="1.5"/>`;
    case "circle":
      return `<circle cx="${f(p.cx)}" cy="${f(p.cy)}" r="${f(p.r)}" fill="${p.fill}"/>`;
    case "text": {
      const anchor =
        p.anchor === "start" ? "" : ` text-anchor="${p.anchor}"`;
      return `<text x="${f(p.x)}" y="${f(p.y)}" font-family="monospace" font-size="${p.size}" fill="${p.color}"${anchor}>${esc(p.s)}</text>`;
    }
  }
}

export function renderSvg(scene: Scene): string {
  const body = scene.prims.map(prim).join("\n");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${scene.width}" ` +
    `height="${scene.height}" viewBox="0 0 ${scene.width} ${scene.height}">\n` +
    body +
    "\n</svg>\n"
  );
}
