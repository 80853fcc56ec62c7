/** Integer rasterizer for scenes: Bresenham lines, filled circles, and the
 * built-in bitmap font. Pure arithmetic, so output is platform independent. */

import { GLYPH_H, GLYPH_W, glyph } from "./font.js";
import { encodePng } from "./png.js";
import { Prim, Scene } from "./scene.js";

function parseColor(hex: string): [number, number, number] {
  const v = parseInt(hex.slice(1), 16);
  return [(v >> 16) & 0xff, (v >> 8) & 0xff, v & 0xff];
}

class Canvas {
  readonly width: number;
  readonly height: number;
  readonly pixels: Uint8Array;

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
    this.pixels = new Uint8Array(width * height * 4);
  }

  set(x: number, y: number, rgb: [number, number, number]): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const i = (y * this.width + x) * 4;
    this.pixels[i] = rgb[0];
    this.pixels[i + 1] = rgb[1];
    this.pixels[i + 2] = rgb[2];
    this.pixels[i + 3] = 255;
  }

  fillRect(x: number, y: number, w: number, h: number, rgb: [number, number, number]): void {
    const x0 = Math.round(x);
    const y0 = Math.round(y);
    for (let yy = y0; yy < Math.round(y + h); yy++) {
      for (let xx = x0; xx < Math.round(x + w); xx++) {
        this.set(xx, yy, rgb);
      }
    }
  }

  line(x1: number, y1: number, x2: number, y2: number, rgb: [number, number, number]): void {
    let x = Math.round(x1);
    let y = Math.round(y1);
    const xe = Math.round(x2);
    const ye = Math.round(y2);
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

  fillCircle(cx: number, cy: number, r: number, rgb: [number, number, number]): void {
    const x0 = Math.round(cx);
    const y0 = Math.round(cy);
    const ri = Math.max(1, Math.round(r));
    for (let yy = -ri; yy <= ri; yy++) {
      for (let xx = -ri; xx <= ri; xx++) {
        if (xx * xx + yy * yy <= ri * ri) this.set(x0 + xx, y0 + yy, rgb);
      }
    }
  }

  text(
    x: number,
    y: number,
    s: string,
    rgb: [number, number, number],
    size: number,
    anchor: "start" | "middle" | "end",
  ): void {
    const scale = size >= 13 ? 2 : 1;
    const adv = (GLYPH_W + 1) * scale;
    const total = s.length * adv - scale;
    let px = Math.round(x);
    if (anchor === "middle") px -= Math.round(total / 2);
    else if (anchor === "end") px -= total;
    const py = Math.round(y) - GLYPH_H * scale; // y is the text baseline
    for (const ch of s) {
      const rows = glyph(ch);
      for (let gy = 0; gy < GLYPH_H; gy++) {
        for (let gx = 0; gx < GLYPH_W; gx++) {
          if (rows[gy][gx] === "#") {
            this.fillRect(px + gx * scale, py + gy * scale, scale, scale, rgb);
          }
        }
      }
      px += adv;
    }
  }
}

function draw(canvas: Canvas, p: Prim): void {
  switch (p.t) {
    case "rect":
      canvas.fillRect(p.x, p.y, p.w, p.h, parseColor(p.fill));
      break;
    case "line":
      canvas.line(p.x1, p.y1, p.x2, p.y2, parseColor(p.color));
      break;
    case "poly": {
      const rgb = parseColor(p.color);
      for (let i = 1; i < p.pts.length; i++) {
        canvas.line(p.pts[i - 1][0], p.pts[i - 1][1], p.pts[i][0], p.pts[i][1], rgb);
      }
      break;
    }
    case "circle":
      canvas.fillCircle(p.cx, p.cy, p.r, parseColor(p.fill));
      break;
    case "text":
      canvas.text(p.x, p.y, p.s, parseColor(p.color), p.size, p.anchor);
      break;
  }
}

export function renderPng(scene: Scene): Buffer {
  const canvas = new Canvas(scene.width, scene.height);
  for (const p of scene.prims) draw(canvas, p);
  return encodePng(scene.width, scene.height, canvas.pixels);
}
