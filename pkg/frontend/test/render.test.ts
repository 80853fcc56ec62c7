import { join } from "node:path";
import { describe, expect, it } from "vitest";

import {
  FIGURE_KINDS,
  FigureKind,
  MissingTableError,
  buildScene,
  loadBundle,
  renderFigure,
} from "../src/index.js";

const FIXTURES = join(__dirname, "fixtures");

// which fixture run directory feeds each figure kind
const SOURCE: Record<FigureKind, string> = {
  rigidity: "rigidity",
  movefn: "movefn",
  "dlr-z": "dlr",
  locallaw: "locallaw",
  "ti-qq": "sample",
  loctrans: "loctrans",
};

describe("figure rendering", () => {
  for (const kind of FIGURE_KINDS) {
    it(`renders ${kind} byte-identically across invocations`, () => {
      const dir = join(FIXTURES, SOURCE[kind]);
      const first = renderFigure(dir, kind);
      const second = renderFigure(dir, kind);
      expect(first.svg).toBe(second.svg);
      expect(first.png.equals(second.png)).toBe(true);
      expect(first.svg.startsWith("<svg ")).toBe(true);
      // PNG signature
      expect([...first.png.subarray(0, 8)]).toEqual([
        0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a,
      ]);
      expect(first.png.length).toBeGreaterThan(500);
    });
  }

  it("fails with a missing-table error on the wrong bundle", () => {
    const bundle = loadBundle(join(FIXTURES, "sample"));
    expect(() => buildScene(bundle, "rigidity")).toThrow(MissingTableError);
  });

  it("draws the acceptance band and labels in the z forest", () => {
    const { svg } = renderFigure(join(FIXTURES, "dlr"), "dlr-z");
    expect(svg).toContain("count_eq_0");
    expect(svg).toContain("#e8f0e8");
  });

  it("marks certification status in the constants table", () => {
    const { svg } = renderFigure(join(FIXTURES, "loctrans"), "loctrans");
    expect(svg).toContain("certified: yes");
  });
});
