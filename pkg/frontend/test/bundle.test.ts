import { cpSync, mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterEach, describe, expect, it } from "vitest";

import {
  HashMismatchError,
  MissingManifestError,
  MissingTableError,
  loadBundle,
  table,
} from "../src/index.js";

const FIXTURES = join(__dirname, "fixtures");
const cleanup: string[] = [];

afterEach(() => {
  while (cleanup.length > 0) rmSync(cleanup.pop()!, { recursive: true, force: true });
});

function scratch(): string {
  const dir = mkdtempSync(join(tmpdir(), "plotkit-"));
  cleanup.push(dir);
  return dir;
}

describe("loadBundle", () => {
  it("loads a fresh sample run with snapshots", () => {
    const bundle = loadBundle(join(FIXTURES, "sample"));
    expect(bundle.manifest.kind).toBe("sample");
    expect(bundle.snapshots.length).toBe(40);
    expect(bundle.snapshots[0].points.length).toBe(64);
    expect(bundle.reports.has("sample")).toBe(true);
  });

  it("loads CSV tables with matching embedded hashes", () => {
    const bundle = loadBundle(join(FIXTURES, "rigidity"));
    const t = table(bundle, "rigidity");
    expect(t.header).toContain("var");
    expect(t.rows.length).toBeGreaterThan(0);
    expect(t.meta["spec_hash"]).toBe(bundle.manifest.spec_hash);
  });

  it("rejects a tampered artifact", () => {
    const dir = scratch();
    cpSync(join(FIXTURES, "rigidity"), dir, { recursive: true });
    const target = join(dir, "results", "rigidity.csv");
    const text = readFileSync(target, "utf8");
    writeFileSync(target, text.replace(/var/, "Var"));
    expect(() => loadBundle(dir)).toThrow(HashMismatchError);
  });

  it("rejects a tampered manifest spec text", () => {
    const dir = scratch();
    cpSync(join(FIXTURES, "sample"), dir, { recursive: true });
    const target = join(dir, "manifest.json");
    const manifest = JSON.parse(readFileSync(target, "utf8"));
    manifest.spec_text = manifest.spec_text.replace("seed = 1", "seed = 2");
    writeFileSync(target, JSON.stringify(manifest));
    expect(() => loadBundle(dir)).toThrow(HashMismatchError);
  });

  it("rejects a directory without a manifest", () => {
    const dir = scratch();
    expect(() => loadBundle(dir)).toThrow(MissingManifestError);
  });

  it("reports missing tables by name", () => {
    const bundle = loadBundle(join(FIXTURES, "sample"));
    expect(() => table(bundle, "rigidity")).toThrow(MissingTableError);
  });
});
