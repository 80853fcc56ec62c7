import { createHash } from "node:crypto";
import { existsSync, readFileSync } from "node:fs";
import { join } from "node:path";

import { CsvTable, parseCsv } from "./csv.js";
import {
  HashMismatchError,
  MissingManifestError,
  MissingTableError,
} from "./errors.js";

export interface SnapshotRecord {
  n: number;
  beta: number;
  seed: number;
  step: number;
  points: [number, number][];
}

export interface Manifest {
  spec_hash: string;
  spec_text: string;
  kind: string;
  seed: number;
  artifacts: Record<string, string>;
  [key: string]: unknown;
}

export interface ResultBundle {
  dir: string;
  manifest: Manifest;
  tables: Map<string, CsvTable>;
  reports: Map<string, Record<string, unknown>>;
  snapshots: SnapshotRecord[];
}

function sha256(data: Buffer | string): string {
  return createHash("sha256").update(data).digest("hex");
}

/** Read a run directory, re-hash every artifact against the manifest, and
 * check that the spec hash embedded in each table matches. */
export function loadBundle(dir: string): ResultBundle {
  const manifestPath = join(dir, "manifest.json");
  if (!existsSync(manifestPath)) {
    throw new MissingManifestError(`no manifest.json in ${dir}`);
  }
  const manifest = JSON.parse(readFileSync(manifestPath, "utf8")) as Manifest;
  if (sha256(manifest.spec_text) !== manifest.spec_hash) {
    throw new HashMismatchError("spec_text does not hash to spec_hash");
  }
  const bundle: ResultBundle = {
    dir,
    manifest,
    tables: new Map(),
    reports: new Map(),
    snapshots: [],
  };
  for (const [rel, want] of Object.entries(manifest.artifacts)) {
    const path = join(dir, rel);
    if (!existsSync(path)) {
      throw new HashMismatchError(`missing artifact ${rel}`);
    }
    const raw = readFileSync(path);
    if (sha256(raw) !== want) {
      throw new HashMismatchError(`hash mismatch for ${rel}`);
    }
    const name = rel.split("/").pop()!.replace(/\.[^.]+$/, "");
    if (rel.endsWith(".csv")) {
      const table = parseCsv(raw.toString("utf8"));
      if (table.meta["spec_hash"] !== manifest.spec_hash) {
        throw new HashMismatchError(`embedded spec hash wrong in ${rel}`);
      }
      bundle.tables.set(name, table);
    } else if (rel.endsWith(".json")) {
      const payload = JSON.parse(raw.toString("utf8")) as Record<
        string,
        unknown
      >;
      if (payload["spec_hash"] !== manifest.spec_hash) {
        throw new HashMismatchError(`embedded spec hash wrong in ${rel}`);
      }
      bundle.reports.set(name, payload);
    } else if (rel.endsWith(".ndjson")) {
      for (const line of raw.toString("utf8").split("\n")) {
        if (line.trim() !== "") {
          bundle.snapshots.push(JSON.parse(line) as SnapshotRecord);
        }
      }
    }
  }
  return bundle;
}

export function table(bundle: ResultBundle, name: string): CsvTable {
  const t = bundle.tables.get(name);
  if (t === undefined) {
    throw new MissingTableError(`bundle has no table '${name}'`);
  }
  return t;
}

export function report(
  bundle: ResultBundle,
  name: string,
): Record<string, unknown> {
  const r = bundle.reports.get(name);
  if (r === undefined) {
    throw new MissingTableError(`bundle has no report '${name}'`);
  }
  return r;
}
