"""Experiment configuration, persistence, and artifact hashing.

Config files are flat INI text: an [experiment] section with the kind, the
seed, and chain parameters, plus an optional section named after the kind
for kind-specific keys. Every artifact written by a run embeds the sha256
hash of the spec text, and manifest.json records per-file content hashes so
a verifier can confirm nothing was edited after the fact.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core import PointConfig


class SpecError(ValueError):
    """Base class for configuration problems."""


class SpecKeyError(SpecError):
    """Unknown key in the config text."""


class SpecTypeError(SpecError):
    """Value fails to parse as the declared type."""


class SpecConstraintError(SpecError):
    """Value parses but violates a range or choice constraint."""


class SpecCompletenessError(SpecError):
    """A required key is missing."""


KINDS = (
    "sample",
    "dlr",
    "rigidity",
    "loctrans",
    "locallaw",
    "movefn",
    "apriori",
)


def _positive(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _float_list(text):
    return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]


def _int_list(text):
    return [int(t) for t in text.replace(";", ",").split(",") if t.strip()]


# key -> (parser, constraint or None, required, default)
_COMMON = {
    "kind": (str, lambda k: k in KINDS, True, None),
    "seed": (int, _nonneg, True, None),
    "n": (int, lambda v: v >= 1, True, None),
    "beta": (float, _nonneg, True, None),
    "out": (str, None, False, "runs"),
    "burn_in": (int, _nonneg, False, None),
    "steps": (int, _positive, False, None),  # alias for burn_in
    "thinning": (int, _positive, False, None),
    "n_samples": (int, _positive, False, 50),
}

_KIND_KEYS = {
    "sample": {},
    "dlr": {
        "lam_radius": (float, _positive, False, 1.5),
        "p": (int, _nonneg, False, 4),
        "delta": (float, _positive, False, 0.1),
        "k_max": (int, _nonneg, False, 6),
        "n_inner": (int, _positive, False, 24),
        "inner_burn": (int, _positive, False, 200),
        "inner_thin": (int, _positive, False, 8),
    },
    "rigidity": {
        "eps_list": (_float_list, lambda v: all(x > 0 for x in v), False, [0.5, 1.0]),
        "ell_list": (_float_list, lambda v: all(x > 0 for x in v), False, [1.0, 1.5]),
    },
    "loctrans": {
        "l_list": (_float_list, lambda v: all(x > 0 for x in v), False, [8.0, 16.0, 32.0]),
        "grid_n": (int, lambda v: v >= 8, False, 40),
        "vx": (float, None, False, 1.0),
        "vy": (float, None, False, 0.0),
    },
    "locallaw": {
        "ell_list": (_float_list, lambda v: all(x > 0 for x in v), False, [2.0, 4.0]),
        "h": (float, _positive, False, None),
        "eta": (float, _positive, False, None),
        "flat_factor": (float, lambda v: v >= 1, False, 1.3),
    },
    "movefn": {
        "lam_radius": (float, _positive, False, 1.5),
        "p_max": (int, _nonneg, False, 6),
        "n_pairs": (int, _positive, False, 10),
        "tolerance": (float, _positive, False, 1e-3),
    },
    "apriori": {
        "n_small": (int, lambda v: v >= 1, False, 64),
        "n_large": (int, lambda v: v >= 1, False, 256),
        "n_pairs": (int, _positive, False, 25),
        "ceiling_factor": (float, _positive, False, 1.5),
        "eta": (float, _positive, False, 0.2),
        "h": (float, _positive, False, 0.05),
    },
}


@dataclass
class ExperimentSpec:
    kind: str
    seed: int
    params: dict
    out_dir: str
    text: str = ""

    @property
    def spec_hash(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()


def parse_spec(text: str) -> ExperimentSpec:
    """Parse and validate flat INI config text into an ExperimentSpec."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise SpecError(f"malformed config: {exc}") from exc
    if "experiment" not in cp:
        raise SpecCompletenessError("missing [experiment] section")
    raw = dict(cp["experiment"])
    kind = raw.get("kind")
    if kind is None:
        raise SpecCompletenessError("missing key 'kind'")
    if kind not in KINDS:
        raise SpecConstraintError(f"unknown kind '{kind}' (choices: {', '.join(KINDS)})")
    if kind in cp:
        for k, v in cp[kind].items():
            raw.setdefault(k, v)
    schema = dict(_COMMON)
    schema.update(_KIND_KEYS[kind])
    for key in raw:
        if key not in schema:
            raise SpecKeyError(f"unknown key '{key}' for kind '{kind}'")
    params = {}
    for key, (parse, constraint, required, default) in schema.items():
        if key in raw:
            try:
                val = parse(raw[key]) if parse is not str else raw[key]
            except (TypeError, ValueError) as exc:
                raise SpecTypeError(f"key '{key}': cannot parse '{raw[key]}'") from exc
            if constraint is not None and not constraint(val):
                raise SpecConstraintError(f"key '{key}': value {val!r} out of range")
            params[key] = val
        elif required:
            raise SpecCompletenessError(f"missing required key '{key}'")
        elif default is not None:
            params[key] = default
    if "steps" in params and "burn_in" not in params:
        params["burn_in"] = params.pop("steps")
    params.pop("steps", None)
    return ExperimentSpec(
        kind=kind,
        seed=params.pop("seed"),
        params=params,
        out_dir=params.pop("out"),
        text=text,
    )


def load_spec(path) -> ExperimentSpec:
    return parse_spec(Path(path).read_text())


# ---------------------------------------------------------------------------
# artifact writers


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_csv(path, rows, spec_hash: str, meta: dict = None):
    """CSV with '# key=value' header comments carrying provenance."""
    lines = [f"# spec_hash={spec_hash}"]
    for k, v in (meta or {}).items():
        lines.append(f"# {k}={v}")
    keys = list(rows[0].keys())
    lines.append(",".join(keys))
    for r in rows:
        lines.append(",".join(_cell(r[k]) for k in keys))
    Path(path).write_text("\n".join(lines) + "\n")


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer, np.bool_)):
        return str(v.item())
    return str(v)


def read_csv(path):
    """Inverse of write_csv: (rows as string dicts, meta dict)."""
    meta = {}
    rows = []
    header = None
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k.strip()] = v.strip()
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append(dict(zip(header, line.split(","))))
    return rows, meta


def write_json(path, payload: dict, spec_hash: str):
    payload = dict(payload)
    payload["spec_hash"] = spec_hash
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def write_snapshots(path, records):
    """NDJSON stream of point configurations.

    Each record is {n, beta, seed, step, points}; floats round-trip exactly
    through JSON's shortest-repr encoding.
    """
    with open(path, "w") as fh:
        for rec in records:
            out = dict(rec)
            pts = np.asarray(out["points"], dtype=float)
            out["points"] = [[float(a), float(b)] for a, b in pts]
            fh.write(json.dumps(out) + "\n")


def read_snapshots(path):
    records = []
    for line in Path(path).read_text().splitlines():
        if not line:
            continue
        rec = json.loads(line)
        rec["points"] = np.asarray(rec["points"], dtype=float)
        records.append(rec)
    return records


def snapshot_config(rec) -> PointConfig:
    return PointConfig(rec["points"])


def write_manifest(out_dir, spec: ExperimentSpec, wall_time: float, extra: dict = None):
    out_dir = Path(out_dir)
    artifacts = {}
    for p in sorted(out_dir.rglob("*")):
        if p.is_file() and p.name != "manifest.json":
            artifacts[str(p.relative_to(out_dir))] = sha256_file(p)
    payload = {
        "spec_hash": spec.spec_hash,
        "spec_text": spec.text,
        "kind": spec.kind,
        "seed": spec.seed,
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "ocplab": __version__,
        },
        "wall_time_s": wall_time,
        "artifacts": artifacts,
    }
    if extra:
        payload.update(extra)
    (out_dir / "manifest.json").write_text(
        json.dumps(payload, indent=1, sort_keys=True) + "\n"
    )


def verify_run(out_dir) -> dict:
    """Re-hash every artifact and check embedded spec hashes; returns a report."""
    out_dir = Path(out_dir)
    mpath = out_dir / "manifest.json"
    if not mpath.exists():
        raise FileNotFoundError(f"no manifest.json in {out_dir}")
    manifest = json.loads(mpath.read_text())
    spec_hash = manifest["spec_hash"]
    problems = []
    if hashlib.sha256(manifest["spec_text"].encode()).hexdigest() != spec_hash:
        problems.append("spec_text does not hash to spec_hash")
    for rel, want in manifest["artifacts"].items():
        p = out_dir / rel
        if not p.exists():
            problems.append(f"missing artifact {rel}")
            continue
        got = sha256_file(p)
        if got != want:
            problems.append(f"hash mismatch for {rel}")
            continue
        if rel.endswith(".csv"):
            _, meta = read_csv(p)
            if meta.get("spec_hash") != spec_hash:
                problems.append(f"embedded spec hash wrong in {rel}")
        elif rel.endswith(".json"):
            payload = json.loads(p.read_text())
            if payload.get("spec_hash") != spec_hash:
                problems.append(f"embedded spec hash wrong in {rel}")
    return {"ok": not problems, "problems": problems, "checked": len(manifest["artifacts"])}
