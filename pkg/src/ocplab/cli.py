"""Command-line entry point binding the modules into reproducible runs.

Usage: ocplab <kind> --spec cfg.ini [--out DIR] [--seed S] [--threads T]
       ocplab verify --out DIR

Exit codes: 0 success, 2 a statistical or certification check failed,
1 runtime error (bad spec, I/O, propagated module errors).
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from .core import DiskDomain, PointConfig, system_domain
from .dlr import DlrExperiment, default_battery, dlr_consistency_test
from .io import (
    KINDS,
    SpecError,
    load_spec,
    verify_run,
    write_csv,
    write_json,
    write_manifest,
    write_snapshots,
)
from .loctrans import LocalizedTranslation, constants_csv, verify_translation
from .movefn import convergence_diagnostic
from .observables import rigidity_variance_scan
from .sampler import ChainPlan, collect_samples
from .electric import apriori_scan, local_law_scan
from .observables import lipschitz_dictionary

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CHECK_FAILED = 2


def _chain_plan(spec, **overrides):
    kw = {
        "n": spec.params["n"],
        "beta": spec.params["beta"],
        "seed": spec.seed,
    }
    for key in ("burn_in", "thinning"):
        if spec.params.get(key) is not None:
            kw[key] = spec.params[key]
    kw.update(overrides)
    return ChainPlan(**kw)


def _gather(spec):
    plan = _chain_plan(spec)
    samples, state = collect_samples(plan, spec.params["n_samples"])
    return plan, samples, state


def run_sample(spec, out):
    plan, samples, state = _gather(spec)
    records = []
    for k, pts in enumerate(samples):
        records.append(
            {
                "n": plan.n,
                "beta": plan.beta,
                "seed": plan.seed,
                "step": (k + 1) * plan.thinning,
                "points": pts,
            }
        )
    write_snapshots(out / "snapshots.ndjson", records)
    write_json(
        out / "results" / "sample.json",
        {
            "n_samples": len(records),
            "acceptance_rate": state.acceptance_rate,
            "proposal_scale": state.proposal_scale,
        },
        spec.spec_hash,
    )
    return EXIT_OK


def run_dlr(spec, out):
    p = spec.params
    lam = DiskDomain((0.0, 0.0), p["lam_radius"])
    _, samples, _ = _gather(spec)
    battery = default_battery(lam, k_max=p["k_max"])
    exp = DlrExperiment(
        lam,
        p["p"],
        p["delta"],
        battery,
        n_inner=p["n_inner"],
        inner_burn=p["inner_burn"],
        inner_thin=p["inner_thin"],
    )
    report = dlr_consistency_test(
        samples, exp, beta=spec.params["beta"], n_points=spec.params["n"], seed=spec.seed
    )
    write_json(out / "results" / "dlr.json", report, spec.spec_hash)
    write_csv(
        out / "results" / "dlr_z.csv",
        report["observables"],
        spec.spec_hash,
        meta={"z_threshold": report["threshold"]},
    )
    return EXIT_OK if report["all_pass"] else EXIT_CHECK_FAILED


def run_rigidity(spec, out):
    p = spec.params
    _, samples, _ = _gather(spec)
    rows = rigidity_variance_scan(samples, p["eps_list"], p["ell_list"])
    write_csv(out / "results" / "rigidity.csv", rows, spec.spec_hash)
    return EXIT_OK


def run_loctrans(spec, out):
    p = spec.params
    v = (p["vx"], p["vy"])
    reports = []
    ok = True
    for L in p["l_list"]:
        rep = verify_translation(LocalizedTranslation(L, v), grid_n=p["grid_n"])
        reports.append(rep)
        ok &= rep["jacobian_det_max_dev"] < 1e-6
        ok &= rep["inverse_composition_max_err"] < 1e-7
    (out / "results" / "loctrans_constants.csv").write_text(
        "# spec_hash=" + spec.spec_hash + "\n" + constants_csv(reports)
    )
    write_json(
        out / "results" / "loctrans.json",
        {"reports": reports, "certified": bool(ok)},
        spec.spec_hash,
    )
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def run_locallaw(spec, out):
    p = spec.params
    _, samples, _ = _gather(spec)
    rows = local_law_scan(
        samples,
        [(0.0, 0.0)],
        p["ell_list"],
        spec.params["n"],
        h=p.get("h"),
        eta=p.get("eta"),
    )
    write_csv(out / "results" / "locallaw.csv", rows, spec.spec_hash)
    return EXIT_OK if not rows[0]["growth_flag"] else EXIT_CHECK_FAILED


def run_movefn(spec, out):
    p = spec.params
    lam = DiskDomain((0.0, 0.0), p["lam_radius"])
    _, samples, _ = _gather(spec)
    rng = np.random.default_rng(spec.seed + 1)
    rows = []
    n_conv = 0
    count = min(p["n_pairs"], len(samples))
    for k in range(count):
        cfg = PointConfig(samples[k])
        m = cfg.restrict(lam).n
        probe = PointConfig(lam.sample_uniform(m, rng))
        ev = convergence_diagnostic(
            probe,
            cfg,
            lam,
            p["p_max"],
            n_points=spec.params["n"],
            tolerance=p["tolerance"],
        )
        n_conv += ev.converged
        for j, pj in enumerate(ev.p_values):
            rows.append(
                {
                    "pair": k,
                    "p": pj,
                    "move_value": ev.move_values[j],
                    "increment": ev.increments[j] if j < len(ev.increments) else 0.0,
                    "converged": int(ev.converged),
                }
            )
    write_csv(
        out / "results" / "movefn.csv",
        rows,
        spec.spec_hash,
        meta={"converged_fraction": n_conv / count},
    )
    return EXIT_OK if n_conv == count else EXIT_CHECK_FAILED


def run_apriori(spec, out):
    p = spec.params
    rng = np.random.default_rng(spec.seed)
    phis = [f for f in lipschitz_dictionary(1.0) if math.isfinite(f.seminorms[1])][:8]
    omega = DiskDomain((0.0, 0.0), 2.2)
    scans = {}
    for label, n in (("small", p["n_small"]), ("large", p["n_large"])):
        dom = system_domain(n)
        configs = [
            PointConfig(dom.sample_uniform(n, rng)) for _ in range(p["n_pairs"])
        ]
        scans[label] = apriori_scan(configs, phis, omega, n, h=p["h"], eta=p["eta"])
    passed = scans["large"]["max_ratio"] <= p["ceiling_factor"] * scans["small"]["max_ratio"]
    write_json(
        out / "results" / "apriori.json",
        {"small": scans["small"], "large": scans["large"], "pass": bool(passed)},
        spec.spec_hash,
    )
    return EXIT_OK if passed else EXIT_CHECK_FAILED


_RUNNERS = {
    "sample": run_sample,
    "dlr": run_dlr,
    "rigidity": run_rigidity,
    "loctrans": run_loctrans,
    "locallaw": run_locallaw,
    "movefn": run_movefn,
    "apriori": run_apriori,
}


def run_experiment(spec, out_dir=None) -> int:
    out = Path(out_dir if out_dir is not None else spec.out_dir)
    (out / "results").mkdir(parents=True, exist_ok=True)
    t0 = time.monotonic()
    status = _RUNNERS[spec.kind](spec, out)
    write_manifest(out, spec, wall_time=time.monotonic() - t0, extra={"exit_code": status})
    return status


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="ocplab", description=__doc__)
    ap.add_argument("command", choices=KINDS + ("verify",))
    ap.add_argument("--spec", help="path to the INI config")
    ap.add_argument("--out", help="output directory (overrides the spec)")
    ap.add_argument("--seed", type=int, help="master seed override")
    ap.add_argument("--threads", type=int, default=1, help="compute threads")
    args = ap.parse_args(argv)
    if args.threads and args.threads > 1:
        try:
            import numba

            numba.set_num_threads(args.threads)
        except (ImportError, ValueError):
            pass
    try:
        if args.command == "verify":
            if not args.out:
                ap.error("verify needs --out")
            report = verify_run(args.out)
            print(
                f"checked {report['checked']} artifacts: "
                + ("ok" if report["ok"] else "; ".join(report["problems"]))
            )
            return EXIT_OK if report["ok"] else EXIT_CHECK_FAILED
        if not args.spec:
            ap.error("missing --spec")
        spec = load_spec(args.spec)
        if spec.kind != args.command:
            print(
                f"spec kind '{spec.kind}' does not match command '{args.command}'",
                file=sys.stderr,
            )
            return EXIT_ERROR
        if args.seed is not None:
            spec.seed = args.seed
        status = run_experiment(spec, out_dir=args.out)
        print(f"{spec.kind}: exit {status}")
        return status
    except SpecError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
