"""Command-line orchestration: solve, check, study, rate, validate.

Exit codes: 0 on pass, 1 when the assumption gate or an invariant
suite fails, 2 on solver failure.  Output files are plain CSV with 17
significant digits plus a ``manifest.json`` describing the run.  Set
``RATEINDEP_THREADS`` to pin the numeric thread count (honored because
the package sets the BLAS thread variables before touching numpy).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time as _time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, ValidationReport, load_config, validate_config
from .diagnostics import (
    HolderParams,
    admissible_alpha_sup,
    apriori_spread,
    apriori_track,
    campanato_seminorm,
    convergence_study,
    el_random_test,
    energy_balance_report,
    joint_metric_check,
    rate_independence_check,
)
from .grid import write_snapshot
from .rothe import SolverError, run_evolution

__all__ = ["main"]


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _emit_steps(run, out: Path) -> None:
    rows = []
    for step in run.steps:
        rows.append(
            (
                int(step.k),
                step.t,
                step.residual,
                int(step.inner_iters),
                step.f_decrease,
                float(np.max(np.abs(step.u.values))),
                float(np.max(np.abs(step.delta.values))),
                float(np.max(np.abs(step.multiplier.values))),
            )
        )
    _write_csv(
        out / "steps.csv",
        ("k", "t", "residual", "inner_iters", "f_decrease", "u_max", "rate_max", "force_max"),
        rows,
    )


def _emit_energy(report, out: Path) -> None:
    _write_csv(out / "energy.csv", report.COLUMNS, report.rows())


def _emit_apriori(reports: dict, out: Path) -> None:
    header = ("n",) + type(next(iter(reports.values()))).COLUMNS
    rows = []
    for n in sorted(reports):
        for row in reports[n].rows():
            rows.append((n,) + tuple(row))
    _write_csv(out / "apriori.csv", header, rows)


def _emit_holder(rows, out: Path) -> None:
    _write_csv(
        out / "holder.csv",
        ("n", "which", "alpha", "a", "b", "zeta", "admissible", "seminorm"),
        rows,
    )


def _manifest(out: Path, payload: dict) -> None:
    with open(out / "manifest.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def _versions() -> dict:
    import scipy

    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "rateindep": __version__,
    }


def _load_or_report(path: str):
    res = load_config(path)
    if isinstance(res, ValidationReport):
        print(res.summary())
        return None
    return res


def _snapshots(run, cfg: RunConfig, out: Path) -> list[str]:
    every = int(cfg["output"]["snapshot_every"])
    written = []
    if every > 0:
        for step in run.steps:
            if step.k % every == 0:
                p = out / f"snapshot_k{step.k:04d}.txt"
                write_snapshot(p, step.u)
                written.append(p.name)
    p = out / "snapshot_final.txt"
    write_snapshot(p, run.steps[-1].u)
    written.append(p.name)
    return written


def _out_dir(cfg: RunConfig, override: str | None) -> Path:
    out = Path(override) if override else Path(cfg["output"]["directory"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_validate(args) -> int:
    res = load_config(args.config)
    if isinstance(res, ValidationReport):
        print(res.summary())
        return 1
    report = validate_config(res.data)
    print(report.summary())
    return 0


def cmd_solve(args) -> int:
    cfg = _load_or_report(args.config)
    if cfg is None:
        return 1
    out = _out_dir(cfg, args.out)
    prob = cfg.problem()
    t0 = _time.perf_counter()
    try:
        run = run_evolution(prob, cfg.solver_config())
    except SolverError as exc:
        print(f"solver failure: {exc}")
        return 2
    elapsed = _time.perf_counter() - t0
    _emit_steps(run, out)
    _emit_energy(energy_balance_report(run), out)
    snaps = _snapshots(run, cfg, out)
    _manifest(
        out,
        {
            "command": "solve",
            "config": cfg.to_dict(),
            "versions": _versions(),
            "outputs": ["steps.csv", "energy.csv"] + snaps,
            "elapsed_s": elapsed,
        },
    )
    print(f"solved {prob.time.n_steps} steps in {elapsed:.2f}s -> {out}")
    return 0


def cmd_check(args) -> int:
    cfg = _load_or_report(args.config)
    if cfg is None:
        return 1
    out = _out_dir(cfg, args.out)
    prob = cfg.problem()
    dg = cfg["diagnostics"]
    t0 = _time.perf_counter()
    try:
        run = run_evolution(prob, cfg.solver_config())
    except SolverError as exc:
        print(f"solver failure: {exc}")
        return 2

    el = el_random_test(run, n_fields=int(dg["n_test_fields"]), seed=int(dg["seed"]))
    en = energy_balance_report(run)
    ap = apriori_track(run)
    alpha = dg["alpha"]
    hp = HolderParams(alpha=alpha, a=dg["holder_a"])
    semi = campanato_seminorm(run, hp, which="field")
    jm = joint_metric_check(hp, prob.grid, prob.time.t_final)

    flags = {
        "el_residual": bool(el.max_residual <= el.tol),
        "el_random_test": bool(el.min_margin >= 0.0),
        "energy_steps": en.ok_steps,
        "energy_cumulative": en.ok_cumulative,
        "apriori_finite": bool(np.all(np.isfinite(ap.r_space)) and np.all(np.isfinite(ap.r_time))),
        "holder_finite": bool(np.isfinite(semi)),
        "joint_metric": bool(jm >= 0.0),
    }
    _emit_steps(run, out)
    _emit_energy(en, out)
    _emit_apriori({prob.time.n_steps: ap}, out)
    adm = admissible_alpha_sup(prob.loading.p, which="field")
    _emit_holder(
        [(prob.time.n_steps, "field", alpha, hp.a, hp.b, hp.zeta, alpha < adm, semi)], out
    )
    _manifest(
        out,
        {
            "command": "check",
            "config": cfg.to_dict(),
            "versions": _versions(),
            "flags": flags,
            "el": asdict(el),
            "joint_metric_min_margin": jm,
            "field_seminorm": semi,
            "elapsed_s": _time.perf_counter() - t0,
        },
    )
    for name, okflag in flags.items():
        print(f"{'PASS' if okflag else 'FAIL'} {name}")
    return 0 if all(flags.values()) else 1


def cmd_study(args) -> int:
    cfg = _load_or_report(args.config)
    if cfg is None:
        return 1
    out = _out_dir(cfg, args.out)
    prob = cfg.problem()
    dg = cfg["diagnostics"]
    n_list = [int(x) for x in args.refine.split(",")]
    t0 = _time.perf_counter()
    try:
        study = convergence_study(prob, n_list, cfg.solver_config())
    except SolverError as exc:
        print(f"solver failure: {exc}")
        return 2

    ap_reports = {n: apriori_track(study.runs[n]) for n in n_list}
    spread = apriori_spread({n: ap_reports[n] for n in n_list[1:]})
    hp = HolderParams(alpha=dg["alpha"], a=dg["holder_a"])
    adm = admissible_alpha_sup(prob.loading.p, which="field")
    holder_rows = []
    semis = {}
    for n in n_list:
        semi = campanato_seminorm(study.runs[n], hp, which="field")
        semis[n] = semi
        holder_rows.append((n, "field", hp.alpha, hp.a, hp.b, hp.zeta, hp.alpha < adm, semi))

    _write_csv(
        out / "convergence.csv",
        ("n_coarse", "n_fine", "diff_u", "diff_grad"),
        [(r["n_coarse"], r["n_fine"], r["diff_u"], r["diff_grad"]) for r in study.rows],
    )
    _emit_apriori(ap_reports, out)
    _emit_holder(holder_rows, out)

    diffs = study.diffs()
    vals = [semis[n] for n in n_list[1:]]
    lo, hi = min(vals), max(vals)
    flags = {
        "convergence_decreasing": bool(
            all(b < a for a, b in zip(diffs, diffs[1:]))
        ),
        "apriori_spread_space": bool(spread["spread_r_space"] < 0.20),
        "apriori_spread_time": bool(spread["spread_r_time"] < 0.20),
        "holder_spread": bool(lo > 0 and (hi - lo) / lo < 0.20 or hi == 0.0),
    }
    _manifest(
        out,
        {
            "command": "study",
            "config": cfg.to_dict(),
            "versions": _versions(),
            "refine": n_list,
            "flags": flags,
            "apriori_spread": spread,
            "field_seminorms": semis,
            "elapsed_s": _time.perf_counter() - t0,
        },
    )
    for name, okflag in flags.items():
        print(f"{'PASS' if okflag else 'FAIL'} {name}")
    return 0 if all(flags.values()) else 1


def cmd_rate(args) -> int:
    cfg = _load_or_report(args.config)
    if cfg is None:
        return 1
    prob = cfg.problem()
    nodes = np.array([float(x) for x in Path(args.reparam).read_text().split()])
    try:
        rep = rate_independence_check(prob, nodes, cfg.solver_config())
    except SolverError as exc:
        print(f"solver failure: {exc}")
        return 2
    except ValueError as exc:
        print(f"precondition failure: {exc}")
        return 1
    print(
        f"{'PASS' if rep.ok else 'FAIL'} rate independence: "
        f"max iterate diff {rep.max_iterate_diff:.3e} (scale {rep.scale:.3e})"
    )
    return 0 if rep.ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rateindep",
        description="Incremental-minimization solver and verification harness "
        "for rate-independent evolutions on a rectangle.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="TOML-subset config file")
        p.add_argument("--out", default=None, help="override output directory")
        p.set_defaults(fn=fn)
        return p

    add("validate", cmd_validate, "run the assumption gate and print the report")
    add("solve", cmd_solve, "solve and emit steps/energy CSVs and snapshots")
    add("check", cmd_check, "solve plus certificate, energy, and seminorm checks")
    p_study = add("study", cmd_study, "refinement family: convergence/apriori/holder CSVs")
    p_study.add_argument("--refine", default="8,16,32,64", help="comma list of step counts")
    p_rate = add("rate", cmd_rate, "replay on reparametrized nodes and compare")
    p_rate.add_argument("--reparam", required=True, help="file of reparametrized node times")

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
