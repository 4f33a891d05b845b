#!/usr/bin/env python3
"""Reference refinement study on the unit square.

Solves the double-well problem under a ramp-times-sine load for a
doubling family of time partitions, then prints and saves the three
headline diagnostics: consecutive interpolant distances, normalized
a-priori ratios, and the parabolic-cylinder seminorm of the field.

Run from the repository root:

    python3 scripts/run_reference_study.py --out out/reference
"""

import argparse
import time
from pathlib import Path

import numpy as np

import rateindep as ri
from rateindep.diagnostics import (
    HolderParams,
    apriori_spread,
    apriori_track,
    campanato_seminorm,
    convergence_study,
)


def build_problem(nx: int, amplitude: float, gamma: float) -> ri.Problem:
    grid = ri.Grid(1.0, 1.0, nx, nx)
    return ri.Problem(
        grid=grid,
        m=1,
        energy=ri.double_well(gamma),
        dissipation=ri.euclidean(1.0),
        operator=ri.laplacian(1),
        loading=ri.analytic_loading(
            ri.time_ramp(1.0), ri.space_sine(amplitude), a=2.0, p=4.0
        ),
        initial=ri.Field.zeros(grid, 1),
        time=ri.TimePartition.uniform(1.0, 8),
    )


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nx", type=int, default=63)
    ap.add_argument("--amplitude", type=float, default=2.5)
    ap.add_argument("--gamma", type=float, default=0.05)
    ap.add_argument("--refine", default="8,16,32,64")
    ap.add_argument("--alpha", type=float, default=0.25)
    ap.add_argument("--holder-a", type=float, default=2.0)
    ap.add_argument("--out", default="out/reference")
    args = ap.parse_args()

    n_list = [int(x) for x in args.refine.split(",")]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    prob = build_problem(args.nx, args.amplitude, args.gamma)
    conv = ri.validate_convexity(prob.energy, prob.grid)
    print(f"grid {args.nx}x{args.nx}, C_P = {conv.cp:.6f}, margin 1 - mu*C_P^2 = {conv.margin:.6f}")

    t0 = time.perf_counter()
    study = convergence_study(prob, n_list, ri.SolverConfig(accel=True))
    print(f"solved N in {{{args.refine}}} in {time.perf_counter() - t0:.1f}s")

    print("\nconsecutive interpolant distances (sup over fine nodes):")
    for row in study.rows:
        print(
            f"  N {row['n_coarse']:>3} -> {row['n_fine']:>3}:  "
            f"|du|_L2 = {row['diff_u']:.4e}   |d grad u|_L2 = {row['diff_grad']:.4e}"
        )

    reports = {n: apriori_track(study.runs[n]) for n in n_list}
    spread = apriori_spread(reports)
    print("\nnormalized a-priori ratios (max over steps):")
    for n in n_list:
        rep = reports[n]
        print(
            f"  N {n:>3}:  r_space = {rep.r_space.max():.4f}   "
            f"r_time = {rep.r_time.max():.4f}   |w|_inf = {rep.w_inf.max():.6f}"
        )
    print(
        f"  spread across family: r_space {spread['spread_r_space']:.3f}, "
        f"r_time {spread['spread_r_time']:.3f}"
    )

    hp = HolderParams(alpha=args.alpha, a=args.holder_a)
    print(f"\ncylinder seminorm (alpha = {hp.alpha}, b = {hp.b:.3f}, zeta = {hp.zeta:.4f}):")
    semis = {}
    for n in n_list:
        semis[n] = campanato_seminorm(study.runs[n], hp, which="field")
        print(f"  N {n:>3}:  {semis[n]:.6e}")

    header = "n,diff_u,diff_grad,max_r_space,max_r_time,w_inf,seminorm\n"
    with open(out / "summary.csv", "w") as fh:
        fh.write(header)
        diffs = {row["n_fine"]: row for row in study.rows}
        for n in n_list:
            row = diffs.get(n, {})
            fh.write(
                ",".join(
                    format(v, ".17g") if isinstance(v, float) else str(v)
                    for v in (
                        n,
                        row.get("diff_u", float("nan")),
                        row.get("diff_grad", float("nan")),
                        float(reports[n].r_space.max()),
                        float(reports[n].r_time.max()),
                        float(reports[n].w_inf.max()),
                        semis[n],
                    )
                )
                + "\n"
            )
    for n in n_list:
        ri.write_snapshot(out / f"final_N{n}.txt", study.runs[n].steps[-1].u)
    print(f"\nwrote {out / 'summary.csv'} and final-state snapshots")


if __name__ == "__main__":
    main()
