"""Diagnostics: seminorm oracle, exponent bookkeeping, reports."""

import math

import numpy as np
import pytest

import rateindep as ri
from rateindep.diagnostics import (
    FieldPath,
    HolderParams,
    admissible_alpha_sup,
    apriori_spread,
    apriori_track,
    campanato_seminorm,
    convergence_study,
    el_random_test,
    energy_balance_report,
    joint_metric_check,
    joint_metric_constant,
    rate_independence_check,
)
from rateindep.grid import Field, Grid, TimePartition, gradient

from conftest import make_reference_problem


# ---------------------------------------------------------------------------
# naive reference implementation of the cylinder seminorm


def _interp(nodes, stack, t):
    k = int(np.searchsorted(nodes, t, side="right")) - 1
    k = max(0, min(k, nodes.size - 2))
    th = (t - nodes[k]) / (nodes[k + 1] - nodes[k])
    return (1.0 - th) * stack[k] + th * stack[k + 1]


def _naive_campanato(grid, nodes, stack, params, radii):
    T = float(nodes[-1])
    ny, nx, m = stack.shape[1:]
    best = 0.0
    for r in radii:
        rb = r**params.b
        Ri = int(math.floor(r / grid.hx + 1e-12))
        Rj = int(math.floor(r / grid.hy + 1e-12))
        offs = [
            (di, dj)
            for dj in range(-Rj, Rj + 1)
            for di in range(-Ri, Ri + 1)
            if (di * grid.hx) ** 2 + (dj * grid.hy) ** 2 <= r * r
        ]
        anchors = [t for t in nodes if t + rb <= T + 1e-12 * max(T, 1.0)]
        if not anchors:
            anchors = [float(nodes[0])]
        for t0 in anchors:
            t1 = min(t0 + rb, T)
            inner = [t for t in nodes if t0 < t < t1]
            ts = np.array([t0] + inner + [t1])
            d = np.diff(ts)
            wt = np.zeros(ts.size)
            wt[:-1] += 0.5 * d
            wt[1:] += 0.5 * d
            wt /= ts[-1] - ts[0]
            frames = [_interp(nodes, stack, t) for t in ts]
            for j0 in range(ny):
                for i0 in range(nx):
                    vals = np.zeros((ts.size, len(offs), m))
                    for o, (di, dj) in enumerate(offs):
                        i, j = i0 + di, j0 + dj
                        if 0 <= i < nx and 0 <= j < ny:
                            for s in range(ts.size):
                                vals[s, o] = frames[s][j, i]
                    c = np.einsum("s,so...->...", wt, vals) / len(offs)
                    dev = np.sqrt(np.sum((vals - c) ** 2, axis=-1))
                    mean_dev = float(np.einsum("s,so->", wt, dev)) / len(offs)
                    best = max(best, mean_dev / r**params.alpha)
    return best


@pytest.mark.parametrize(
    "nx,ny,n_steps,seed",
    [(7, 7, 3, 0), (15, 15, 40, 1), (15, 7, 6, 2)],
    ids=["single-radius", "inner-time-nodes", "anisotropic"],
)
def test_campanato_matches_naive_oracle(nx, ny, n_steps, seed):
    grid = Grid(1.0, 1.0, nx, ny)
    part = TimePartition.uniform(1.0, n_steps)
    rng = np.random.default_rng(seed)
    stack = rng.standard_normal((n_steps + 1, ny, nx, 1))
    path = FieldPath(grid, part.nodes, stack)
    params = HolderParams(alpha=0.3, a=2.0)
    fast = campanato_seminorm(path, params, max_anchors=100000, max_time_anchors=1000)
    naive = _naive_campanato(grid, part.nodes, stack, params, _radii(grid))
    assert fast == pytest.approx(naive, rel=1e-10)


def _radii(grid):
    rmax = min(grid.lx, grid.ly) / 4.0
    out, r = [], 2.0 * grid.hx
    while r <= rmax * (1.0 + 1e-12):
        out.append(r)
        r *= 2.0
    return out


def test_campanato_zero_path_is_exactly_zero():
    grid = Grid(1.0, 1.0, 9, 9)
    part = TimePartition.uniform(1.0, 4)
    path = FieldPath(grid, part.nodes, np.zeros((5, 9, 9, 1)))
    assert campanato_seminorm(path, HolderParams(0.4, 2.0)) == 0.0


def test_campanato_absolute_homogeneity():
    grid = Grid(1.0, 1.0, 9, 9)
    part = TimePartition.uniform(1.0, 3)
    rng = np.random.default_rng(4)
    stack = rng.standard_normal((4, 9, 9, 2))
    p1 = FieldPath(grid, part.nodes, stack)
    p3 = FieldPath(grid, part.nodes, -3.0 * stack)
    hp = HolderParams(0.25, 2.0)
    assert campanato_seminorm(p3, hp) == pytest.approx(
        3.0 * campanato_seminorm(p1, hp), rel=1e-12
    )


def test_campanato_time_constant_path_is_partition_independent():
    grid = Grid(1.0, 1.0, 11, 11)
    frame = Field.from_function(grid, lambda x, y: x).values
    hp = HolderParams(0.3, 2.0)
    vals = []
    for n in (2, 5):
        part = TimePartition.uniform(1.0, n)
        stack = np.repeat(frame[None], n + 1, axis=0)
        vals.append(campanato_seminorm(FieldPath(grid, part.nodes, stack), hp))
    assert vals[0] > 0.0
    assert vals[0] == pytest.approx(vals[1], rel=1e-12)


def test_campanato_subsampled_anchors_give_lower_bound():
    grid = Grid(1.0, 1.0, 15, 15)
    part = TimePartition.uniform(1.0, 6)
    rng = np.random.default_rng(9)
    path = FieldPath(grid, part.nodes, rng.standard_normal((7, 15, 15, 1)))
    hp = HolderParams(0.3, 2.0)
    full = campanato_seminorm(path, hp, max_anchors=100000, max_time_anchors=1000)
    sub = campanato_seminorm(path, hp, max_anchors=30, max_time_anchors=2)
    assert sub <= full + 1e-15


def test_campanato_gradient_path_runs_and_scales():
    grid = Grid(1.0, 1.0, 15, 15)
    part = TimePartition.uniform(1.0, 3)
    rng = np.random.default_rng(12)
    stack = rng.standard_normal((4, 15, 15, 1))
    path = FieldPath(grid, part.nodes, stack)
    hp = HolderParams(0.3, 2.0)
    g1 = campanato_seminorm(path, hp, which="gradient")
    g3 = campanato_seminorm(FieldPath(grid, part.nodes, 3.0 * stack), hp, which="gradient")
    assert g1 > 0.0
    assert g3 == pytest.approx(3.0 * g1, rel=1e-12)


def test_holder_params_frozen_values_and_formula():
    hp = HolderParams(alpha=0.3, a=2.0)
    assert hp.b == pytest.approx(2.6, rel=1e-15)
    assert hp.zeta == pytest.approx(0.3 / 2.6, rel=1e-15)
    # same exponent via the single-expression form
    d = 2
    direct = hp.alpha * (hp.a - 1.0) / ((0.5 * d + hp.alpha) * hp.a)
    assert hp.zeta == pytest.approx(direct, rel=1e-15)
    assert hp.gamma == hp.zeta
    with pytest.raises(ValueError):
        HolderParams(alpha=1.0, a=2.0)
    with pytest.raises(ValueError):
        HolderParams(alpha=0.3, a=1.0)


def test_admissible_alpha_sup_frozen_values():
    assert admissible_alpha_sup(4.0, which="field") == 1.0  # min(1, 6/4)
    assert admissible_alpha_sup(4.0, which="gradient") == 0.5  # (4-2)/4
    assert admissible_alpha_sup(2.0, which="field") == 1.0
    assert admissible_alpha_sup(2.0, which="gradient") == 0.0  # p = d: none
    assert admissible_alpha_sup(3.0, d=3, which="field") == pytest.approx(1.0)
    with pytest.raises(ValueError):
        admissible_alpha_sup(4.0, which="mixed")


def test_joint_metric_constant_and_check():
    hp = HolderParams(alpha=0.25, a=2.0)
    grid = Grid(1.0, 1.0, 15, 15)
    K = joint_metric_constant(hp, 1.0, grid.diameter)
    assert K == pytest.approx(
        2.0 * (1.0 + (1.0 + math.sqrt(2.0)) ** (0.25 - hp.zeta)), rel=1e-12
    )
    for alpha, a in ((0.25, 2.0), (0.6, 1.5), (0.9, 3.0)):
        assert joint_metric_check(HolderParams(alpha, a), grid, 1.0) >= 0.0


def test_el_random_test_passes_on_reference_run(small_run):
    _, run = small_run
    rep = el_random_test(run, n_fields=10, seed=3)
    assert rep.ok
    assert rep.max_residual <= rep.tol
    assert rep.min_margin >= 0.0


def test_apriori_track_columns_and_determinism(small_run):
    prob, run = small_run
    rep1 = apriori_track(run)
    rep2 = apriori_track(run, prob)
    for name in rep1.COLUMNS:
        a, b = getattr(rep1, name), getattr(rep2, name)
        assert np.array_equal(a, b)
        assert np.all(np.isfinite(a))
    assert rep1.margin == pytest.approx(
        ri.validate_convexity(prob.energy, prob.grid).margin, rel=1e-15
    )
    assert np.all(rep1.w_inf <= 1.0 + 1e-8)
    assert rep1.rows()[0][0] == 1  # first step index


def test_apriori_spread_arithmetic():
    class Fake:
        def __init__(self, s, t):
            self.r_space = np.array([s])
            self.r_time = np.array([t])

    out = apriori_spread({16: Fake(1.0, 2.0), 32: Fake(1.2, 2.2)})
    assert out["spread_r_space"] == pytest.approx(0.2, rel=1e-12)
    assert out["spread_r_time"] == pytest.approx(0.1, rel=1e-12)


def test_rate_check_identity_is_exact(unit_grid_15):
    prob = make_reference_problem(unit_grid_15, 4)
    rep = rate_independence_check(prob, prob.time.nodes.copy())
    assert rep.ok
    assert rep.max_iterate_diff == 0.0
    assert rep.sample_mismatch == 0.0


def test_rate_check_rejects_mismatched_samples(unit_grid_15):
    prob = make_reference_problem(unit_grid_15, 4)
    nodes2 = np.array([0.0, 0.1, 0.5, 0.9, 1.0])
    with pytest.raises(ValueError, match="sample-sequence mismatch"):
        rate_independence_check(prob, nodes2)


def test_rate_check_rejects_time_varying_operator(unit_grid_15):
    grid = unit_grid_15
    prob = ri.Problem(
        grid=grid,
        m=1,
        energy=ri.double_well(0.05),
        dissipation=ri.euclidean(1.0),
        operator=ri.time_modulated(0.2, 1.0),
        loading=ri.analytic_loading(ri.time_constant(), ri.space_uniform(0.5)),
        initial=ri.Field.zeros(grid, 1),
        time=ri.TimePartition.uniform(1.0, 4),
    )
    nodes2 = np.array([0.0, 0.1, 0.5, 0.9, 1.0])
    with pytest.raises(ValueError, match="sample-sequence mismatch"):
        rate_independence_check(prob, nodes2)


def test_rate_check_nonuniform_with_composed_load(unit_grid_15):
    prob = make_reference_problem(unit_grid_15, 4)
    nodes1 = prob.time.nodes
    nodes2 = np.array([0.0, 0.1, 0.5, 0.9, 1.0])
    load2 = ri.reparametrize(prob.loading, lambda t: np.interp(t, nodes2, nodes1))
    rep = rate_independence_check(prob, nodes2, loading2=load2)
    assert rep.ok
    assert rep.max_iterate_diff == 0.0


def test_convergence_study_validation_and_reuse(unit_grid_15):
    prob = make_reference_problem(unit_grid_15, 2)
    with pytest.raises(ValueError):
        convergence_study(prob, [2, 3])
    with pytest.raises(ValueError):
        convergence_study(prob, [4])
    cfg = ri.SolverConfig(accel=True)
    study = convergence_study(prob, [2, 4], cfg)
    study2 = convergence_study(prob, [2, 4], cfg, runs=study.runs)
    assert study2.runs[2] is study.runs[2]
    assert study2.rows[0]["diff_u"] == pytest.approx(study.rows[0]["diff_u"], rel=1e-15)
    assert study.rows[0]["n_coarse"] == 2 and study.rows[0]["n_fine"] == 4
    assert study.rows[0]["diff_u"] > 0.0


def test_energy_report_reference_run(small_run):
    prob, run = small_run
    rep = energy_balance_report(run)
    assert rep.ok_steps and rep.ok_cumulative
    assert np.all(rep.dissipated >= 0.0)
    assert np.all(rep.stored >= 0.0)
    assert np.all(rep.drift == 0.0)  # autonomous operator
    assert np.all(np.diff(rep.cum_slack) >= -1e-15)
    # stick phase: no dissipation, no work
    assert rep.dissipated[0] == 0.0 and rep.work[0] == 0.0


def test_energy_report_zero_loading_is_all_zero():
    grid = Grid(1.0, 1.0, 7, 7)
    prob = ri.Problem(
        grid=grid,
        m=1,
        energy=ri.double_well(0.05),
        dissipation=ri.euclidean(1.0),
        operator=ri.laplacian(1),
        loading=ri.analytic_loading(ri.time_constant(), ri.space_uniform(0.0)),
        initial=ri.Field.zeros(grid, 1),
        time=ri.TimePartition.uniform(1.0, 3),
    )
    run = ri.run_evolution(prob)
    rep = energy_balance_report(run)
    for name in ("dissipated", "work", "drift", "step_slack", "cum_slack"):
        assert np.all(getattr(rep, name) == 0.0), name
    # stored energy is the constant bulk offset of the double well
    assert np.allclose(rep.stored, rep.stored_initial, atol=1e-15)


def test_field_path_interpolation(small_run):
    _, run = small_run
    path = FieldPath.from_run(run)
    stack = run.iterate_values()
    nodes = run.partition.nodes
    assert np.array_equal(path.values_at(float(nodes[2])), stack[2])
    mid = 0.5 * (nodes[2] + nodes[3])
    assert np.allclose(path.values_at(mid), 0.5 * (stack[2] + stack[3]), atol=1e-15)
