"""Post-processing checks of the solver's quantitative behavior.

Everything here is pure bookkeeping over a finished :class:`RunResult`:

* a-priori norm tracking: interior Hessian and rate-gradient norms per
  step, normalized by the loading terms they are supposed to be
  controlled by, so that N-uniform boundedness of the ratios is the
  falsifiable statement (the generic constants of the underlying
  estimates are not computable);
* Campanato-type seminorms of the space-time interpolant over parabolic
  cylinders ``(t, t + r^b) x B_r(x)``, a sampled sup over dyadic radii
  and node anchors, documented as a lower bound of the true sup;
* exact rate-independence replays, refinement (Cauchy) studies, and
  the discrete energy-dissipation balance.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import dissipation as dsp
from . import elliptic, energy
from .grid import Field, Grid, TimePartition, gradient, hessian_interior, lp_norm
from .rothe import Problem, RunResult, SolverConfig, run_evolution

__all__ = [
    "ELReport",
    "el_random_test",
    "AprioriReport",
    "apriori_track",
    "apriori_spread",
    "HolderParams",
    "admissible_alpha_sup",
    "joint_metric_constant",
    "joint_metric_check",
    "FieldPath",
    "campanato_seminorm",
    "RateReport",
    "rate_independence_check",
    "StudyResult",
    "convergence_study",
    "EnergyReport",
    "energy_balance_report",
]


# ---------------------------------------------------------------------------
# randomized variational-inequality test


@dataclass(frozen=True)
class ELReport:
    """Certificate audit over a finished run.

    ``max_residual`` is the largest stored pointwise subdifferential
    residual; ``min_slack`` the most negative value of
    ``sum R1(xi) - R1(rate) - g.(xi - rate)`` over random test fields
    ``xi``, which the certificate bounds below by ``-tol * |xi - rate|_1``.
    ``min_margin`` is the minimum of slack plus that allowance;
    nonnegative means every sampled inequality held.
    """

    max_residual: float
    min_slack: float
    min_margin: float
    tol: float
    ok: bool


def el_random_test(
    run: RunResult,
    prob: Problem | None = None,
    n_fields: int = 50,
    seed: int = 0,
    tol: float | None = None,
) -> ELReport:
    """Probe each accepted step with random test fields.

    The accepted step stores the driving force ``g`` (the negative
    smooth gradient at the minimizer) and the rate; one-homogeneity of
    the dissipation density makes ``g`` lie tol-close to its
    subdifferential at the rate, so for every test field the integrated
    inequality can undershoot zero by at most ``tol`` times the L1 norm
    of the difference.  Random Gaussian fields probe it directly.
    """
    prob = prob or run.problem
    if tol is None:
        tol = prob.resolved_tol(run.cfg)
    grid = prob.grid
    area = grid.cell_area
    rng = np.random.default_rng(seed)

    max_res = 0.0
    min_slack = np.inf
    min_margin = np.inf
    for step in run.steps:
        max_res = max(max_res, step.residual)
        d = step.delta.values
        g = step.multiplier.values
        r_d = float(np.sum(dsp.r1(prob.dissipation, d)))
        for _ in range(n_fields):
            xi = rng.standard_normal(d.shape)
            diff = xi - d
            slack = area * float(
                np.sum(dsp.r1(prob.dissipation, xi)) - r_d - np.sum(g * diff)
            )
            l1 = area * float(np.sum(np.sqrt(np.sum(diff * diff, axis=-1))))
            min_slack = min(min_slack, slack)
            min_margin = min(min_margin, slack + tol * l1)
    ok = bool(max_res <= tol and min_margin >= 0.0)
    return ELReport(
        max_residual=max_res,
        min_slack=float(min_slack),
        min_margin=float(min_margin),
        tol=tol,
        ok=ok,
    )


# ---------------------------------------------------------------------------
# a-priori norm tracking


@dataclass(eq=False)
class AprioriReport:
    """Per-step norms and normalized ratios of one run.

    ``r_space`` divides the interior Hessian norm by
    ``1 + |f_k|_p + |f_k|_2^(q-1)``; ``r_time`` multiplies the rate
    gradient norm by the convexity margin ``1 - mu*C_P^2`` and divides
    by ``1 + mean|df/dt|_2 + |f_k|_2 + |f_k|_2^(q-1)``.  Uniform
    boundedness of both across refinements is what the harness asserts.
    """

    k: np.ndarray
    t: np.ndarray
    hess_p: np.ndarray
    grad_delta_2: np.ndarray
    grad_u_2: np.ndarray
    u_q: np.ndarray
    w_inf: np.ndarray
    f_p: np.ndarray
    f_2: np.ndarray
    dtf_mean_2: np.ndarray
    r_space: np.ndarray
    r_time: np.ndarray
    p: float
    q: float
    margin: float

    COLUMNS = (
        "k",
        "t",
        "hess_p",
        "grad_delta_2",
        "grad_u_2",
        "u_q",
        "w_inf",
        "f_p",
        "f_2",
        "dtf_mean_2",
        "r_space",
        "r_time",
    )

    def rows(self):
        cols = [getattr(self, name) for name in self.COLUMNS]
        return list(zip(*cols))


def apriori_track(run: RunResult, prob: Problem | None = None) -> AprioriReport:
    """Compute all norm columns and ratios for a finished run."""
    prob = prob or run.problem
    grid, part = prob.grid, prob.time
    p = prob.loading.p
    q = prob.energy.q
    margin = energy.validate_convexity(prob.energy, grid).margin
    dtf = prob.loading.dt_l2_means(grid, prob.m, part)
    n = part.n_steps

    out = {name: np.empty(n) for name in AprioriReport.COLUMNS}
    for idx, step in enumerate(run.steps):
        f_k = run.f_samples[step.k]
        f_p = lp_norm(f_k, p, grid)
        f_2 = lp_norm(f_k, 2.0, grid)
        hess = lp_norm(hessian_interior(step.u), p, grid)
        gdel = lp_norm(gradient(step.delta), 2.0, grid)
        out["k"][idx] = step.k
        out["t"][idx] = step.t
        out["hess_p"][idx] = hess
        out["grad_delta_2"][idx] = gdel
        out["grad_u_2"][idx] = lp_norm(gradient(step.u), 2.0, grid)
        out["u_q"][idx] = lp_norm(step.u.values, q, grid)
        out["w_inf"][idx] = lp_norm(step.multiplier.values, np.inf, grid)
        out["f_p"][idx] = f_p
        out["f_2"][idx] = f_2
        out["dtf_mean_2"][idx] = dtf[idx]
        out["r_space"][idx] = hess / (1.0 + f_p + f_2 ** (q - 1.0))
        out["r_time"][idx] = gdel * margin / (1.0 + dtf[idx] + f_2 + f_2 ** (q - 1.0))
    return AprioriReport(p=p, q=q, margin=margin, **out)


def apriori_spread(reports: dict[int, AprioriReport]) -> dict:
    """Relative spread of the per-run maxima across a refinement family.

    ``spread = (max - min) / min`` over the family of ``max_k ratio``;
    large values flag growth that the N-uniform estimates forbid.
    """

    def spread(vals):
        lo, hi = min(vals), max(vals)
        return (hi - lo) / lo if lo > 0 else (0.0 if hi == 0 else np.inf)

    max_space = {n: float(rep.r_space.max()) for n, rep in reports.items()}
    max_time = {n: float(rep.r_time.max()) for n, rep in reports.items()}
    return {
        "max_r_space": max_space,
        "max_r_time": max_time,
        "spread_r_space": spread(list(max_space.values())),
        "spread_r_time": spread(list(max_time.values())),
    }


# ---------------------------------------------------------------------------
# Hoelder parameters and the parabolic-cylinder seminorm


@dataclass(frozen=True)
class HolderParams:
    """Exponent bookkeeping for the space-time seminorm.

    ``b = (d/2 + alpha) * a/(a-1)`` couples the time extent ``r^b`` of a
    cylinder to its spatial radius ``r``; the time exponent is then
    ``zeta = alpha/b``.
    """

    alpha: float
    a: float
    d: int = 2

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"need alpha in (0,1), got {self.alpha}")
        if not (np.isfinite(self.a) and self.a > 1.0):
            raise ValueError(f"need a > 1, got {self.a}")
        if self.d < 1:
            raise ValueError(f"need d >= 1, got {self.d}")

    @property
    def b(self) -> float:
        return (0.5 * self.d + self.alpha) * self.a / (self.a - 1.0)

    @property
    def zeta(self) -> float:
        return self.alpha / self.b

    @property
    def gamma(self) -> float:
        return self.zeta


def admissible_alpha_sup(p: float, d: int = 2, which: str = "field") -> float:
    """Supremum of admissible spatial exponents for the given path kind.

    Field path: ``min(1, (2p-d)/p)``; gradient path: ``min(1, (p-d)/p)``
    which is positive only for ``p > d``.  Returns 0 when no exponent is
    admissible.
    """
    if which == "field":
        return max(0.0, min(1.0, (2.0 * p - d) / p))
    if which == "gradient":
        return max(0.0, min(1.0, (p - d) / p))
    raise ValueError(f"unknown path kind {which!r}")


def joint_metric_constant(params: HolderParams, t_total: float, diam: float) -> float:
    """Constant joining the two-exponent bound to the summed metric."""
    return 2.0 * (1.0 + (t_total + diam) ** (params.alpha - params.zeta))


def joint_metric_check(
    params: HolderParams,
    grid: Grid,
    t_total: float,
    n_pairs: int = 10000,
    seed: int = 0,
) -> float:
    """Worst slack of the joint-metric inequality over random pairs.

    Samples pairs ``(t, x), (s, y)`` in ``[0, T] x Omega`` and returns
    the minimum of ``K*(|t-s| + |x-y|)^zeta - (|t-s|^zeta + |x-y|^alpha)``
    with ``K`` from :func:`joint_metric_constant`; nonnegative means the
    inequality held on every sampled pair.
    """
    rng = np.random.default_rng(seed)
    K = joint_metric_constant(params, t_total, grid.diameter)
    t, s = rng.uniform(0.0, t_total, (2, n_pairs))
    x = rng.uniform(0.0, grid.lx, (2, n_pairs))
    y = rng.uniform(0.0, grid.ly, (2, n_pairs))
    dt = np.abs(t - s)
    dx = np.hypot(x[0] - x[1], y[0] - y[1])
    lhs = dt**params.zeta + dx**params.alpha
    rhs = K * (dt + dx) ** params.zeta
    return float(np.min(rhs - lhs))


@dataclass(eq=False)
class FieldPath:
    """Piecewise-linear-in-time path of node values."""

    grid: Grid
    nodes: np.ndarray  # (N+1,)
    stack: np.ndarray  # (N+1, ny, nx, m)

    @classmethod
    def from_run(cls, run: RunResult) -> "FieldPath":
        return cls(run.problem.grid, run.partition.nodes, run.iterate_values())

    def values_at(self, t: float) -> np.ndarray:
        nodes = self.nodes
        k = min(int(np.searchsorted(nodes, t, side="right")) - 1, nodes.size - 2)
        k = max(k, 0)
        th = (t - nodes[k]) / (nodes[k + 1] - nodes[k])
        return (1.0 - th) * self.stack[k] + th * self.stack[k + 1]


def _dyadic_radii(grid: Grid) -> list[float]:
    rmax = min(grid.lx, grid.ly) / 4.0
    radii = []
    r = 2.0 * grid.hx
    while r <= rmax * (1.0 + 1e-12):
        radii.append(r)
        r *= 2.0
    return radii


def _trapezoid_mean_weights(ts: np.ndarray) -> np.ndarray:
    d = np.diff(ts)
    w = np.zeros(ts.size)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w / (ts[-1] - ts[0])


def campanato_seminorm(
    path,
    params: HolderParams,
    which: str = "field",
    max_anchors: int = 10000,
    max_time_anchors: int = 33,
    radii=None,
) -> float:
    """Sampled sup of mean cylinder oscillation over ``r^alpha``.

    For each dyadic radius ``r`` and each anchor ``(t0, x0)`` the
    quantity is the mean of ``|v - <v>|`` over the cylinder
    ``(t0, t0 + r^b) x B_r(x0)``, divided by ``r^alpha``; the reported
    value is the max over the sampled family.  Space anchors are the
    grid nodes subsampled to at most ``max_anchors``; time anchors are
    partition nodes with the window inside ``[0, T]`` (clipped at the
    final time if no node qualifies), subsampled to
    ``max_time_anchors``.  Lattice points outside the rectangle carry
    the zero extension of the path.  Time means use exact trapezoid
    weights on the interpolant's breakpoints inside the window.

    ``which = "gradient"`` measures the central-difference gradient of
    the path instead (meaningful for source problems with ``p > d``;
    computable regardless).
    """
    if isinstance(path, RunResult):
        path = FieldPath.from_run(path)
    if which not in ("field", "gradient"):
        raise ValueError(f"unknown path kind {which!r}")
    grid: Grid = path.grid
    nodes = path.nodes
    T = float(nodes[-1])

    if which == "gradient":
        frames = [
            gradient(Field(grid, path.stack[idx])).reshape(grid.ny, grid.nx, -1)
            for idx in range(path.stack.shape[0])
        ]
        stack = np.stack(frames, axis=0)
    else:
        stack = path.stack
    work = FieldPath(grid, nodes, stack)

    radii = list(radii) if radii is not None else _dyadic_radii(grid)
    if not radii:
        raise ValueError(
            "cylinder family is empty: no dyadic radius fits min(lx,ly)/4 on this grid"
        )

    stride = 1
    while -(-grid.ny // stride) * -(-grid.nx // stride) > max_anchors:
        stride += 1

    best = 0.0
    for r in radii:
        Ri = int(np.floor(r / grid.hx + 1e-12))
        Rj = int(np.floor(r / grid.hy + 1e-12))
        ox = grid.hx * np.arange(-Ri, Ri + 1)
        oy = grid.hy * np.arange(-Rj, Rj + 1)
        mask = (oy[:, None] ** 2 + ox[None, :] ** 2) <= r * r
        wball = mask.astype(float)
        wball /= wball.sum()
        rb = r**params.b

        anchors = nodes[nodes + rb <= T + 1e-12 * max(T, 1.0)]
        if anchors.size == 0:
            anchors = nodes[:1]
        if anchors.size > max_time_anchors:
            pick = np.unique(np.round(np.linspace(0, anchors.size - 1, max_time_anchors)).astype(int))
            anchors = anchors[pick]

        for t0 in anchors:
            t1 = min(t0 + rb, T)
            inner = nodes[(nodes > t0) & (nodes < t1)]
            ts = np.concatenate(([t0], inner, [t1]))
            wt = _trapezoid_mean_weights(ts)
            V = np.stack([work.values_at(t) for t in ts], axis=0)
            padded = np.pad(V, ((0, 0), (Rj, Rj), (Ri, Ri), (0, 0)))
            swv = sliding_window_view(padded, (2 * Rj + 1, 2 * Ri + 1), axis=(1, 2))
            view = swv[:, ::stride, ::stride]
            n_aj = view.shape[1]
            # chunk anchor rows to bound the broadcast temporaries
            per_row = view.shape[0] * view.shape[2] * view.shape[3] * mask.size
            rows = max(1, int(2e6 / max(per_row, 1)))
            for r0 in range(0, n_aj, rows):
                block = np.ascontiguousarray(view[:, r0 : r0 + rows])
                c = np.einsum("t,JI,tyxcJI->yxc", wt, wball, block, optimize=True)
                dev = block - c[None, :, :, :, None, None]
                mag = np.sqrt(np.einsum("tyxcJI,tyxcJI->tyxJI", dev, dev, optimize=True))
                vals = np.einsum("t,JI,tyxJI->yx", wt, wball, mag, optimize=True)
                best = max(best, float(vals.max()) / r**params.alpha)
    return best


# ---------------------------------------------------------------------------
# rate independence, refinement study, energy balance


@dataclass(frozen=True)
class RateReport:
    """Outcome of replaying a run on reparametrized nodes."""

    max_iterate_diff: float
    scale: float
    sample_mismatch: float
    ok: bool


def rate_independence_check(
    prob: Problem,
    reparam,
    cfg: SolverConfig | None = None,
    loading2=None,
) -> RateReport:
    """Replay on reparametrized nodes and compare iterates.

    ``reparam`` is either an explicit node array or a callable applied
    to the original nodes; it must be strictly increasing with the same
    endpoints.  The sampled loading sequences of both runs must agree
    (time-constant loads, or a pre-composed load via ``loading2``);
    otherwise the precondition is violated and a ``ValueError`` with
    ``sample-sequence mismatch`` is raised.  A time-varying coefficient
    field breaks the premise the same way and is rejected for
    non-identity maps.
    """
    nodes1 = prob.time.nodes
    nodes2 = np.asarray(reparam(nodes1) if callable(reparam) else reparam, dtype=float)
    if nodes2.shape != nodes1.shape:
        raise ValueError(
            f"reparametrized nodes have shape {nodes2.shape}, expected {nodes1.shape}"
        )
    if abs(nodes2[-1] - nodes1[-1]) > 1e-12 * max(1.0, nodes1[-1]):
        raise ValueError("reparametrization must preserve the final time")
    identity = bool(np.array_equal(nodes1, nodes2))
    if not prob.operator.is_autonomous() and not identity:
        raise ValueError(
            "sample-sequence mismatch: time-modulated coefficients sample differently "
            "under a non-identity reparametrization"
        )
    part2 = TimePartition(nodes2)
    loading_b = loading2 if loading2 is not None else prob.loading
    prob2 = replace(prob, time=part2, loading=loading_b)

    s1 = prob.loading.sample(prob.grid, prob.m, prob.time)
    s2 = loading_b.sample(prob.grid, prob.m, part2)
    mismatch = float(np.max(np.abs(s1 - s2)))
    if mismatch > 1e-12 * max(1.0, float(np.max(np.abs(s1)))):
        raise ValueError(
            f"sample-sequence mismatch: loading samples differ by {mismatch:.3e} "
            "between the two partitions"
        )

    run1 = run_evolution(prob, cfg)
    run2 = run_evolution(prob2, cfg)
    diff = 0.0
    scale = 0.0
    for s_a, s_b in zip(run1.steps, run2.steps):
        diff = max(diff, float(np.max(np.abs(s_a.u.values - s_b.u.values))))
        scale = max(scale, float(np.max(np.abs(s_a.u.values))))
    ok = diff == 0.0 if scale == 0.0 else diff <= 1e-12 * scale
    return RateReport(max_iterate_diff=diff, scale=scale, sample_mismatch=mismatch, ok=bool(ok))


@dataclass(eq=False)
class StudyResult:
    """Refinement family with consecutive interpolant distances."""

    n_list: list[int]
    rows: list[dict]
    runs: dict[int, RunResult]

    def diffs(self, column: str = "diff_u") -> list[float]:
        return [row[column] for row in self.rows]


def convergence_study(
    prob: Problem,
    n_list,
    cfg: SolverConfig | None = None,
    runs: dict[int, RunResult] | None = None,
) -> StudyResult:
    """Run a doubling family and measure consecutive C(L2) distances.

    ``runs`` may carry precomputed results keyed by step count; missing
    entries are computed with uniform partitions of the problem's final
    time.  For each consecutive pair the interpolants are compared at
    the finer partition's nodes, in L2 for the fields and their
    central-difference gradients.
    """
    n_list = [int(n) for n in n_list]
    if sorted(n_list) != n_list or len(n_list) < 2:
        raise ValueError("need an ascending list of at least two step counts")
    for a_, b_ in zip(n_list, n_list[1:]):
        if b_ != 2 * a_:
            raise ValueError(f"step counts must double, got {a_} -> {b_}")
    T = prob.time.t_final
    runs = dict(runs) if runs else {}
    for n in n_list:
        if n not in runs:
            runs[n] = run_evolution(replace(prob, time=TimePartition.uniform(T, n)), cfg)

    grid = prob.grid
    rows = []
    for n_c, n_f in zip(n_list, n_list[1:]):
        coarse, fine = FieldPath.from_run(runs[n_c]), FieldPath.from_run(runs[n_f])
        d_u = 0.0
        d_g = 0.0
        for t in runs[n_f].partition.nodes:
            dvals = fine.values_at(t) - coarse.values_at(t)
            d_u = max(d_u, lp_norm(dvals, 2.0, grid))
            d_g = max(d_g, lp_norm(gradient(Field(grid, dvals)), 2.0, grid))
        rows.append({"n_coarse": n_c, "n_fine": n_f, "diff_u": d_u, "diff_grad": d_g})
    return StudyResult(n_list=n_list, rows=rows, runs=runs)


@dataclass(eq=False)
class EnergyReport:
    """Discrete energy-dissipation bookkeeping of one run.

    ``step_slack[k]`` is the decrease of the step objective from the
    anchor to the minimizer (nonnegative up to roundoff);
    ``cum_slack`` accumulates it, which is algebraically the slack of
    the cumulative balance: stored energy now plus total dissipation
    never exceeds the initial energy plus external work (plus the
    drift term when the operator itself moves in time).
    """

    k: np.ndarray
    t: np.ndarray
    dissipated: np.ndarray
    stored: np.ndarray
    work: np.ndarray
    drift: np.ndarray
    step_slack: np.ndarray
    cum_slack: np.ndarray
    stored_initial: float
    scale: float
    ok_steps: bool
    ok_cumulative: bool

    COLUMNS = ("k", "t", "dissipated", "stored", "work", "drift", "step_slack", "cum_slack")

    def rows(self):
        cols = [getattr(self, name) for name in self.COLUMNS]
        return list(zip(*cols))


def energy_balance_report(run: RunResult, prob: Problem | None = None) -> EnergyReport:
    """Recompute the per-step decrease and the cumulative balance."""
    prob = prob or run.problem
    grid, part = prob.grid, prob.time
    area = grid.cell_area
    n = part.n_steps
    autonomous = prob.operator.is_autonomous()
    shared = elliptic.at_time(prob.operator, grid, part.nodes[0]) if autonomous else None

    def w_total(values):
        return area * float(np.sum(energy.w0(prob.energy, values)))

    def stencil_at(k):
        return shared if shared is not None else elliptic.at_time(prob.operator, grid, part.nodes[k])

    out = {name: np.empty(n) for name in EnergyReport.COLUMNS}
    u_prev = prob.initial.values
    st_prev = stencil_at(0)
    stored_initial = 0.5 * st_prev.quadratic(u_prev) + w_total(u_prev)
    cum = 0.0
    for idx, step in enumerate(run.steps):
        k = step.k
        st = stencil_at(k)
        u_k = step.u.values
        f_k = run.f_samples[k]
        diss = area * float(np.sum(dsp.r1(prob.dissipation, u_k - u_prev)))
        stored = 0.5 * st.quadratic(u_k) + w_total(u_k)
        work = area * float(np.sum(f_k * (u_k - u_prev)))
        drift = 0.0 if autonomous else 0.5 * (st.quadratic(u_prev) - st_prev.quadratic(u_prev))
        anchor_val = 0.5 * st.quadratic(u_prev) + w_total(u_prev) - area * float(
            np.sum(f_k * u_prev)
        )
        final_val = diss + stored - area * float(np.sum(f_k * u_k))
        slack = anchor_val - final_val
        cum += slack
        out["k"][idx] = k
        out["t"][idx] = step.t
        out["dissipated"][idx] = diss
        out["stored"][idx] = stored
        out["work"][idx] = work
        out["drift"][idx] = drift
        out["step_slack"][idx] = slack
        out["cum_slack"][idx] = cum
        u_prev = u_k
        st_prev = st

    scale = float(
        1.0
        + abs(stored_initial)
        + np.max(np.abs(out["stored"]))
        + np.sum(np.abs(out["work"]))
        + np.sum(out["dissipated"])
    )
    ok_steps = bool(np.min(out["step_slack"]) >= -1e-10 * scale)
    ok_cum = bool(np.min(out["cum_slack"]) >= -1e-9 * scale)
    return EnergyReport(
        stored_initial=stored_initial,
        scale=scale,
        ok_steps=ok_steps,
        ok_cumulative=ok_cum,
        **out,
    )
