"""Incremental minimization scheme for the quasistatic evolution.

The evolution is discretized in time by solving, at each node ``t_k``,

    u_k  =  argmin_v  int R1(v - u_{k-1}) + (1/2) grad v : A(t_k) : grad v
                          + W0(v) - f(t_k) . v  dx

with the previous iterate as the obstacle-like anchor of the
dissipation term.  Under the convexity condition ``mu * C_P^2 < 1``
each step is a convex nonsmooth problem; it is solved by proximal
gradient iteration with backtracking on the smooth part, optionally
with Nesterov momentum guarded by a restart rule that keeps the
objective non-increasing.

Two exactness properties matter downstream and are preserved here:

* the step map never sees the step size ``h`` (only node values of the
  data enter), which makes the scheme rate-independent under any
  reparametrization of the nodes that leaves the sampled data fixed;
* the prox map produces exact zeros in the stick regime, so a step
  below the yield threshold returns ``u_{k-1}`` unchanged with zero
  inner iterations.

The per-node optimality certificate is the distance of the available
force ``g = L u + f - DW0(u)`` to the subdifferential of the
dissipation density at the achieved rate; a step is accepted when the
worst node is within ``tol``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dissipation as dsp
from . import elliptic, energy
from .grid import Field, Grid, TimePartition
from .loading import LoadingSpec

__all__ = [
    "SolverConfig",
    "Problem",
    "StepResult",
    "RunResult",
    "SolverError",
    "incremental_functional",
    "step_minimize",
    "run_evolution",
]


@dataclass(frozen=True)
class SolverConfig:
    """Inner-solver knobs.

    ``tol`` defaults to ``1e-8`` times the yield bound of the
    dissipation; ``tau0`` defaults to the inverse of a curvature bound
    assembled from the operator stencil and the energy.  ``accel``
    switches Nesterov momentum on (off by default); the restart guard
    keeps descent monotone either way.  ``allow_nonconvex`` skips the
    convexity precondition check (diagnostics may then be meaningless).
    """

    tol: float | None = None
    max_iters: int = 200000
    tau0: float | None = None
    backtrack: float = 0.5
    accel: bool = False
    allow_nonconvex: bool = False

    def __post_init__(self):
        if self.tol is not None and not (np.isfinite(self.tol) and self.tol > 0):
            raise ValueError(f"need tol > 0, got {self.tol}")
        if self.max_iters < 1:
            raise ValueError("need max_iters >= 1")
        if self.tau0 is not None and not (np.isfinite(self.tau0) and self.tau0 > 0):
            raise ValueError(f"need tau0 > 0, got {self.tau0}")
        if not 0.0 < self.backtrack < 1.0:
            raise ValueError(f"need backtrack in (0, 1), got {self.backtrack}")


@dataclass(frozen=True, eq=False)
class Problem:
    """A complete instance of the evolution problem."""

    grid: Grid
    m: int
    energy: energy.EnergySpec
    dissipation: dsp.DissipationSpec
    operator: elliptic.CoeffField
    loading: LoadingSpec
    initial: Field
    time: TimePartition

    def __post_init__(self):
        if self.initial.grid != self.grid:
            raise ValueError("initial field lives on a different grid")
        if self.initial.m != self.m:
            raise ValueError(f"initial field has {self.initial.m} components, expected {self.m}")
        if self.operator.m != self.m:
            raise ValueError(f"operator has {self.operator.m} components, expected {self.m}")
        if self.dissipation.kind == "weighted_l1" and self.dissipation.weights().size != self.m:
            raise ValueError("weighted_l1 weights must have one entry per component")

    def resolved_tol(self, cfg: SolverConfig) -> float:
        if cfg.tol is not None:
            return cfg.tol
        return 1e-8 * dsp.yield_bound(self.dissipation)

    def f_at(self, k: int) -> np.ndarray:
        """Loading sample at node ``t_k``."""
        return self.loading.sample(self.grid, self.m, self.time)[k]


@dataclass(frozen=True, eq=False)
class StepResult:
    """One accepted incremental step."""

    k: int
    t: float
    u: Field
    delta: Field
    multiplier: Field
    residual: float
    inner_iters: int
    f_decrease: float


@dataclass(eq=False)
class RunResult:
    """Full trajectory with its piecewise-linear time interpolant."""

    problem: Problem
    cfg: SolverConfig
    steps: list[StepResult]
    f_samples: np.ndarray  # (N+1, ny, nx, m)

    @property
    def partition(self) -> TimePartition:
        return self.problem.time

    def iterate_values(self) -> np.ndarray:
        """Stack ``(N+1, ny, nx, m)`` of iterates including the initial one."""
        return np.stack(
            [self.problem.initial.values] + [s.u.values for s in self.steps], axis=0
        )

    def at(self, t: float) -> np.ndarray:
        """Interpolant value at time ``t``; exact at the nodes."""
        nodes = self.partition.nodes
        if not nodes[0] <= t <= nodes[-1]:
            raise ValueError(f"time {t} outside [{nodes[0]}, {nodes[-1]}]")
        k = min(int(np.searchsorted(nodes, t, side="right")) - 1, nodes.size - 2)
        th = (t - nodes[k]) / (nodes[k + 1] - nodes[k])
        stack = self.iterate_values()
        return (1.0 - th) * stack[k] + th * stack[k + 1]


class SolverError(RuntimeError):
    """Inner solver failure, carrying the step index and best residual."""

    def __init__(self, message: str, k: int, best_residual: float):
        super().__init__(message)
        self.k = k
        self.best_residual = best_residual


def _values(v) -> np.ndarray:
    return v.values if isinstance(v, Field) else np.asarray(v, dtype=float)


def incremental_functional(problem: Problem, k: int, v, u_prev, stencil=None, f_k=None) -> float:
    """Value of the step-``k`` objective at ``v`` anchored at ``u_prev``."""
    if not 1 <= k <= problem.time.n_steps:
        raise ValueError(f"step index {k} outside 1..{problem.time.n_steps}")
    vv, pv = _values(v), _values(u_prev)
    if stencil is None:
        stencil = elliptic.at_time(problem.operator, problem.grid, problem.time.nodes[k])
    if f_k is None:
        f_k = problem.loading.sample(problem.grid, problem.m, problem.time)[k]
    area = problem.grid.cell_area
    return float(
        area * np.sum(dsp.r1(problem.dissipation, vv - pv))
        + 0.5 * stencil.quadratic(vv)
        + area * np.sum(energy.w0(problem.energy, vv))
        - area * np.sum(f_k * vv)
    )


def _tau0_auto(problem: Problem, stencil, u_prev: np.ndarray) -> float:
    """Inverse curvature bound: operator part plus local energy curvature."""
    spec = problem.energy
    if spec.kind == "quadratic":
        curv = 2.0 * spec.gamma
    elif spec.kind == "double_well":
        smax2 = float(np.max(np.sum(u_prev * u_prev, axis=-1)))
        curv = 4.0 * spec.gamma * (3.0 * max(smax2, 1.0) + 1.0)
    else:
        coeffs = np.abs(np.asarray(spec.coeffs, dtype=float))
        smax2 = max(float(np.max(np.sum(u_prev * u_prev, axis=-1))), 1.0)
        # generous polynomial curvature bound on the occupied range
        degs = np.arange(coeffs.size)
        curv = float(np.sum(coeffs * (2 * degs) ** 2 * np.maximum(smax2, 1.0) ** degs)) + 1.0
    return 1.0 / (stencil.lam_bound + 2.0 * curv + 1e-30)


def step_minimize(
    problem: Problem,
    k: int,
    u_prev: Field,
    cfg: SolverConfig | None = None,
    stencil=None,
    f_k=None,
) -> StepResult:
    """Solve one incremental problem, warm-started at ``u_prev``.

    Terminates when the worst-node subdifferential residual of the
    force against the achieved rate is at most ``tol``.  Raises
    :class:`SolverError` when the iteration budget is exhausted or the
    step size collapses (the latter typically signals a violated
    convexity condition).
    """
    cfg = cfg or SolverConfig()
    grid = problem.grid
    t_k = float(problem.time.nodes[k])
    h_k = t_k - float(problem.time.nodes[k - 1])
    if stencil is None:
        stencil = elliptic.at_time(problem.operator, grid, t_k)
    if f_k is None:
        f_k = problem.loading.sample(grid, problem.m, problem.time)[k]
    tol = problem.resolved_tol(cfg)
    rspec, espec = problem.dissipation, problem.energy
    prev = u_prev.values

    def smooth_parts(v):
        """Operator application, energy value and the smooth gradient at v."""
        Av = stencil.apply(v)
        val = -0.5 * float(np.sum(Av * v)) + float(np.sum(energy.w0(espec, v))) - float(
            np.sum(f_k * v)
        )
        grad = -Av + energy.dw0(espec, v) - f_k
        return Av, val, grad

    def certificate(grad, dv):
        """Max-node residual; the available force is minus the smooth gradient."""
        g = -grad
        return float(np.max(dsp.subdiff_residual(rspec, g, dv))), g

    # Warm-start certificate: in the stick regime this exits immediately.
    A_prev, S_prev, grad_prev = smooth_parts(prev)
    res0, g0 = certificate(grad_prev, np.zeros_like(prev))
    if res0 <= tol:
        zero = Field.zeros(grid, problem.m)
        return StepResult(
            k=k,
            t=t_k,
            u=u_prev,
            delta=zero,
            multiplier=Field(grid, g0),
            residual=res0,
            inner_iters=0,
            f_decrease=0.0,
        )

    tau = cfg.tau0 if cfg.tau0 is not None else _tau0_auto(problem, stencil, prev)
    tau_floor = 1e-14 * tau
    v = prev
    phi_v = S_prev  # R1(v - prev) = 0 at the warm start
    y, Sy, grad_y = v, S_prev, grad_prev
    v_old = v
    tmom = 1.0
    best_res = res0

    it = 0
    while it < cfg.max_iters:
        it += 1
        # backtracking prox step from the extrapolation point y
        while True:
            p = dsp.prox_r1(rspec, (y - tau * grad_y) - prev, tau)
            cand = prev + p
            d = cand - y
            A_cand = stencil.apply(cand)
            S_cand = (
                -0.5 * float(np.sum(A_cand * cand))
                + float(np.sum(energy.w0(espec, cand)))
                - float(np.sum(f_k * cand))
            )
            quad = Sy + float(np.sum(grad_y * d)) + float(np.sum(d * d)) / (2.0 * tau)
            if S_cand <= quad + 1e-12 * (abs(Sy) + abs(S_cand) + 1.0):
                break
            tau *= cfg.backtrack
            if tau < tau_floor:
                raise SolverError(
                    f"step {k}: backtracking step collapsed (tau={tau:.3g}); "
                    "the incremental problem may be nonconvex",
                    k,
                    best_res,
                )
        dv = cand - prev
        phi_cand = S_cand + float(np.sum(dsp.r1(rspec, dv)))

        if cfg.accel and phi_cand > phi_v + 1e-12 * (abs(phi_v) + 1.0):
            # momentum overshoot: restart extrapolation from the current iterate
            _, Sy, grad_y = smooth_parts(v)
            y = v
            tmom = 1.0
            continue

        grad_cand = -A_cand + energy.dw0(espec, cand) - f_k
        res, g = certificate(grad_cand, dv)
        best_res = min(best_res, res)
        v_old, v, phi_v = v, cand, phi_cand
        if res <= tol:
            return StepResult(
                k=k,
                t=t_k,
                u=Field(grid, cand),
                delta=Field(grid, dv / h_k),
                multiplier=Field(grid, g),
                residual=res,
                inner_iters=it,
                f_decrease=incremental_gap(problem, S_prev, phi_cand),
            )
        if cfg.accel:
            tnew = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tmom * tmom))
            y = cand + ((tmom - 1.0) / tnew) * (cand - v_old)
            tmom = tnew
            _, Sy, grad_y = smooth_parts(y)
        else:
            y, Sy, grad_y = cand, S_cand, grad_cand

    raise SolverError(
        f"step {k}: residual {best_res:.3e} did not reach tol {tol:.3e} "
        f"within {cfg.max_iters} iterations",
        k,
        best_res,
    )


def incremental_gap(problem: Problem, phi_anchor: float, phi_final: float) -> float:
    """Objective decrease across one step in integral (area-weighted) units."""
    return problem.grid.cell_area * (phi_anchor - phi_final)


def run_evolution(problem: Problem, cfg: SolverConfig | None = None) -> RunResult:
    """March through the partition, warm-starting each step at the last.

    Checks the convexity condition up front (unless the config opts
    out) and reuses one operator stencil for autonomous coefficients.
    """
    cfg = cfg or SolverConfig()
    conv = energy.validate_convexity(problem.energy, problem.grid)
    if not conv.ok and not cfg.allow_nonconvex:
        raise ValueError(
            f"convexity condition violated: mu*C_P^2 = {conv.mu_cp_sq:.6g} >= 1 "
            "(set allow_nonconvex to attempt anyway)"
        )
    grid, m, part = problem.grid, problem.m, problem.time
    f_all = problem.loading.sample(grid, m, part)
    shared = (
        elliptic.at_time(problem.operator, grid, part.nodes[0])
        if problem.operator.is_autonomous()
        else None
    )
    steps: list[StepResult] = []
    u = problem.initial
    for k in range(1, part.n_steps + 1):
        stencil = shared if shared is not None else elliptic.at_time(
            problem.operator, grid, part.nodes[k]
        )
        step = step_minimize(problem, k, u, cfg, stencil=stencil, f_k=f_all[k])
        steps.append(step)
        u = step.u
    return RunResult(problem=problem, cfg=cfg, steps=steps, f_samples=f_all)
