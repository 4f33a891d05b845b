"""Symmetric second-order operators in divergence form on the grid.

The coefficient ``A(t, x)`` couples components and derivative
directions, ``A[a, i, b, j]`` for ``m`` components and 2 directions,
and is required to satisfy the major symmetry ``A[a,i,b,j] = A[b,j,a,i]``
together with uniform ellipticity ``A xi : xi >= kappa |xi|^2``.

Discretization.  The quadratic form is assembled from staggered
quadrature points: the ``xx`` (and ``yy``) derivative pairs are
integrated over edge midpoints with one-sided differences, the mixed
pairs over cell centers with corner-averaged differences,

    B(u, v) = hx*hy * [ sum_{x-edges} A_xx(e) Dx+ u . Dx+ v
                      + sum_{y-edges} A_yy(e) Dy+ u . Dy+ v
                      + sum_{cells}   A_xy(c) Gx u . Gy v
                                    + A_yx(c) Gy u . Gx v ],

with zero ghost values outside the interior.  ``apply_operator`` is the
exact negative adjoint of this form (conservative flux differences plus
the transposed corner average), so that

    B(u, v) = -<apply_operator(u), v>      (summation by parts, exact)

holds with no boundary remainder, B is symmetric whenever A has the
major symmetry, and for the identity coefficient the operator is
identically the classic 5-point Laplacian per component.  The split
quadrature also preserves the lower bound ``B(u,u) >= kappa *
||grad u||_2^2`` for the central-difference gradient: each central
difference is the mean of the two adjacent one-sided differences, so
its square never exceeds the staggered energy (Jensen), and flipping
the sign of one derivative slot leaves the spectrum of a symmetric
coefficient unchanged, which controls the mixed terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, Grid

__all__ = [
    "CoeffField",
    "laplacian",
    "constant_anisotropic",
    "time_modulated",
    "OperatorStencil",
    "at_time",
    "apply_operator",
    "bilinear_form",
    "CoeffReport",
    "validate_coeffs",
]


def _identity_tensor(m: int) -> np.ndarray:
    return np.einsum("ab,ij->aibj", np.eye(m), np.eye(2))


def _tensor_from_matrix(matrix: np.ndarray, m: int) -> np.ndarray:
    """Reshape a (2m, 2m) matrix on the composite index (a*2 + i) to (m,2,m,2)."""
    M = np.asarray(matrix, dtype=float)
    if M.shape != (2 * m, 2 * m):
        raise ValueError(f"coefficient matrix must be {(2*m, 2*m)}, got {M.shape}")
    return M.reshape(m, 2, m, 2)


def _matrix_from_tensor(tensor: np.ndarray) -> np.ndarray:
    m = tensor.shape[0]
    return tensor.reshape(2 * m, 2 * m)


@dataclass(frozen=True, eq=False)
class CoeffField:
    """Coefficient of the divergence-form operator.

    Kinds: ``laplacian`` (identity), ``constant_anisotropic`` (constant
    symmetric positive definite tensor), ``time_modulated``
    (``(1 + epsilon*sin(omega*t)*s(x)) * A0`` with ``|epsilon| < 1`` and
    shape ``s(x, y) = sin(pi x/lx) sin(pi y/ly)``).

    ``kappa`` is the certified ellipticity constant and ``lip_t`` a
    bound on ``||d/dt A||`` (zero for autonomous kinds).
    """

    kind: str
    m: int
    base: np.ndarray  # (m, 2, m, 2), shared by all quadrature points
    kappa: float
    lip_t: float
    epsilon: float = 0.0
    omega: float = 0.0
    scalar_identity: bool = True  # base is the identity tensor

    def is_autonomous(self) -> bool:
        return self.kind != "time_modulated" or self.epsilon == 0.0

    def factor(self, t: float, x, y, grid: Grid):
        """Scalar modulation factor at time ``t`` and points ``(x, y)``."""
        if self.kind != "time_modulated":
            return np.ones_like(np.asarray(x, dtype=float))
        s = np.sin(np.pi * np.asarray(x) / grid.lx) * np.sin(np.pi * np.asarray(y) / grid.ly)
        return 1.0 + self.epsilon * np.sin(self.omega * t) * s

    def tensor_at(self, t: float, x: float, y: float, grid: Grid) -> np.ndarray:
        """Full coefficient tensor (m,2,m,2) at one space-time point."""
        return float(self.factor(t, x, y, grid)) * self.base


def laplacian(m: int = 1) -> CoeffField:
    return CoeffField(
        kind="laplacian", m=m, base=_identity_tensor(m), kappa=1.0, lip_t=0.0
    )


def constant_anisotropic(matrix, m: int = 1) -> CoeffField:
    """Constant tensor given as a (2m, 2m) matrix on the index (a*2 + i).

    The matrix must be exactly symmetric (major symmetry of the tensor)
    and positive definite; ``kappa`` is its smallest eigenvalue.
    """
    M = np.asarray(matrix, dtype=float)
    tensor = _tensor_from_matrix(M, m)
    if not np.array_equal(M, M.T):
        raise ValueError(
            "coefficient matrix is not symmetric; the divergence-form operator "
            "requires A[a,i,b,j] == A[b,j,a,i] exactly"
        )
    kappa = float(np.linalg.eigvalsh(M).min())
    if kappa <= 0:
        raise ValueError(f"coefficient matrix is not positive definite (min eig {kappa:.6g})")
    return CoeffField(
        kind="constant_anisotropic",
        m=m,
        base=tensor,
        kappa=kappa,
        lip_t=0.0,
        scalar_identity=bool(np.array_equal(M, np.eye(2 * m))),
    )


def time_modulated(epsilon: float, omega: float, base=None, m: int = 1) -> CoeffField:
    """Scalar time-space modulation of a constant base tensor."""
    if not abs(epsilon) < 1.0:
        raise ValueError(f"need |epsilon| < 1, got {epsilon}")
    if base is None:
        tensor = _identity_tensor(m)
        kappa0, norm0, scalar_id = 1.0, 1.0, True
    else:
        inner = constant_anisotropic(base, m=m)
        tensor = inner.base
        kappa0 = inner.kappa
        norm0 = float(np.linalg.norm(_matrix_from_tensor(tensor), 2))
        scalar_id = inner.scalar_identity
    return CoeffField(
        kind="time_modulated",
        m=m,
        base=tensor,
        kappa=(1.0 - abs(epsilon)) * kappa0,
        lip_t=abs(epsilon) * abs(omega) * norm0,
        epsilon=float(epsilon),
        omega=float(omega),
        scalar_identity=scalar_id,
    )


def _staggered_points(grid: Grid):
    """Quadrature point coordinates: x-edges, y-edges, cell centers."""
    hx, hy = grid.hx, grid.hy
    xe_x = hx * (np.arange(grid.nx + 1) + 0.5)
    xe_y = hy * np.arange(1, grid.ny + 1)
    ye_x = hx * np.arange(1, grid.nx + 1)
    ye_y = hy * (np.arange(grid.ny + 1) + 0.5)
    cc_x = hx * (np.arange(grid.nx + 1) + 0.5)
    cc_y = hy * (np.arange(grid.ny + 1) + 0.5)
    return (xe_x, xe_y), (ye_x, ye_y), (cc_x, cc_y)


class OperatorStencil:
    """Coefficient arrays of one operator frozen at a single time.

    Building the stencil once per time step keeps the inner solver loop
    free of coefficient evaluations.
    """

    def __init__(self, coeff: CoeffField, grid: Grid, t: float):
        self.grid = grid
        self.m = coeff.m
        self.t = float(t)
        hx, hy = grid.hx, grid.hy
        (xe_x, xe_y), (ye_x, ye_y), (cc_x, cc_y) = _staggered_points(grid)

        fx = coeff.factor(t, xe_x[None, :], xe_y[:, None], grid)  # (ny, nx+1)
        fy = coeff.factor(t, ye_x[None, :], ye_y[:, None], grid)  # (ny+1, nx)
        self.scalar = coeff.scalar_identity
        base = coeff.base
        self.axy = base[:, 0, :, 1]
        self.ayx = base[:, 1, :, 0]
        self.has_cross = bool(np.any(self.axy) or np.any(self.ayx))
        if self.scalar:
            self.fxx = np.ascontiguousarray(fx)
            self.fyy = np.ascontiguousarray(fy)
        else:
            self.axx_e = fx[:, :, None, None] * base[:, 0, :, 0]
            self.ayy_e = fy[:, :, None, None] * base[:, 1, :, 1]
        if self.has_cross:
            fc = coeff.factor(t, cc_x[None, :], cc_y[:, None], grid)  # (ny+1, nx+1)
            self.axy_c = fc[:, :, None, None] * self.axy
            self.ayx_c = fc[:, :, None, None] * self.ayx

        # Crude but sound curvature bound for step-size initialization.
        def blocknorm(i, j):
            return float(np.linalg.norm(base[:, i, :, j]))

        fmax = max(float(np.max(np.abs(fx))), float(np.max(np.abs(fy))), 1e-30)
        self.lam_bound = fmax * (
            4.0 * blocknorm(0, 0) / hx**2
            + 4.0 * blocknorm(1, 1) / hy**2
            + 4.0 * (blocknorm(0, 1) + blocknorm(1, 0)) / (hx * hy)
        )

    # -- staggered difference helpers (zero ghosts) --------------------

    def _edge_diffs(self, values: np.ndarray):
        up = np.pad(values, ((1, 1), (1, 1), (0, 0)))
        dx = (up[1:-1, 1:, :] - up[1:-1, :-1, :]) / self.grid.hx  # (ny, nx+1, m)
        dy = (up[1:, 1:-1, :] - up[:-1, 1:-1, :]) / self.grid.hy  # (ny+1, nx, m)
        return dx, dy

    def _cell_grads(self, values: np.ndarray):
        up = np.pad(values, ((1, 1), (1, 1), (0, 0)))
        gx = (up[:-1, 1:, :] + up[1:, 1:, :] - up[:-1, :-1, :] - up[1:, :-1, :]) / (
            2.0 * self.grid.hx
        )  # (ny+1, nx+1, m)
        gy = (up[1:, :-1, :] + up[1:, 1:, :] - up[:-1, :-1, :] - up[:-1, 1:, :]) / (
            2.0 * self.grid.hy
        )
        return gx, gy

    def _fluxes(self, values: np.ndarray):
        dx, dy = self._edge_diffs(values)
        if self.scalar:
            fx = self.fxx[:, :, None] * dx
            fy = self.fyy[:, :, None] * dy
        else:
            fx = np.einsum("yxab,yxa->yxb", self.axx_e, dx)
            fy = np.einsum("yxab,yxa->yxb", self.ayy_e, dy)
        return fx, fy

    # -- public operations --------------------------------------------

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Divergence-form application ``L u`` (negative semidefinite)."""
        hx, hy = self.grid.hx, self.grid.hy
        fx, fy = self._fluxes(values)
        out = (fx[:, 1:, :] - fx[:, :-1, :]) / hx
        out += (fy[1:, :, :] - fy[:-1, :, :]) / hy
        if self.has_cross:
            gx, gy = self._cell_grads(values)
            px = np.einsum("yxab,yxa->yxb", self.ayx_c, gy)
            py = np.einsum("yxab,yxa->yxb", self.axy_c, gx)
            out += (px[1:, 1:, :] + px[:-1, 1:, :] - px[1:, :-1, :] - px[:-1, :-1, :]) / (2.0 * hx)
            out += (py[1:, 1:, :] + py[1:, :-1, :] - py[:-1, 1:, :] - py[:-1, :-1, :]) / (2.0 * hy)
        return out

    def bilinear(self, u_values: np.ndarray, v_values: np.ndarray) -> float:
        """Quadrature value of ``B(u, v)``; equals ``-<apply(u), v>`` exactly."""
        ux, uy = self._edge_diffs(u_values)
        vx, vy = self._edge_diffs(v_values)
        if self.scalar:
            total = np.sum(self.fxx[:, :, None] * ux * vx) + np.sum(
                self.fyy[:, :, None] * uy * vy
            )
        else:
            total = np.einsum("yxab,yxa,yxb->", self.axx_e, ux, vx) + np.einsum(
                "yxab,yxa,yxb->", self.ayy_e, uy, vy
            )
        if self.has_cross:
            ugx, ugy = self._cell_grads(u_values)
            vgx, vgy = self._cell_grads(v_values)
            total += np.einsum("yxab,yxa,yxb->", self.axy_c, ugx, vgy)
            total += np.einsum("yxab,yxa,yxb->", self.ayx_c, ugy, vgx)
        return float(self.grid.cell_area * total)

    def quadratic(self, values: np.ndarray) -> float:
        return self.bilinear(values, values)


def at_time(coeff: CoeffField, grid: Grid, t: float) -> OperatorStencil:
    return OperatorStencil(coeff, grid, t)


def apply_operator(coeff: CoeffField, t: float, u: Field) -> Field:
    if u.m != coeff.m:
        raise ValueError(f"field has {u.m} components, coefficient expects {coeff.m}")
    out = OperatorStencil(coeff, u.grid, t).apply(u.values)
    return Field(u.grid, out)


def bilinear_form(coeff: CoeffField, t: float, u: Field, v: Field) -> float:
    if u.grid != v.grid:
        raise ValueError("fields live on different grids")
    return OperatorStencil(coeff, u.grid, t).bilinear(u.values, v.values)


@dataclass(frozen=True)
class CoeffReport:
    """Sampled coefficient diagnostics against the declared constants."""

    ok: bool
    kappa_declared: float
    kappa_observed: float
    symmetry_max_violation: float
    lip_t_declared: float
    lip_t_observed: float


def validate_coeffs(
    coeff: CoeffField,
    grid: Grid,
    t_max: float = 1.0,
    n_samples: int = 200,
    seed: int = 0,
) -> CoeffReport:
    """Sample ellipticity, symmetry and time regularity of a coefficient.

    ``kappa_observed`` is the smallest eigenvalue of the sampled
    composite-index matrices, ``lip_t_observed`` a central-difference
    estimate of ``max ||d/dt A||_2``.
    """
    rng = np.random.default_rng(seed)
    ts = rng.uniform(0.0, t_max, n_samples)
    xs = rng.uniform(0.0, grid.lx, n_samples)
    ys = rng.uniform(0.0, grid.ly, n_samples)
    dt = 1e-5 * max(t_max, 1.0)

    kappa_obs = np.inf
    sym = 0.0
    lip = 0.0
    for t, x, y in zip(ts, xs, ys):
        M = _matrix_from_tensor(coeff.tensor_at(t, x, y, grid))
        sym = max(sym, float(np.max(np.abs(M - M.T))))
        kappa_obs = min(kappa_obs, float(np.linalg.eigvalsh(0.5 * (M + M.T)).min()))
        Mp = _matrix_from_tensor(coeff.tensor_at(t + dt, x, y, grid))
        Mm = _matrix_from_tensor(coeff.tensor_at(t - dt, x, y, grid))
        lip = max(lip, float(np.linalg.norm((Mp - Mm) / (2.0 * dt), 2)))

    ok = (
        sym <= 1e-12
        and kappa_obs >= coeff.kappa - 1e-10 * max(1.0, abs(coeff.kappa))
        and lip <= coeff.lip_t + 1e-6 * max(1.0, coeff.lip_t)
    )
    return CoeffReport(
        ok=bool(ok),
        kappa_declared=coeff.kappa,
        kappa_observed=float(kappa_obs),
        symmetry_max_violation=float(sym),
        lip_t_declared=coeff.lip_t,
        lip_t_observed=float(lip),
    )
