"""Smooth (possibly non-convex) zero-order energy densities.

A density ``W0`` enters the incremental functional through its node-wise
value and derivative.  Built-in families:

``double_well``
    ``W0(v) = gamma * (|v|^2 - 1)^2`` with growth exponent ``q = 4``.
    Its curvature is bounded below by ``-4*gamma``, and the stored
    semiconvexity deficit is exactly ``mu = 4*gamma``.

``quadratic``
    ``W0(v) = gamma * |v|^2`` with ``q = 2`` and ``mu = 0`` (convex).

``custom_polynomial``
    ``W0(v) = sum_j coeffs[j] * (|v|^2)^j`` with user-declared ``q``,
    growth constant and deficit ``mu``, accepted only after a sampled
    validation of the declared bounds.

Growth is certified in the standard coercive form

    ``|v|^q / C - C <= W0(v) <= C * (|v|^q + 1)``          (two-sided)
    ``|DW0(v)| <= C * (1 + |v|^{q-1})``                    (derivative)

with a single recorded constant ``C = c_growth``.  The constant is a
valid analytic choice for the built-in families, with no claim of
minimality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .grid import Grid, poincare_constant

__all__ = [
    "EnergySpec",
    "double_well",
    "quadratic",
    "custom_polynomial",
    "w0",
    "dw0",
    "monotonicity_deficit",
    "GrowthReport",
    "validate_growth",
    "ConvexityReport",
    "validate_convexity",
]

_KINDS = ("double_well", "quadratic", "custom_polynomial")


@dataclass(frozen=True)
class EnergySpec:
    """Parameters of one energy density.

    ``coeffs`` is only used by the ``custom_polynomial`` kind and holds
    ascending coefficients in the radial variable ``s = |v|^2``.
    """

    kind: str
    gamma: float
    q: float
    mu: float
    c_growth: float
    coeffs: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown energy kind {self.kind!r}, expected one of {_KINDS}")
        if not (np.isfinite(self.q) and self.q >= 2):
            raise ValueError(f"need growth exponent q >= 2, got {self.q}")
        if not (np.isfinite(self.mu) and self.mu >= 0):
            raise ValueError(f"need mu >= 0, got {self.mu}")
        if not (np.isfinite(self.c_growth) and self.c_growth > 0):
            raise ValueError(f"need c_growth > 0, got {self.c_growth}")


def double_well(gamma: float) -> EnergySpec:
    """Double-well density ``gamma * (|v|^2 - 1)^2``.

    ``mu`` is stored as the exact product ``4*gamma``.  The growth
    constant ``max(2/gamma, 8*gamma)`` makes the two-sided bound and the
    derivative bound hold for all ``v`` (coercivity via
    ``gamma*(s-1)^2 >= gamma*s^2/2 - gamma`` in ``s = |v|^2``).
    """
    if not (np.isfinite(gamma) and gamma > 0):
        raise ValueError(f"need gamma > 0, got {gamma}")
    return EnergySpec(
        kind="double_well",
        gamma=float(gamma),
        q=4.0,
        mu=4.0 * float(gamma),
        c_growth=max(2.0 / gamma, 8.0 * gamma),
    )


def quadratic(gamma: float) -> EnergySpec:
    """Convex quadratic density ``gamma * |v|^2``."""
    if not (np.isfinite(gamma) and gamma > 0):
        raise ValueError(f"need gamma > 0, got {gamma}")
    return EnergySpec(
        kind="quadratic",
        gamma=float(gamma),
        q=2.0,
        mu=0.0,
        c_growth=max(1.0 / gamma, 2.0 * gamma),
    )


def custom_polynomial(
    coeffs, q: float, c_growth: float, mu: float, n_samples: int = 4000
) -> EnergySpec:
    """Radial polynomial density with user-declared constants.

    ``coeffs`` are ascending in ``s = |v|^2``.  The declared growth and
    monotonicity constants are checked by sampling; construction fails
    if any sampled point violates them.
    """
    coeffs = tuple(float(c) for c in coeffs)
    if len(coeffs) < 1:
        raise ValueError("need at least one coefficient")
    spec = EnergySpec(
        kind="custom_polynomial",
        gamma=float("nan"),
        q=float(q),
        mu=float(mu),
        c_growth=float(c_growth),
        coeffs=coeffs,
    )
    report = validate_growth(spec, n_samples=n_samples)
    if not report.ok:
        raise ValueError(f"declared energy constants fail sampled validation: {report}")
    return spec


def _radial_coeffs(spec: EnergySpec) -> np.ndarray:
    if spec.kind == "double_well":
        g = spec.gamma
        return np.array([g, -2.0 * g, g])
    if spec.kind == "quadratic":
        return np.array([0.0, spec.gamma])
    return np.asarray(spec.coeffs, dtype=float)


def _squared_mag(v: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
    a = np.asarray(v, dtype=float)
    scalar = a.ndim == 0
    if scalar:
        a = a.reshape(1)
    return a, np.sum(a * a, axis=-1), scalar


def w0(spec: EnergySpec, v) -> np.ndarray | float:
    """Density value; the last axis of ``v`` indexes components.

    Scalar input is treated as a single-component vector.
    """
    a, s, scalar = _squared_mag(v)
    out = P.polyval(s, _radial_coeffs(spec))
    return float(out) if scalar else out


def dw0(spec: EnergySpec, v) -> np.ndarray | float:
    """Derivative of the density, same shape as ``v``.

    For a radial polynomial ``W0 = p(|v|^2)`` this is ``2 p'(|v|^2) v``.
    """
    a, s, scalar = _squared_mag(v)
    dp = P.polyval(s, P.polyder(_radial_coeffs(spec)))
    out = 2.0 * dp[..., None] * a
    return float(out[0]) if scalar else out


def monotonicity_deficit(spec: EnergySpec) -> float:
    """Constant ``mu`` in ``(DW0(v) - DW0(z)).(v - z) >= -mu |v - z|^2``."""
    return spec.mu


@dataclass(frozen=True)
class GrowthReport:
    """Worst sampled slacks for the declared growth/monotonicity constants.

    Slacks are nonnegative when the corresponding bound holds at every
    sampled point.
    """

    ok: bool
    lower_slack: float
    upper_slack: float
    deriv_slack: float
    mono_slack: float
    nonneg_slack: float


def validate_growth(
    spec: EnergySpec, n_samples: int = 4000, radius: float = 3.0, seed: int = 0
) -> GrowthReport:
    """Sample the declared growth and monotonicity bounds.

    Points and pairs are drawn uniformly in the ball ``|v| <= radius``
    for one and two components; the report records the minimum slack of
    each inequality over the samples.
    """
    rng = np.random.default_rng(seed)
    C, q, mu = spec.c_growth, spec.q, spec.mu

    lower = upper = deriv = mono = nonneg = np.inf
    for m in (1, 2):
        pts = rng.uniform(-radius, radius, size=(n_samples, m))
        mag = np.sqrt(np.sum(pts * pts, axis=-1))
        vals = w0(spec, pts)
        dmag = np.sqrt(np.sum(np.asarray(dw0(spec, pts)) ** 2, axis=-1))
        lower = min(lower, float(np.min(vals - (mag**q / C - C))))
        upper = min(upper, float(np.min(C * (mag**q + 1.0) - vals)))
        deriv = min(deriv, float(np.min(C * (1.0 + mag ** (q - 1.0)) - dmag)))
        nonneg = min(nonneg, float(np.min(vals)))

        z = rng.uniform(-radius, radius, size=(n_samples, m))
        dv = pts - z
        dd = np.asarray(dw0(spec, pts)) - np.asarray(dw0(spec, z))
        sq = np.sum(dv * dv, axis=-1)
        keep = sq > 0
        mono = min(
            mono,
            float(np.min(np.sum(dd * dv, axis=-1)[keep] / sq[keep] + mu)),
        )

    tol = -1e-12
    ok = all(x >= tol for x in (lower, upper, deriv, mono, nonneg))
    return GrowthReport(ok, lower, upper, deriv, mono, nonneg)


@dataclass(frozen=True)
class ConvexityReport:
    """Result of the discrete convexity condition ``mu * C_P^2 < 1``."""

    ok: bool
    mu: float
    cp: float
    mu_cp_sq: float
    margin: float


def validate_convexity(spec: EnergySpec, grid: Grid) -> ConvexityReport:
    """Check ``mu * C_P^2 < 1`` with the grid's discrete constant.

    A positive ``margin = 1 - mu*C_P^2`` certifies that the quadratic
    part of the incremental functional dominates the worst-case concave
    curvature of ``W0``, making every time step a convex problem.
    """
    cp = poincare_constant(grid)
    prod = spec.mu * cp * cp
    return ConvexityReport(
        ok=bool(prod < 1.0),
        mu=spec.mu,
        cp=cp,
        mu_cp_sq=prod,
        margin=1.0 - prod,
    )
