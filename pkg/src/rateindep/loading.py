"""Time-dependent loading fields ``f(t, x)``.

Analytic loads are separable, ``f(t, x) = g(t) * phi(x) * e``, with the
time factor ``g``, spatial shape ``phi`` and component direction ``e``
drawn from small catalogs where every entry has a closed-form time
derivative.  That keeps the time-regularity diagnostics honest: the
mean of ``||d/dt f||_2`` over a step is integrated from the exact
derivative, not a difference quotient.

A ``sampled`` load carries explicit node values per time node for
callers that build sequences directly (restarts, reparametrization
experiments); per-step derivative means must then be supplied by the
caller if diagnostics need them.

The integrability metadata ``(a, p)`` declares the time Sobolev
exponent ``a > 1`` and spatial exponent ``p in [2, inf)`` the load is
meant to be measured in; the Hoelder diagnostics read them.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .grid import Grid, TimePartition, lp_norm

__all__ = [
    "TimeProfile",
    "time_constant",
    "time_ramp",
    "time_sine",
    "ComposedTime",
    "SpaceProfile",
    "space_sine",
    "space_bump",
    "space_uniform",
    "LoadingSpec",
    "analytic_loading",
    "sampled_loading",
    "reparametrize",
]

_TIME_NAMES = ("constant", "ramp", "sine")
_SPACE_NAMES = ("sine", "bump", "uniform")


@dataclass(frozen=True)
class TimeProfile:
    """Catalog time factor with closed-form derivative.

    ``constant``: 1; ``ramp``: rate*t; ``sine``: sin(omega*t).
    """

    name: str
    rate: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        if self.name not in _TIME_NAMES:
            raise ValueError(f"unknown time profile {self.name!r}, expected one of {_TIME_NAMES}")

    def value(self, t):
        t = np.asarray(t, dtype=float)
        if self.name == "constant":
            return np.ones_like(t)
        if self.name == "ramp":
            return self.rate * t
        return np.sin(self.omega * t)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.name == "constant":
            return np.zeros_like(t)
        if self.name == "ramp":
            return np.full_like(t, self.rate)
        return self.omega * np.cos(self.omega * t)


def time_constant() -> TimeProfile:
    return TimeProfile("constant")


def time_ramp(rate: float = 1.0) -> TimeProfile:
    return TimeProfile("ramp", rate=float(rate))


def time_sine(omega: float) -> TimeProfile:
    return TimeProfile("sine", omega=float(omega))


class ComposedTime:
    """Time factor ``g(map(t))`` for reparametrization experiments.

    ``map_deriv`` is only needed if derivative-based diagnostics run on
    the composed load.
    """

    name = "composed"

    def __init__(self, inner, map_fn, map_deriv=None):
        self.inner = inner
        self.map_fn = map_fn
        self.map_deriv = map_deriv

    def value(self, t):
        return self.inner.value(self.map_fn(np.asarray(t, dtype=float)))

    def derivative(self, t):
        if self.map_deriv is None:
            raise ValueError("composed time profile has no declared map derivative")
        t = np.asarray(t, dtype=float)
        return self.inner.derivative(self.map_fn(t)) * self.map_deriv(t)


@dataclass(frozen=True)
class SpaceProfile:
    """Catalog spatial shape.

    ``sine``: amplitude * sin(kx pi x/lx) sin(ky pi y/ly);
    ``bump``: amplitude * exp(-((x-x0)^2+(y-y0)^2)/(2 sigma^2));
    ``uniform``: amplitude.
    """

    name: str
    amplitude: float = 1.0
    kx: int = 1
    ky: int = 1
    x0: float = 0.5
    y0: float = 0.5
    sigma: float = 0.1

    def __post_init__(self):
        if self.name not in _SPACE_NAMES:
            raise ValueError(f"unknown space profile {self.name!r}, expected one of {_SPACE_NAMES}")
        if not np.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")

    def values(self, grid: Grid) -> np.ndarray:
        X, Y = grid.meshes()
        if self.name == "sine":
            return self.amplitude * (
                np.sin(self.kx * np.pi * X / grid.lx) * np.sin(self.ky * np.pi * Y / grid.ly)
            )
        if self.name == "bump":
            r2 = (X - self.x0) ** 2 + (Y - self.y0) ** 2
            return self.amplitude * np.exp(-r2 / (2.0 * self.sigma**2))
        return np.full((grid.ny, grid.nx), self.amplitude)


def space_sine(amplitude: float, kx: int = 1, ky: int = 1) -> SpaceProfile:
    return SpaceProfile("sine", amplitude=float(amplitude), kx=int(kx), ky=int(ky))


def space_bump(amplitude: float, x0: float, y0: float, sigma: float) -> SpaceProfile:
    return SpaceProfile("bump", amplitude=float(amplitude), x0=float(x0), y0=float(y0), sigma=float(sigma))


def space_uniform(amplitude: float) -> SpaceProfile:
    return SpaceProfile("uniform", amplitude=float(amplitude))


@dataclass(frozen=True, eq=False)
class LoadingSpec:
    """A load, either separable analytic or explicitly sampled.

    For the analytic kind, ``direction`` picks the component pattern of
    the vector load (defaults to the first component).  For the sampled
    kind, ``samples`` must align with the partition the problem uses.
    """

    kind: str
    a: float
    p: float
    time_profile: object | None = None
    space_profile: SpaceProfile | None = None
    direction: tuple[float, ...] | None = None
    samples: np.ndarray | None = None
    dt_means: np.ndarray | None = None
    _phi_cache: dict = dc_field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("analytic", "sampled"):
            raise ValueError(f"unknown loading kind {self.kind!r}")
        if not (np.isfinite(self.a) and self.a > 1):
            raise ValueError(f"need time exponent a > 1, got {self.a}")
        if not (np.isfinite(self.p) and 2 <= self.p):
            raise ValueError(f"need spatial exponent p in [2, inf), got {self.p}")
        if self.kind == "analytic":
            if self.time_profile is None or self.space_profile is None:
                raise ValueError("analytic loading needs time and space profiles")
        else:
            if self.samples is None:
                raise ValueError("sampled loading needs a samples array")

    # -- analytic evaluation ------------------------------------------

    def _direction(self, m: int) -> np.ndarray:
        if self.direction is None:
            e = np.zeros(m)
            e[0] = 1.0
            return e
        e = np.asarray(self.direction, dtype=float)
        if e.shape != (m,):
            raise ValueError(f"direction has shape {e.shape}, expected ({m},)")
        return e

    def _phi(self, grid: Grid, m: int) -> np.ndarray:
        key = (grid, m)
        if key not in self._phi_cache:
            shape = self.space_profile.values(grid)
            self._phi_cache[key] = shape[:, :, None] * self._direction(m)
        return self._phi_cache[key]

    def field_values(self, grid: Grid, m: int, t: float) -> np.ndarray:
        """Node values of ``f(t)`` with shape (ny, nx, m)."""
        if self.kind != "analytic":
            raise ValueError("pointwise evaluation requires an analytic loading")
        return float(self.time_profile.value(t)) * self._phi(grid, m)

    def dt_field_values(self, grid: Grid, m: int, t: float) -> np.ndarray:
        """Node values of ``d/dt f(t)`` from the closed-form derivative."""
        if self.kind != "analytic":
            raise ValueError("time derivative requires an analytic loading")
        return float(self.time_profile.derivative(t)) * self._phi(grid, m)

    # -- per-partition sequences --------------------------------------

    def sample(self, grid: Grid, m: int, partition: TimePartition) -> np.ndarray:
        """Stack of node values at all time nodes, shape (N+1, ny, nx, m)."""
        if self.kind == "sampled":
            s = np.asarray(self.samples, dtype=float)
            expected = (partition.nodes.size, grid.ny, grid.nx, m)
            if s.shape != expected:
                raise ValueError(f"sampled loading has shape {s.shape}, expected {expected}")
            if not np.all(np.isfinite(s)):
                raise ValueError("sampled loading contains non-finite values")
            return s
        g = np.asarray(self.time_profile.value(partition.nodes), dtype=float)
        return g[:, None, None, None] * self._phi(grid, m)[None, :, :, :]

    def dt_l2_means(self, grid: Grid, m: int, partition: TimePartition, n_quad: int = 8) -> np.ndarray:
        """Per-step interval means of ``||d/dt f||_2``, shape (N,).

        Gauss-Legendre quadrature of the closed-form derivative for
        analytic loads; the caller-provided ``dt_means`` for sampled
        loads (zeros if none were given).
        """
        if self.kind == "sampled":
            if self.dt_means is not None:
                d = np.asarray(self.dt_means, dtype=float)
                if d.shape != (partition.n_steps,):
                    raise ValueError(
                        f"dt_means has shape {d.shape}, expected ({partition.n_steps},)"
                    )
                return d
            return np.zeros(partition.n_steps)
        phi_norm = lp_norm(self._phi(grid, m), 2.0, grid)
        xi, wi = np.polynomial.legendre.leggauss(n_quad)
        nodes = partition.nodes
        out = np.empty(partition.n_steps)
        for k in range(partition.n_steps):
            t0, t1 = nodes[k], nodes[k + 1]
            ts = 0.5 * (t1 - t0) * xi + 0.5 * (t1 + t0)
            vals = np.abs(np.asarray(self.time_profile.derivative(ts), dtype=float))
            # mean over the interval: (1/h) * integral
            out[k] = 0.5 * float(np.sum(wi * vals)) * phi_norm
        return out


def analytic_loading(
    time_profile,
    space_profile: SpaceProfile,
    a: float = 2.0,
    p: float = 2.0,
    direction=None,
) -> LoadingSpec:
    return LoadingSpec(
        kind="analytic",
        a=float(a),
        p=float(p),
        time_profile=time_profile,
        space_profile=space_profile,
        direction=None if direction is None else tuple(float(d) for d in direction),
    )


def sampled_loading(samples, a: float = 2.0, p: float = 2.0, dt_means=None) -> LoadingSpec:
    return LoadingSpec(
        kind="sampled",
        a=float(a),
        p=float(p),
        samples=np.asarray(samples, dtype=float),
        dt_means=None if dt_means is None else np.asarray(dt_means, dtype=float),
    )


def reparametrize(loading: LoadingSpec, map_fn, map_deriv=None) -> LoadingSpec:
    """Analytic load with the time axis pre-composed by ``map_fn``."""
    if loading.kind != "analytic":
        raise ValueError("can only reparametrize analytic loads")
    return LoadingSpec(
        kind="analytic",
        a=loading.a,
        p=loading.p,
        time_profile=ComposedTime(loading.time_profile, map_fn, map_deriv),
        space_profile=loading.space_profile,
        direction=loading.direction,
    )
