"""Positively 1-homogeneous dissipation densities and their prox maps.

Two families, both convex with closed-form proximal operators and an
explicit subdifferential, which is what the solver's optimality
certificate is built on:

``euclidean``
    ``R1(w) = c * |w|`` (Euclidean norm over components).  The prox is
    the block shrinkage ``z * max(0, 1 - tau*c/|z|)``; the
    subdifferential at 0 is the closed ball of radius ``c``.

``weighted_l1``
    ``R1(w) = sum_a c_a * |w_a|``, component-wise soft thresholding, and
    at 0 the box ``prod_a [-c_a, c_a]``.

Both prox maps return exact zeros in the dead zone, so stick/slip
decisions downstream are exact comparisons, not tolerance tests.
Conventions follow :mod:`rateindep.energy`: the last axis of a value
array indexes components, scalars mean a single component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DissipationSpec",
    "euclidean",
    "weighted_l1",
    "r1",
    "prox_r1",
    "subdiff_residual",
    "yield_bound",
]


@dataclass(frozen=True)
class DissipationSpec:
    kind: str
    c: float | tuple[float, ...]

    def __post_init__(self):
        if self.kind not in ("euclidean", "weighted_l1"):
            raise ValueError(f"unknown dissipation kind {self.kind!r}")
        if self.kind == "euclidean":
            if not (np.isscalar(self.c) and np.isfinite(self.c) and self.c > 0):
                raise ValueError(f"euclidean dissipation needs a scalar c > 0, got {self.c!r}")
        else:
            w = np.asarray(self.c, dtype=float)
            if w.ndim != 1 or w.size < 1 or not np.all(np.isfinite(w) & (w > 0)):
                raise ValueError("weighted_l1 needs a vector of positive weights")

    def weights(self) -> np.ndarray:
        return np.asarray(self.c, dtype=float)


def euclidean(c: float) -> DissipationSpec:
    return DissipationSpec(kind="euclidean", c=float(c))


def weighted_l1(weights) -> DissipationSpec:
    return DissipationSpec(kind="weighted_l1", c=tuple(float(w) for w in weights))


def _components(v) -> tuple[np.ndarray, bool]:
    a = np.asarray(v, dtype=float)
    scalar = a.ndim == 0
    if scalar:
        a = a.reshape(1)
    return a, scalar


def r1(spec: DissipationSpec, w) -> np.ndarray | float:
    """Density value, reducing the trailing component axis."""
    a, scalar = _components(w)
    if spec.kind == "euclidean":
        out = spec.c * np.sqrt(np.sum(a * a, axis=-1))
    else:
        out = np.sum(spec.weights() * np.abs(a), axis=-1)
    return float(out) if scalar else out

def prox_r1(spec: DissipationSpec, z, tau: float) -> np.ndarray:
    """Minimizer of ``tau*R1(p) + |p - z|^2/2`` per node.

    Only the product of ``tau`` with the weights enters, so rescaling
    ``(tau, c) -> (alpha*tau, c/alpha)`` leaves the result unchanged.
    """
    if tau < 0:
        raise ValueError(f"need tau >= 0, got {tau}")
    a, scalar = _components(z)
    if spec.kind == "euclidean":
        mag = np.sqrt(np.sum(a * a, axis=-1))
        scale = np.zeros_like(mag)
        np.divide(mag - tau * spec.c, mag, out=scale, where=mag > tau * spec.c)
        out = a * np.maximum(scale, 0.0)[..., None]
    else:
        thr = tau * spec.weights()
        out = np.sign(a) * np.maximum(np.abs(a) - thr, 0.0)
    return out[0] if scalar else out


def subdiff_residual(spec: DissipationSpec, g, delta) -> np.ndarray | float:
    """Euclidean distance from ``g`` to the subdifferential of R1 at ``delta``.

    Zero exactly when the force ``g`` is admissible for the rate
    ``delta``: inside the yield set where ``delta = 0`` (tested by exact
    comparison) and equal to the boundary element ``c*delta/|delta|``
    (or the component-wise signs) where it is not.
    """
    a, scalar_g = _components(g)
    d, _ = _components(delta)
    a, d = np.broadcast_arrays(a, d)
    if spec.kind == "euclidean":
        dmag = np.sqrt(np.sum(d * d, axis=-1))
        gmag = np.sqrt(np.sum(a * a, axis=-1))
        stuck = np.maximum(gmag - spec.c, 0.0)
        safe = np.where(dmag > 0.0, dmag, 1.0)
        sliding = np.sqrt(np.sum((a - spec.c * d / safe[..., None]) ** 2, axis=-1))
        out = np.where(dmag > 0.0, sliding, stuck)
    else:
        w = spec.weights()
        stuck = np.maximum(np.abs(a) - w, 0.0)
        sliding = np.abs(a - w * np.sign(d))
        per_comp = np.where(d == 0.0, stuck, sliding)
        out = np.sqrt(np.sum(per_comp * per_comp, axis=-1))
    return float(out) if scalar_g else out


def yield_bound(spec: DissipationSpec) -> float:
    """Largest Euclidean norm of an element of the yield set ``dR1(0)``.

    Used to scale force-based tolerances; equals ``c`` for the
    euclidean kind and ``|c|_2`` for weighted_l1 (corner of the box).
    """
    if spec.kind == "euclidean":
        return float(spec.c)
    return float(np.sqrt(np.sum(spec.weights() ** 2)))
