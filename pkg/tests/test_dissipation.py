"""Dissipation density, prox map, and subdifferential residual."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rateindep.dissipation import (
    euclidean,
    prox_r1,
    r1,
    subdiff_residual,
    weighted_l1,
    yield_bound,
)


def test_r1_euclidean_and_weighted_values():
    assert r1(euclidean(2.0), np.array([3.0, 4.0])) == pytest.approx(10.0, rel=1e-15)
    assert r1(weighted_l1((1.0, 2.0)), np.array([3.0, -4.0])) == pytest.approx(11.0)


def test_yield_bound_values():
    assert yield_bound(euclidean(1.5)) == 1.5
    assert yield_bound(weighted_l1((3.0, 4.0))) == pytest.approx(5.0, rel=1e-15)


def test_prox_euclidean_frozen_values():
    spec = euclidean(1.0)
    out = prox_r1(spec, np.array([2.0, 0.0]), 0.5)
    assert np.allclose(out, [1.5, 0.0], atol=1e-15)
    # dead zone collapses to exact zeros, not tiny numbers
    out = prox_r1(spec, np.array([0.3, 0.0]), 0.5)
    assert out[0] == 0.0 and out[1] == 0.0


def test_prox_weighted_frozen_values():
    spec = weighted_l1((1.0, 2.0))
    out = prox_r1(spec, np.array([2.0, -2.0]), 0.5)
    assert np.allclose(out, [1.5, -1.0], atol=1e-15)


def _golden_section(fn, lo, hi, iters=200):
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    for _ in range(iters):
        if fn(c) < fn(d):
            b, d = d, c
            c = b - phi * (b - a)
        else:
            a, c = c, d
            d = a + phi * (b - a)
    return 0.5 * (a + b)


@pytest.mark.parametrize("z,tau,c", [((2.0, 1.0), 0.3, 1.0), ((0.4, -0.1), 0.7, 0.8), ((-3.0, 4.0), 1.3, 2.0)])
def test_prox_euclidean_matches_golden_section_oracle(z, tau, c):
    """The block prox reduces to a 1-d problem along z; scan it directly."""
    spec = euclidean(c)
    z = np.array(z)
    mag = np.linalg.norm(z)

    def objective(m):
        return 0.5 * (m - mag) ** 2 + tau * c * m

    m_star = _golden_section(objective, 0.0, 1.1 * mag)
    m_star = max(m_star, 0.0)
    expected = z / mag * m_star
    out = prox_r1(spec, z, tau)
    assert np.allclose(out, expected, atol=1e-8)


@settings(max_examples=60, deadline=None)
@given(
    z0=st.floats(-3, 3),
    z1=st.floats(-3, 3),
    tau=st.floats(1e-3, 2.0),
)
def test_prox_scaling_equivalence_is_exact(z0, z1, tau):
    """(tau, c) and (2 tau, c/2) give bitwise identical prox outputs."""
    z = np.array([z0, z1])
    a = prox_r1(euclidean(1.0), z, tau)
    b = prox_r1(euclidean(0.5), z, 2.0 * tau)
    assert np.array_equal(a, b)


@settings(max_examples=60, deadline=None)
@given(
    z0=st.floats(-3, 3),
    z1=st.floats(-3, 3),
    tau=st.floats(1e-3, 2.0),
    c=st.floats(0.1, 3.0),
)
def test_prox_output_certifies_its_own_inclusion(z0, z1, tau, c):
    """g = (z - prox)/tau lies in the subdifferential at the prox point."""
    spec = euclidean(c)
    z = np.array([z0, z1])
    x = prox_r1(spec, z, tau)
    g = (z - x) / tau
    assert subdiff_residual(spec, g, x) <= 1e-12 * max(1.0, c)


def test_prox_weighted_inclusion_property():
    spec = weighted_l1((1.0, 2.5))
    rng = np.random.default_rng(0)
    for _ in range(50):
        z = rng.uniform(-4, 4, size=2)
        tau = rng.uniform(0.05, 2.0)
        x = prox_r1(spec, z, tau)
        g = (z - x) / tau
        assert subdiff_residual(spec, g, x) <= 1e-12 * 4.0


def test_subdiff_residual_frozen_values():
    spec = euclidean(1.0)
    # stuck node, force outside the ball by 1
    assert subdiff_residual(spec, np.array([2.0]), np.array([0.0])) == pytest.approx(1.0)
    # stuck node, force inside the ball
    assert subdiff_residual(spec, np.array([0.7]), np.array([0.0])) == 0.0
    # moving node, force exactly on the matching boundary point
    assert subdiff_residual(spec, np.array([1.0, 0.0]), np.array([2.0, 0.0])) == 0.0
    # moving node, force too small
    assert subdiff_residual(spec, np.array([0.5, 0.0]), np.array([1.0, 0.0])) == pytest.approx(0.5)


def test_subdiff_residual_field_shapes():
    spec = euclidean(1.0)
    g = np.zeros((3, 4, 2))
    d = np.zeros((3, 4, 2))
    g[0, 0] = (3.0, 4.0)  # stuck, excess |g| - c = 4
    d[1, 1] = (1.0, 0.0)
    g[1, 1] = (0.0, 1.0)  # moving, |g - c e_x| = sqrt(2)
    res = subdiff_residual(spec, g, d)
    assert res.shape == (3, 4)
    assert res[0, 0] == pytest.approx(4.0)
    assert res[1, 1] == pytest.approx(np.sqrt(2.0))
    assert res[2, 2] == 0.0


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.0, 5.0), w0=st.floats(-2, 2), w1=st.floats(-2, 2))
def test_r1_positive_homogeneity(a, w0, w1):
    spec = euclidean(1.7)
    w = np.array([w0, w1])
    assert r1(spec, a * w) == pytest.approx(a * r1(spec, w), rel=1e-12, abs=1e-12)


def test_spec_validation():
    with pytest.raises(ValueError):
        euclidean(0.0)
    with pytest.raises(ValueError):
        euclidean(-1.0)
    with pytest.raises(ValueError):
        weighted_l1((1.0, -2.0))
    with pytest.raises(ValueError):
        weighted_l1(())
