"""Bulk energy density: values, derivative, growth and convexity gates."""

import numpy as np
import pytest

from rateindep.energy import (
    custom_polynomial,
    double_well,
    dw0,
    monotonicity_deficit,
    quadratic,
    validate_convexity,
    validate_growth,
    w0,
)
from rateindep.grid import Grid


def test_double_well_frozen_values():
    spec = double_well(0.05)
    assert spec.q == 4.0
    assert spec.mu == 0.05 * 4.0
    assert spec.c_growth == 40.0  # max(2/gamma, 8*gamma)
    assert w0(spec, np.array([0.0])) == pytest.approx(0.05, rel=1e-15)
    assert w0(spec, np.array([1.0])) == 0.0
    assert w0(spec, np.array([-1.0])) == 0.0
    # DW0(v) = 4*gamma*(|v|^2 - 1)*v at v = 0.5
    assert dw0(spec, np.array([0.5]))[0] == pytest.approx(-0.075, rel=1e-14)


def test_quadratic_frozen_values():
    spec = quadratic(2.0)
    assert spec.q == 2.0
    assert spec.mu == 0.0
    assert spec.c_growth == 4.0  # max(1/gamma, 2*gamma)
    assert w0(spec, np.array([3.0])) == pytest.approx(18.0, rel=1e-15)
    assert dw0(spec, np.array([3.0]))[0] == pytest.approx(12.0, rel=1e-15)


def test_double_well_vector_argument_is_radial():
    spec = double_well(0.1)
    v = np.array([0.6, -0.8])  # |v| = 1 -> on the well circle
    assert w0(spec, v) == pytest.approx(0.0, abs=1e-15)
    assert np.allclose(dw0(spec, v), 0.0, atol=1e-15)


def test_dw0_matches_finite_differences():
    rng = np.random.default_rng(11)
    h = 1e-6
    for spec in (double_well(0.05), double_well(1.3), quadratic(0.7)):
        for m in (1, 2):
            pts = rng.uniform(-2.0, 2.0, size=(200, m))
            for v in pts:
                g = dw0(spec, v)
                for c in range(m):
                    e = np.zeros(m)
                    e[c] = h
                    fd = (w0(spec, v + e) - w0(spec, v - e)) / (2 * h)
                    assert g[c] == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_monotonicity_deficit_matches_pair_scan():
    """mu = 4*gamma is the sharp constant for the double well."""
    gamma = 0.05
    spec = double_well(gamma)
    v = np.linspace(-2.0, 2.0, 400)
    dv = dw0(spec, v[:, None])[:, 0]
    num = np.subtract.outer(dv, dv) * np.subtract.outer(v, v)
    den = np.subtract.outer(v, v) ** 2
    mask = den > 0
    worst = np.min(num[mask] / den[mask])
    assert abs(-worst - 4.0 * gamma) < 1e-3
    assert monotonicity_deficit(spec) == 4.0 * gamma


def test_monotonicity_deficit_two_components():
    gamma = 0.3
    spec = double_well(gamma)
    rng = np.random.default_rng(5)
    v = rng.uniform(-1.5, 1.5, size=(4000, 2))
    z = v + rng.uniform(-0.3, 0.3, size=(4000, 2))
    d = v - z
    norm2 = np.sum(d * d, axis=-1)
    keep = norm2 > 1e-12
    pair = np.sum((dw0(spec, v) - dw0(spec, z)) * d, axis=-1)[keep] / norm2[keep]
    assert pair.min() >= -4.0 * gamma - 1e-9


def test_validate_growth_accepts_double_well():
    rep = validate_growth(double_well(0.05))
    assert rep.ok
    assert rep.lower_slack >= -1e-12
    assert rep.upper_slack >= -1e-12
    assert rep.deriv_slack >= -1e-12
    assert rep.mono_slack >= -1e-12
    assert rep.nonneg_slack >= -1e-12


def test_custom_polynomial_rejects_negative_density():
    # p(s) = s - 1 gives W0(v) = |v|^2 - 1 < 0 near the origin
    with pytest.raises(ValueError):
        custom_polynomial((-1.0, 1.0), q=2.0, c_growth=4.0, mu=0.0)


def test_custom_polynomial_accepts_shifted_well():
    # p(s) = (s - 1)^2 is the gamma = 1 double well in disguise
    spec = custom_polynomial((1.0, -2.0, 1.0), q=4.0, c_growth=8.0, mu=4.0)
    assert w0(spec, np.array([1.0])) == pytest.approx(0.0, abs=1e-15)


def test_validate_convexity_margin_on_unit_square():
    grid = Grid(1.0, 1.0, 63, 63)
    rep = validate_convexity(double_well(0.05), grid)
    assert rep.ok
    assert rep.mu == pytest.approx(0.2, rel=1e-15)
    assert rep.mu_cp_sq == pytest.approx(rep.mu * rep.cp**2, rel=1e-15)
    assert rep.margin == pytest.approx(1.0 - rep.mu_cp_sq, rel=1e-12)
    assert 0.98 < rep.margin < 1.0


def test_validate_convexity_fails_beyond_threshold():
    grid = Grid(1.0, 1.0, 31, 31)
    from rateindep.grid import poincare_constant

    cp = poincare_constant(grid)
    gamma_bad = (1.0 + 1e-6) / (4.0 * cp * cp)
    rep = validate_convexity(double_well(gamma_bad), grid)
    assert not rep.ok
    assert rep.mu_cp_sq > 1.0


def test_energy_spec_validation():
    with pytest.raises(ValueError):
        double_well(0.0)
    with pytest.raises(ValueError):
        double_well(-1.0)
    with pytest.raises(ValueError):
        quadratic(-0.5)
