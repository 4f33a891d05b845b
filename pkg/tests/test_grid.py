"""Grid, norms, derivative stencils, Poincare constant, snapshots."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rateindep.grid import (
    Field,
    Grid,
    TimePartition,
    gradient,
    hessian_interior,
    lp_norm,
    poincare_constant,
    read_snapshot,
    write_snapshot,
)

CP_LIMIT = 0.2250790790392765  # 1/(pi*sqrt(2)) on the unit square


def test_spacing_includes_boundary_offsets():
    g = Grid(1.0, 1.0, 3, 3)
    assert g.hx == 0.25 and g.hy == 0.25
    assert np.allclose(g.xs(), [0.25, 0.5, 0.75])
    assert g.cell_area == 0.0625


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(0.0, 1.0, 3, 3)
    with pytest.raises(ValueError):
        Grid(1.0, 1.0, 2, 3)


def test_field_values_are_frozen_and_copied():
    g = Grid(1.0, 1.0, 3, 3)
    a = np.zeros((3, 3, 1))
    f = Field(g, a)
    a[0, 0, 0] = 5.0  # mutating the source must not leak in
    assert f.values[0, 0, 0] == 0.0
    with pytest.raises(ValueError):
        f.values[0, 0, 0] = 1.0


def test_field_rejects_nonfinite_and_bad_shape():
    g = Grid(1.0, 1.0, 3, 3)
    with pytest.raises(ValueError):
        Field(g, np.full((3, 3, 1), np.nan))
    with pytest.raises(ValueError):
        Field(g, np.zeros((4, 3, 1)))


def test_lp_norm_of_constant_scalar_field():
    g = Grid(1.0, 1.0, 3, 3)
    w = np.ones((3, 3, 1))
    # (hx*hy*9)^(1/2) = (0.5625)^(1/2)
    assert lp_norm(w, 2.0, g) == pytest.approx(0.75, rel=1e-15)
    assert lp_norm(w, np.inf, g) == 1.0


def test_lp_norm_vector_components_use_euclidean_magnitude():
    g = Grid(1.0, 1.0, 3, 3)
    w = np.zeros((3, 3, 2))
    w[..., 0] = 3.0
    w[..., 1] = 4.0
    assert lp_norm(w, np.inf, g) == pytest.approx(5.0, rel=1e-15)
    assert lp_norm(w, 2.0, g) == pytest.approx(5.0 * 0.75, rel=1e-15)


@settings(max_examples=50, deadline=None)
@given(
    lam=st.one_of(st.just(0.0), st.floats(1e-3, 10.0), st.floats(-10.0, -1e-3)),
    p=st.sampled_from([1.0, 2.0, 4.0, np.inf]),
)
def test_lp_norm_absolute_homogeneity(lam, p):
    g = Grid(1.0, 1.0, 4, 3)
    rng = np.random.default_rng(7)
    w = rng.standard_normal((3, 4, 2))
    a = lp_norm(lam * w, p, g)
    b = abs(lam) * lp_norm(w, p, g)
    assert a == pytest.approx(b, rel=1e-12, abs=0.0)


@settings(max_examples=30, deadline=None)
@given(p=st.sampled_from([1.0, 2.0, 3.0, np.inf]), seed=st.integers(0, 1000))
def test_lp_norm_triangle_inequality(p, seed):
    g = Grid(2.0, 1.0, 5, 4)
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((4, 5, 2))
    v = rng.standard_normal((4, 5, 2))
    assert lp_norm(u + v, p, g) <= lp_norm(u, p, g) + lp_norm(v, p, g) + 1e-12


def test_gradient_exact_on_linear_field_away_from_boundary():
    g = Grid(1.0, 1.0, 9, 9)
    u = Field.from_function(g, lambda x, y: 3.0 * x)
    gr = gradient(u)
    # interior nodes see the exact slope; the first/last rows and columns
    # are biased by the implicit zero extension
    assert np.allclose(gr[1:-1, 1:-1, 0, 0], 3.0, atol=1e-12)
    assert np.allclose(gr[1:-1, 1:-1, 0, 1], 0.0, atol=1e-12)


def test_hessian_exact_on_quadratic():
    g = Grid(1.0, 1.0, 9, 9)
    u = Field.from_function(g, lambda x, y: x * x + 0.5 * y * y + x * y)
    H = hessian_interior(u)
    assert np.allclose(H[..., 0, 0, 0], 2.0, atol=1e-10)
    assert np.allclose(H[..., 0, 1, 1], 1.0, atol=1e-10)
    assert np.allclose(H[..., 0, 0, 1], 1.0, atol=1e-10)
    assert np.allclose(H[..., 0, 1, 0], 1.0, atol=1e-10)


def test_hessian_requires_five_nodes():
    g = Grid(1.0, 1.0, 4, 4)
    with pytest.raises(ValueError):
        hessian_interior(Field.zeros(g, 1))


def _cp_oracle(grid: Grid) -> float:
    """Closed-form smallest eigenvalue of the 5-point Dirichlet Laplacian."""
    lam = 0.0
    for h, length in ((grid.hx, grid.lx), (grid.hy, grid.ly)):
        lam += (4.0 / h**2) * math.sin(math.pi * h / (2.0 * length)) ** 2
    return 1.0 / math.sqrt(lam)


@pytest.mark.parametrize(
    "lx,ly,nx,ny",
    [(1.0, 1.0, 15, 15), (1.0, 1.0, 31, 31), (2.0, 1.0, 31, 15), (0.7, 1.3, 12, 20)],
)
def test_poincare_constant_matches_eigenvalue_oracle(lx, ly, nx, ny):
    g = Grid(lx, ly, nx, ny)
    assert poincare_constant(g) == pytest.approx(_cp_oracle(g), rel=1e-6)


def test_poincare_constant_continuum_limit_second_order():
    errs = []
    for n in (15, 31, 63):
        g = Grid(1.0, 1.0, n, n)
        errs.append(abs(poincare_constant(g) - CP_LIMIT))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(1.8 <= o <= 2.2 for o in orders), orders


def test_time_partition_uniform_and_validation():
    part = TimePartition.uniform(1.0, 4)
    assert part.n_steps == 4
    assert np.allclose(part.step_sizes(), 0.25)
    assert part.t_final == 1.0
    with pytest.raises(ValueError):
        TimePartition(np.array([0.0, 0.5, 0.5, 1.0]))
    with pytest.raises(ValueError):
        TimePartition(np.array([0.1, 0.5, 1.0]))


def test_snapshot_roundtrip_bitwise(tmp_path):
    g = Grid(1.3, 0.8, 6, 5)
    rng = np.random.default_rng(3)
    f = Field(g, rng.standard_normal((5, 6, 2)) * 1e-7 + rng.standard_normal((5, 6, 2)))
    path = tmp_path / "snap.txt"
    write_snapshot(path, f)
    back = read_snapshot(path)
    assert np.array_equal(back.values, f.values)
    assert back.grid.nx == g.nx and back.grid.ny == g.ny
    assert back.grid.hx == pytest.approx(g.hx, rel=1e-15)
