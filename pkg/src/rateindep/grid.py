"""Uniform tensor grids on an open rectangle with zero Dirichlet boundary.

Unknowns live on the interior nodes of a uniform lattice over
``(0, lx) x (0, ly)``.  The boundary ring is not stored: every operator
that needs a neighbour outside the interior uses an implicit zero ghost
value, which encodes the homogeneous Dirichlet condition once and for
all.  Node ``(i, j)`` (1-based, ``1 <= i <= nx``, ``1 <= j <= ny``) sits
at ``(i*hx, j*hy)`` with ``hx = lx/(nx+1)`` and ``hy = ly/(ny+1)``.

Arrays indexed by nodes use shape ``(ny, nx, ...)`` with the row index
``j`` outermost, matching the snapshot text format (``j`` outer, ``i``
inner).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "Grid",
    "Field",
    "TimePartition",
    "gradient",
    "hessian_interior",
    "lp_norm",
    "poincare_constant",
    "write_snapshot",
    "read_snapshot",
]


@dataclass(frozen=True)
class Grid:
    """Interior-node lattice of an open rectangle ``(0, lx) x (0, ly)``.

    Parameters
    ----------
    lx, ly : float
        Side lengths, strictly positive.
    nx, ny : int
        Interior nodes per direction, at least 3 each.
    """

    lx: float
    ly: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (np.isfinite(self.lx) and self.lx > 0):
            raise ValueError(f"lx must be finite and positive, got {self.lx}")
        if not (np.isfinite(self.ly) and self.ly > 0):
            raise ValueError(f"ly must be finite and positive, got {self.ly}")
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("nx, ny must be integers")
        if self.nx < 3 or self.ny < 3:
            raise ValueError(f"need nx, ny >= 3, got nx={self.nx}, ny={self.ny}")

    @property
    def hx(self) -> float:
        return self.lx / (self.nx + 1)

    @property
    def hy(self) -> float:
        return self.ly / (self.ny + 1)

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.lx, self.ly))

    def xs(self) -> np.ndarray:
        """Interior node x coordinates, shape ``(nx,)``."""
        return self.hx * np.arange(1, self.nx + 1)

    def ys(self) -> np.ndarray:
        """Interior node y coordinates, shape ``(ny,)``."""
        return self.hy * np.arange(1, self.ny + 1)

    def meshes(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays ``X, Y`` of shape ``(ny, nx)``."""
        X, Y = np.meshgrid(self.xs(), self.ys(), indexing="xy")
        return X, Y


def _as_node_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    a = np.asarray(values, dtype=float)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3 or a.shape[0] != grid.ny or a.shape[1] != grid.nx:
        raise ValueError(
            f"values must have shape (ny, nx[, m]) = ({grid.ny}, {grid.nx}[, m]), "
            f"got {np.asarray(values).shape}"
        )
    if a.shape[2] < 1:
        raise ValueError("need at least one component")
    return a


@dataclass(frozen=True, eq=False)
class Field:
    """Values on the interior nodes of a :class:`Grid`.

    ``values`` has shape ``(ny, nx, m)`` with ``m >= 1`` components per
    node and is stored read-only; every entry must be finite.  The zero
    boundary trace is implicit.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        a = _as_node_values(self.grid, self.values)
        if not np.all(np.isfinite(a)):
            raise ValueError("field contains non-finite entries")
        a = np.array(a, dtype=float, copy=True, order="C")
        a.flags.writeable = False
        object.__setattr__(self, "values", a)

    @property
    def m(self) -> int:
        return self.values.shape[2]

    @classmethod
    def zeros(cls, grid: Grid, m: int = 1) -> "Field":
        return cls(grid, np.zeros((grid.ny, grid.nx, m)))

    @classmethod
    def from_function(cls, grid: Grid, fn, m: int = 1) -> "Field":
        """Sample ``fn(X, Y)`` on the interior nodes.

        ``fn`` may return shape ``(ny, nx)`` (then broadcast to one
        component) or ``(ny, nx, m)``.
        """
        X, Y = grid.meshes()
        vals = np.asarray(fn(X, Y), dtype=float)
        if vals.ndim == 2:
            vals = vals[:, :, None]
        if vals.shape[2] != m:
            raise ValueError(f"function returned {vals.shape[2]} components, expected {m}")
        return cls(grid, vals)


@dataclass(frozen=True, eq=False)
class TimePartition:
    """Strictly increasing time nodes ``0 = t_0 < t_1 < ... < t_N``."""

    nodes: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(np.asarray(self.nodes, dtype=float))
        if a.ndim != 1 or a.size < 2:
            raise ValueError("need at least two time nodes")
        if a[0] != 0.0:
            raise ValueError(f"first node must be 0, got {a[0]}")
        if not np.all(np.diff(a) > 0):
            raise ValueError("time nodes must be strictly increasing")
        a.flags.writeable = False
        object.__setattr__(self, "nodes", a)

    @classmethod
    def uniform(cls, t_final: float, n_steps: int) -> "TimePartition":
        if t_final <= 0 or n_steps < 1:
            raise ValueError("need t_final > 0 and n_steps >= 1")
        return cls(np.linspace(0.0, t_final, n_steps + 1))

    @property
    def n_steps(self) -> int:
        return self.nodes.size - 1

    @property
    def t_final(self) -> float:
        return float(self.nodes[-1])

    def step_sizes(self) -> np.ndarray:
        return np.diff(self.nodes)


def _padded(u: Field) -> np.ndarray:
    """Node values with one ring of zero ghosts, shape (ny+2, nx+2, m)."""
    return np.pad(u.values, ((1, 1), (1, 1), (0, 0)))


def gradient(u: Field) -> np.ndarray:
    """Central-difference gradient, shape ``(ny, nx, m, 2)``.

    Component ``[..., 0]`` is d/dx, ``[..., 1]`` is d/dy.  Neighbours
    outside the interior are the zero ghosts, so nodes adjacent to the
    boundary see the homogeneous Dirichlet value there.  For sampled
    functions whose trace does not vanish this produces an O(1) biased
    first difference in the boundary-adjacent layer; columns with
    ``2 <= i <= nx-1`` (and rows likewise) are free of it.
    """
    up = _padded(u)
    g = np.empty(u.values.shape + (2,))
    g[..., 0] = (up[1:-1, 2:, :] - up[1:-1, :-2, :]) / (2.0 * u.grid.hx)
    g[..., 1] = (up[2:, 1:-1, :] - up[:-2, 1:-1, :]) / (2.0 * u.grid.hy)
    return g


def hessian_interior(u: Field) -> np.ndarray:
    """Second differences on the interior sub-grid, shape ``(ny-2, nx-2, m, 2, 2)``.

    Restricted to nodes ``2 <= i <= nx-1``, ``2 <= j <= ny-1`` so that no
    ghost value enters and the stencil is exact on quadratics there.
    Requires ``nx, ny >= 5`` so the sub-grid has at least a 3x3 core.
    """
    grid = u.grid
    if grid.nx < 5 or grid.ny < 5:
        raise ValueError(f"hessian_interior needs nx, ny >= 5, got {grid.nx}, {grid.ny}")
    v = u.values
    hx, hy = grid.hx, grid.hy
    core = v[1:-1, 1:-1, :]
    H = np.empty(core.shape + (2, 2))
    H[..., 0, 0] = (v[1:-1, 2:, :] - 2.0 * core + v[1:-1, :-2, :]) / hx**2
    H[..., 1, 1] = (v[2:, 1:-1, :] - 2.0 * core + v[:-2, 1:-1, :]) / hy**2
    cross = (v[2:, 2:, :] - v[2:, :-2, :] - v[:-2, 2:, :] + v[:-2, :-2, :]) / (4.0 * hx * hy)
    H[..., 0, 1] = cross
    H[..., 1, 0] = cross
    return H


def lp_norm(w: np.ndarray, p: float, grid: Grid) -> float:
    """Discrete L^p norm of per-node values.

    The first two axes of ``w`` index nodes (any sub-lattice is fine,
    e.g. the Hessian sub-grid); remaining axes are components, reduced
    with the Euclidean norm per node.  For finite ``p`` this returns
    ``(hx*hy * sum |w|^p)**(1/p)``; ``p = inf`` gives the max of the
    per-node Euclidean norms (no quadrature weight).
    """
    a = np.asarray(w, dtype=float)
    if a.ndim < 2:
        raise ValueError("expected at least two node axes")
    mags = np.sqrt(np.sum(a.reshape(a.shape[0], a.shape[1], -1) ** 2, axis=2))
    if np.isinf(p):
        return float(mags.max()) if mags.size else 0.0
    if p < 1:
        raise ValueError(f"need p >= 1, got {p}")
    return float((grid.cell_area * np.sum(mags**p)) ** (1.0 / p))


def _dirichlet_laplacian(grid: Grid) -> sp.csc_matrix:
    """Sparse 5-point Dirichlet Laplacian (positive definite convention)."""

    def second_diff(n: int, h: float) -> sp.csr_matrix:
        main = np.full(n, 2.0 / h**2)
        off = np.full(n - 1, -1.0 / h**2)
        return sp.diags([off, main, off], [-1, 0, 1], format="csr")

    tx = second_diff(grid.nx, grid.hx)
    ty = second_diff(grid.ny, grid.hy)
    ix = sp.identity(grid.nx, format="csr")
    iy = sp.identity(grid.ny, format="csr")
    return (sp.kron(iy, tx) + sp.kron(ty, ix)).tocsc()


@lru_cache(maxsize=64)
def poincare_constant(grid: Grid, tol: float = 1e-8, max_iters: int = 500) -> float:
    """Best constant in ``||w||_2 <= C ||grad w||_2`` for the 5-point stencil.

    Computed as ``1/sqrt(lambda_1)`` where ``lambda_1`` is the smallest
    eigenvalue of the 5-point Dirichlet Laplacian on ``grid``, found by
    inverse power iteration (prefactored sparse LU) to relative
    tolerance ``tol`` on the eigenvalue.
    """
    A = _dirichlet_laplacian(grid)
    solve = spla.splu(A).solve
    x = np.ones(grid.nx * grid.ny)
    x /= np.linalg.norm(x)
    lam = float(x @ (A @ x))
    for _ in range(max_iters):
        y = solve(x)
        y /= np.linalg.norm(y)
        lam_new = float(y @ (A @ y))
        done = abs(lam_new - lam) <= tol * abs(lam_new)
        x, lam = y, lam_new
        if done:
            return 1.0 / np.sqrt(lam)
    raise RuntimeError(
        f"inverse power iteration did not converge in {max_iters} iterations "
        f"(last eigenvalue {lam:.6g})"
    )


def write_snapshot(path, field: Field) -> None:
    """Write a field in the plain-text snapshot format.

    First line is ``nx ny m hx hy``; then ``nx*ny`` lines of ``m``
    values each, nodes in row-major order (``j`` outer, ``i`` inner).
    Floats are written with shortest round-trip repr, so a read
    back is bit-exact.
    """
    g = field.grid
    with open(path, "w") as fh:
        fh.write(f"{g.nx} {g.ny} {field.m} {g.hx!r} {g.hy!r}\n")
        for j in range(g.ny):
            for i in range(g.nx):
                fh.write(" ".join(repr(float(v)) for v in field.values[j, i]) + "\n")


def read_snapshot(path) -> Field:
    """Read a snapshot written by :func:`write_snapshot`.

    The grid is reconstructed from the header via ``lx = hx*(nx+1)``,
    ``ly = hy*(ny+1)``.
    """
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 5:
            raise ValueError(f"malformed snapshot header: {header}")
        nx, ny, m = int(header[0]), int(header[1]), int(header[2])
        hx, hy = float(header[3]), float(header[4])
        grid = Grid(lx=hx * (nx + 1), ly=hy * (ny + 1), nx=nx, ny=ny)
        vals = np.empty((ny, nx, m))
        for j in range(ny):
            for i in range(nx):
                row = fh.readline().split()
                if len(row) != m:
                    raise ValueError(f"snapshot row ({i}, {j}) has {len(row)} values, expected {m}")
                vals[j, i] = [float(tok) for tok in row]
    return Field(grid, vals)
