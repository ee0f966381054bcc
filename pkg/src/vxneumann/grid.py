"""Uniform cell-centred grids, fields on them, quadrature and discrete gradients.

Two supports carry field values:

* :class:`Grid` -- the cells of a uniform Cartesian partition of a box ``E``
  (1D or 2D), traversed in C (row-major) order.
* :class:`DualMesh` -- sample points of the compact two-point gradient used by
  the Neumann solver.  In 1D these are the interior faces; in 2D they are the
  centroids of the four triangles obtained by splitting every square of
  neighbouring cell centres along both diagonals.

Both expose ``weights`` (quadrature weights), ``centers`` and ``size`` so the
norm machinery can treat them uniformly.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, DegenerateWeightError, ShapeMismatchError

__all__ = [
    "Grid",
    "DualMesh",
    "ScalarField",
    "VectorField",
    "build_grid",
    "integrate",
    "gradient",
    "compact_gradient",
    "weighted_average",
    "same_support",
    "write_field_csv",
]


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred partition of ``prod_i [a_i, b_i]``."""

    extents: tuple
    resolution: tuple

    def __post_init__(self):
        ext = tuple((float(a), float(b)) for a, b in self.extents)
        res = tuple(int(m) for m in self.resolution)
        if len(ext) not in (1, 2) or len(res) != len(ext):
            raise ConfigurationError(
                f"grid must be 1D or 2D with one resolution per axis, got "
                f"extents={self.extents!r} resolution={self.resolution!r}")
        for (a, b), m in zip(ext, res):
            if not (math.isfinite(a) and math.isfinite(b)) or b <= a:
                raise ConfigurationError(f"extent [{a}, {b}] must satisfy b > a")
            if m < 2:
                raise ConfigurationError(f"resolution {m} is below the floor of 2 cells per axis")
        object.__setattr__(self, "extents", ext)
        object.__setattr__(self, "resolution", res)

    @property
    def dim(self) -> int:
        return len(self.resolution)

    @property
    def shape(self) -> tuple:
        return self.resolution

    @property
    def size(self) -> int:
        return int(np.prod(self.resolution))

    @property
    def spacing(self) -> tuple:
        return tuple((b - a) / m for (a, b), m in zip(self.extents, self.resolution))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def measure(self) -> float:
        return float(np.prod([b - a for a, b in self.extents]))

    @cached_property
    def axes(self) -> tuple:
        """Cell-centre coordinates along each axis."""
        return tuple(a + (np.arange(m) + 0.5) * h
                     for (a, _), m, h in zip(self.extents, self.resolution, self.spacing))

    @cached_property
    def coords(self) -> tuple:
        """Per-axis coordinate arrays of length ``size`` in traversal order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return tuple(c.ravel() for c in mesh)

    @cached_property
    def centers(self) -> np.ndarray:
        return np.column_stack(self.coords)

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.size, self.cell_volume)
        w.flags.writeable = False
        return w

    @cached_property
    def gradient_operator(self) -> sp.csr_matrix:
        """Sparse ``(size*dim, size)`` matrix of the central-difference gradient.

        Row ``k*dim + a`` gives component ``a`` at cell ``k``.
        """
        blocks = []
        for axis in range(self.dim):
            d1 = _central_1d(self.resolution[axis], self.spacing[axis])
            factors = [sp.identity(m, format="csr") for m in self.resolution]
            factors[axis] = d1
            op = factors[0]
            for fct in factors[1:]:
                op = sp.kron(op, fct, format="csr")
            blocks.append(op)
        return _interleave(blocks)

    @cached_property
    def dual(self) -> "DualMesh":
        return DualMesh(self)

    def scalar(self, values: Union[float, Callable, Sequence[float], np.ndarray]) -> "ScalarField":
        """Build a :class:`ScalarField` from a constant, an array, or ``fn(*coords)``."""
        if callable(values):
            arr = np.asarray(values(*self.coords), dtype=float)
            arr = np.broadcast_to(arr, (self.size,))
        elif np.ndim(values) == 0:
            arr = np.full(self.size, float(values))
        else:
            arr = np.asarray(values, dtype=float).reshape(-1)
        return ScalarField(self, arr)

    def vector(self, values) -> "VectorField":
        """Build a :class:`VectorField` from an ``(size, dim)`` array or ``fn(*coords)``."""
        if callable(values):
            comps = values(*self.coords)
            arr = np.column_stack([np.broadcast_to(np.asarray(c, float), (self.size,))
                                   for c in comps])
        else:
            arr = np.asarray(values, dtype=float)
            if arr.ndim == 1 and arr.size == self.dim:
                arr = np.tile(arr, (self.size, 1))
        return VectorField(self, arr)


def _central_1d(m: int, h: float) -> sp.csr_matrix:
    d = sp.lil_matrix((m, m))
    if m == 2:
        # Two cells only admit the (exact-for-affine) first-order difference.
        for i in range(2):
            d[i, 0], d[i, 1] = -1.0 / h, 1.0 / h
        return d.tocsr()
    for i in range(1, m - 1):
        d[i, i - 1] = -0.5 / h
        d[i, i + 1] = 0.5 / h
    d[0, 0:3] = np.array([[-3.0, 4.0, -1.0]]) / (2.0 * h)
    d[m - 1, m - 3:m] = np.array([[1.0, -4.0, 3.0]]) / (2.0 * h)
    return d.tocsr()


def _interleave(blocks: list) -> sp.csr_matrix:
    """Stack per-axis operators so that rows run sample-major, axis-minor."""
    dim = len(blocks)
    n_rows = blocks[0].shape[0]
    stacked = sp.vstack(blocks, format="csr")
    perm = np.arange(n_rows * dim).reshape(dim, n_rows).T.ravel()
    return stacked[perm]


@dataclass(frozen=True)
class DualMesh:
    """Gradient sample points of the compact two-point scheme on ``grid``."""

    grid: Grid

    @property
    def dim(self) -> int:
        return self.grid.dim

    @cached_property
    def _layout(self):
        g = self.grid
        if g.dim == 1:
            m, = g.resolution
            h, = g.spacing
            left = np.arange(m - 1)
            right = left + 1
            verts = np.column_stack([left, right])
            weights = np.full(m - 1, h)
            rows = np.concatenate([np.arange(m - 1)] * 2)
            cols = np.concatenate([left, right])
            vals = np.concatenate([np.full(m - 1, -1.0 / h), np.full(m - 1, 1.0 / h)])
            op = sp.csr_matrix((vals, (rows, cols)), shape=(m - 1, m))
            return verts, weights, op
        m0, m1 = g.resolution
        h0, h1 = g.spacing
        ii, jj = np.meshgrid(np.arange(m0 - 1), np.arange(m1 - 1), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        a = ii * m1 + jj
        b = (ii + 1) * m1 + jj
        c = ii * m1 + jj + 1
        d = (ii + 1) * m1 + jj + 1
        # (vertices, x-difference pair, y-difference pair) for the four triangles
        tris = [
            ((a, b, d), (a, b), (b, d)),
            ((a, c, d), (c, d), (a, c)),
            ((a, b, c), (a, b), (a, c)),
            ((b, c, d), (c, d), (b, d)),
        ]
        n_sq = a.size
        n = 4 * n_sq
        verts = np.empty((n, 3), dtype=int)
        rows, cols, vals = [], [], []
        for t, (vv, (x0, x1), (y0, y1)) in enumerate(tris):
            idx = np.arange(n_sq) * 4 + t
            verts[idx] = np.column_stack(vv)
            for comp, (lo, hi), hh in ((0, (x0, x1), h0), (1, (y0, y1), h1)):
                r = idx * 2 + comp
                rows += [r, r]
                cols += [lo, hi]
                vals += [np.full(n_sq, -1.0 / hh), np.full(n_sq, 1.0 / hh)]
        op = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                           shape=(2 * n, g.size))
        weights = np.full(n, h0 * h1 / 4.0)
        return verts, weights, op

    @property
    def vertices(self) -> np.ndarray:
        """Cell indices adjacent to each sample (used for interpolation)."""
        return self._layout[0]

    @cached_property
    def weights(self) -> np.ndarray:
        w = self._layout[1].copy()
        w.flags.writeable = False
        return w

    @property
    def gradient_operator(self) -> sp.csr_matrix:
        return self._layout[2]

    @property
    def size(self) -> int:
        return self.vertices.shape[0]

    @property
    def measure(self) -> float:
        return float(self.weights.sum())

    @cached_property
    def centers(self) -> np.ndarray:
        return self.grid.centers[self.vertices].mean(axis=1)

    @cached_property
    def interpolation(self) -> sp.csr_matrix:
        """Averaging matrix mapping cell values to sample values."""
        n, k = self.vertices.shape
        rows = np.repeat(np.arange(n), k)
        return sp.csr_matrix((np.full(n * k, 1.0 / k), (rows, self.vertices.ravel())),
                             shape=(n, self.grid.size))


Support = Union[Grid, DualMesh]


def same_support(a, b) -> bool:
    return a is b or a == b


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    support: Support
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float).reshape(-1)
        if arr.size != self.support.size:
            raise ShapeMismatchError(f"expected {self.support.size} values, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise ConfigurationError("scalar field values must be finite")
        object.__setattr__(self, "values", _frozen(arr))

    @property
    def grid(self) -> Grid:
        return self.support if isinstance(self.support, Grid) else self.support.grid

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.support, values)


@dataclass(frozen=True, eq=False)
class VectorField:
    support: Support
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        expected = (self.support.size, self.support.dim)
        if arr.shape != expected:
            raise ShapeMismatchError(f"expected shape {expected}, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ConfigurationError("vector field components must be finite")
        object.__setattr__(self, "values", _frozen(arr))

    @property
    def grid(self) -> Grid:
        return self.support if isinstance(self.support, Grid) else self.support.grid

    def with_values(self, values) -> "VectorField":
        return VectorField(self.support, values)


def build_grid(extents, resolution) -> Grid:
    """Validate ``extents``/``resolution`` and return the grid.

    >>> build_grid([(0, 1)], [4]).cell_volume
    0.25
    """
    if np.ndim(resolution) == 0:
        resolution = (resolution,)
    ext = list(extents)
    if ext and np.ndim(ext[0]) == 0:
        ext = [ext]
    return Grid(tuple(tuple(e) for e in ext), tuple(resolution))


def integrate(f: ScalarField) -> float:
    """Quadrature of ``f`` over its support, exactly rounded in traversal order."""
    return math.fsum(f.values * f.support.weights)


def gradient(u: ScalarField) -> VectorField:
    """Central differences inside, one-sided second-order differences on the boundary."""
    grid = u.support
    if not isinstance(grid, Grid):
        raise ShapeMismatchError("gradient is defined for cell fields only")
    vals = grid.gradient_operator @ u.values
    return VectorField(grid, vals.reshape(grid.size, grid.dim))


def compact_gradient(u: ScalarField) -> VectorField:
    """Two-point differences sampled on the grid's :class:`DualMesh`."""
    grid = u.support
    if not isinstance(grid, Grid):
        raise ShapeMismatchError("compact_gradient is defined for cell fields only")
    mesh = grid.dual
    vals = mesh.gradient_operator @ u.values
    return VectorField(mesh, vals.reshape(mesh.size, mesh.dim))


def weighted_average(f: ScalarField, v: ScalarField) -> float:
    """Return ``int f v / int v``."""
    if not same_support(f.support, v.support):
        raise ShapeMismatchError("f and v live on different supports")
    mass = integrate(v)
    if mass == 0.0:
        raise DegenerateWeightError("weight has zero total mass")
    return math.fsum(f.values * v.values * f.support.weights) / mass


def write_field_csv(path, f: Union[ScalarField, VectorField]) -> Path:
    """Dump ``f`` as ``cell_index, x_1[, x_2], value[, value_2]`` rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    centers = f.support.centers
    vals = f.values.reshape(f.support.size, -1)
    dim = centers.shape[1]
    header = ["cell_index"] + [f"x_{i + 1}" for i in range(dim)]
    header += ["value"] + [f"value_{i + 1}" for i in range(1, vals.shape[1])]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(f.support.size):
            writer.writerow([k] + [repr(float(c)) for c in centers[k]]
                            + [repr(float(x)) for x in vals[k]])
    return path
