"""Symmetric positive semi-definite matrix fields and the matrix-weighted norm."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ShapeMismatchError, ValidationError
from .grid import DualMesh, ScalarField, VectorField, same_support
from .vxnorm import ExponentField, luxemburg_norm

__all__ = [
    "MatrixField",
    "EigenData",
    "eigendecompose",
    "sqrt_field",
    "gamma",
    "lq_norm",
    "quadratic_form",
    "component_norm_equivalence_check",
    "EquivalenceReport",
]

PSD_TOL = 1e-10
_JACOBI_SWEEPS = 50


@dataclass(frozen=True, eq=False)
class MatrixField:
    """A symmetric ``n x n`` matrix per sample, ``n`` the spatial dimension.

    Entries are symmetrised on construction; an asymmetry larger than
    round-off is rejected.  Eigenvalues in ``[-1e-10 max(1, lam_max), 0)``
    are clamped to zero by :func:`eigendecompose`.
    """

    support: object
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.support.dim
        arr = np.array(self.entries, dtype=float)
        if arr.shape == (n, n):
            arr = np.broadcast_to(arr, (self.support.size, n, n)).copy()
        if arr.shape != (self.support.size, n, n):
            raise ShapeMismatchError(
                f"expected entries of shape {(self.support.size, n, n)}, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("matrix entries must be finite")
        asym = np.abs(arr - arr.transpose(0, 2, 1)).max(initial=0.0)
        scale = max(1.0, float(np.abs(arr).max(initial=0.0)))
        if asym > 1e-12 * scale:
            raise ValidationError(f"matrix field is not symmetric (max |q_ij - q_ji| = {asym:g})")
        arr = 0.5 * (arr + arr.transpose(0, 2, 1))
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)
        lam_min = self.eigen.raw_min
        lam_max = self.eigen.values[:, 0]
        bad = lam_min < -PSD_TOL * np.maximum(1.0, lam_max)
        if bad.any():
            k = int(np.argmax(bad))
            raise ValidationError(
                f"matrix field is not positive semi-definite at sample {k} "
                f"(lambda_min = {lam_min[k]:g})")

    @property
    def dim(self) -> int:
        return self.support.dim

    @classmethod
    def identity(cls, support, scale: float = 1.0) -> "MatrixField":
        return cls(support, scale * np.eye(support.dim))

    @cached_property
    def eigen(self) -> "EigenData":
        return _jacobi(self.entries)

    def on(self, support) -> "MatrixField":
        """This field on ``support`` (entrywise averaged onto dual samples if needed)."""
        if same_support(support, self.support):
            return self
        if isinstance(support, DualMesh) and same_support(support.grid, self.support):
            n = self.dim
            flat = self.entries.reshape(self.support.size, n * n)
            return MatrixField(support, (support.interpolation @ flat).reshape(-1, n, n))
        raise ShapeMismatchError("matrix field does not live on the requested support")


@dataclass(frozen=True, eq=False)
class EigenData:
    """Per-sample eigenvalues (descending, clamped at 0) and eigenvectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray
    raw_min: np.ndarray = field(repr=False)


def _jacobi(a: np.ndarray) -> EigenData:
    """Cyclic Jacobi rotations applied to all samples at once."""
    a = np.array(a, dtype=float)
    nsamp, n, _ = a.shape
    u = np.broadcast_to(np.eye(n), a.shape).copy()
    for _ in range(_JACOBI_SWEEPS):
        off = sum(np.abs(a[:, i, j]).max(initial=0.0) for i in range(n) for j in range(i + 1, n))
        if off <= 1e-300:
            break
        diag_scale = np.abs(a).max(initial=0.0)
        if off <= 1e-17 * diag_scale:
            break
        for i in range(n - 1):
            for j in range(i + 1, n):
                aij = a[:, i, j]
                rot = np.abs(aij) > 0.0
                if not rot.any():
                    continue
                theta = np.zeros(nsamp)
                theta[rot] = (a[rot, j, j] - a[rot, i, i]) / (2.0 * aij[rot])
                # smaller root of t^2 + 2 theta t - 1 = 0 keeps |angle| <= pi/4;
                # for huge theta, t ~ 1/(2 theta) avoids overflow in theta^2
                big = np.abs(theta) > 1e150
                th = np.where(big, 1.0, theta)
                t = np.sign(th) / (np.abs(th) + np.sqrt(th * th + 1.0))
                t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
                t = np.where(rot, t, 0.0)
                t = np.where(rot & (theta == 0.0), 1.0, t)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                g = np.broadcast_to(np.eye(n), a.shape).copy()
                g[:, i, i] = c
                g[:, j, j] = c
                g[:, i, j] = s
                g[:, j, i] = -s
                a = np.einsum("kji,kjl,klm->kim", g, a, g)
                a[:, i, j] = 0.0
                a[:, j, i] = 0.0
                u = np.einsum("kij,kjl->kil", u, g)
    lam = np.diagonal(a, axis1=1, axis2=2).copy()
    order = np.argsort(-lam, axis=1, kind="stable")
    lam = np.take_along_axis(lam, order, axis=1)
    u = np.take_along_axis(u, order[:, None, :], axis=2)
    u = _canonical_vectors(lam, u)
    raw_min = lam[:, -1].copy()
    lam = np.where(lam < 0.0, 0.0, lam)
    lam.flags.writeable = False
    u.flags.writeable = False
    return EigenData(lam, u, raw_min)


def _canonical_vectors(lam: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Fix the order/sign convention; repeated eigenvalues use axis-basis Gram-Schmidt."""
    nsamp, n = lam.shape
    # ties are relative to the largest eigenvalue so tiny matrices keep their vectors
    scale = np.abs(lam).max(axis=1)
    for k in np.nonzero(np.any(np.abs(np.diff(lam, axis=1)) <= 1e-12 * scale[:, None], axis=1))[0]:
        start = 0
        while start < n:
            stop = start + 1
            while stop < n and abs(lam[k, stop - 1] - lam[k, stop]) <= 1e-12 * scale[k]:
                stop += 1
            if stop - start > 1:
                block = u[k][:, start:stop]
                proj = block @ block.T
                basis = []
                for e in np.eye(n):
                    w = proj @ e
                    for b in basis:
                        w = w - (b @ w) * b
                    nrm = np.linalg.norm(w)
                    if nrm > 1e-8:
                        basis.append(w / nrm)
                    if len(basis) == stop - start:
                        break
                u[k][:, start:stop] = np.column_stack(basis)
            start = stop
    # first component exceeding round-off gets a positive sign
    mag = np.abs(u)
    lead = np.argmax(mag > 1e-12, axis=1)
    signs = np.sign(np.take_along_axis(u, lead[:, None, :], axis=1))[:, 0, :]
    signs[signs == 0] = 1.0
    return u * signs[:, None, :]


def eigendecompose(Q: MatrixField) -> EigenData:
    """Per-sample eigenvalues (descending) and orthonormal eigenvectors.

    >>> import numpy as np
    >>> from vxneumann.grid import build_grid
    >>> g = build_grid([(0, 1), (0, 1)], [2, 2])
    >>> eigendecompose(MatrixField(g, np.diag([4.0, 9.0]))).values[0].tolist()
    [9.0, 4.0]
    """
    return Q.eigen


def sqrt_field(Q: MatrixField) -> MatrixField:
    """``U sqrt(D) U^T`` per sample."""
    e = Q.eigen
    root = np.einsum("kij,kj,klj->kil", e.vectors, np.sqrt(e.values), e.vectors)
    return MatrixField(Q.support, root)


def gamma(Q: MatrixField) -> ScalarField:
    """Pointwise operator norm (largest eigenvalue)."""
    return ScalarField(Q.support, Q.eigen.values[:, 0])


def quadratic_form(g: VectorField, Q: MatrixField) -> np.ndarray:
    """``g^T Q g`` per sample, clipped at zero against round-off."""
    if not same_support(g.support, Q.support):
        raise ShapeMismatchError("vector field and matrix field live on different supports")
    q = np.einsum("ki,kij,kj->k", g.values, Q.entries, g.values)
    return np.maximum(q, 0.0)


def lq_norm(g: VectorField, Q: MatrixField, p: ExponentField) -> float:
    """Luxemburg norm of ``|sqrt(Q) g| = sqrt(g^T Q g)``.

    ``Q`` and ``p`` given on the cells are moved onto ``g``'s support.
    """
    Q = Q.on(g.support)
    p = p.on(g.support)
    mag = np.sqrt(quadratic_form(g, Q))
    return luxemburg_norm(ScalarField(g.support, mag), p)


@dataclass(frozen=True)
class EquivalenceReport:
    lower: float
    mid: float
    upper: float
    components: tuple
    ok: bool


def component_norm_equivalence_check(g: VectorField, Q: MatrixField, p: ExponentField,
                                     rtol: float = 1e-10) -> EquivalenceReport:
    """``(1/n) sum_j ||g.v_j||_{p(lam_j^1/2)} <= ||g||_{L_Q} <= sum_j ||g.v_j||_{p(lam_j^1/2)}``."""
    Q = Q.on(g.support)
    p = p.on(g.support)
    e = Q.eigen
    n = g.support.dim
    comps = []
    for j in range(n):
        proj = np.einsum("ki,ki->k", g.values, e.vectors[:, :, j])
        comps.append(luxemburg_norm(ScalarField(g.support, proj * np.sqrt(e.values[:, j])), p))
    mid = lq_norm(g, Q, p)
    total = math.fsum(comps)
    lower, upper = total / n, total
    ok = lower <= mid * (1 + rtol) + 1e-300 and mid <= upper * (1 + rtol) + 1e-300
    return EquivalenceReport(lower, mid, upper, tuple(comps), bool(ok))
