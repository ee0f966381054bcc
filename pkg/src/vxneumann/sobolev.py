"""Discrete Sobolev pairs ``(u, g)`` with an explicit gradient surrogate ``g``."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateWeightError, ShapeMismatchError
from .grid import (Grid, ScalarField, VectorField, compact_gradient, gradient, integrate,
                   same_support, weighted_average, write_field_csv)
from .mweight import MatrixField, lq_norm
from .vxnorm import ExponentField, weighted_norm

__all__ = ["SobolevPair", "sobolev_norm", "lift", "mean_zero_project", "is_mean_zero",
           "write_pair_csv", "SCHEMES"]

SCHEMES = ("central", "compact")


@dataclass(frozen=True, eq=False)
class SobolevPair:
    """A cell field ``u`` together with a gradient surrogate ``g``.

    ``g`` lives on the cells (central scheme) or on the grid's dual mesh
    (compact scheme); it is never recomputed from ``u`` behind the caller's back.
    """

    u: ScalarField
    g: VectorField

    def __post_init__(self):
        if not isinstance(self.u.support, Grid):
            raise ShapeMismatchError("u must live on grid cells")
        if not same_support(self.g.grid, self.u.support):
            raise ShapeMismatchError("u and g belong to different grids")

    @property
    def grid(self) -> Grid:
        return self.u.support

    def scaled(self, c: float) -> "SobolevPair":
        return SobolevPair(self.u.with_values(c * self.u.values), self.g.with_values(c * self.g.values))

    def __add__(self, other: "SobolevPair") -> "SobolevPair":
        if not same_support(self.g.support, other.g.support):
            raise ShapeMismatchError("pairs use different gradient supports")
        return SobolevPair(self.u.with_values(self.u.values + other.u.values),
                           self.g.with_values(self.g.values + other.g.values))

    def __sub__(self, other: "SobolevPair") -> "SobolevPair":
        return self + other.scaled(-1.0)


def sobolev_norm(w: SobolevPair, v: ScalarField, Q: MatrixField, p: ExponentField) -> float:
    """``||u||_{L^p(v)} + ||g||_{L_Q^p}``."""
    return weighted_norm(w.u, v, p) + lq_norm(w.g, Q, p)


def lift(u: ScalarField, scheme: str = "central") -> SobolevPair:
    """Pair ``u`` with its discrete gradient."""
    if scheme == "central":
        return SobolevPair(u, gradient(u))
    if scheme == "compact":
        return SobolevPair(u, compact_gradient(u))
    raise ValueError(f"unknown gradient scheme {scheme!r}; expected one of {SCHEMES}")


def mean_zero_project(w: SobolevPair, v: ScalarField) -> SobolevPair:
    """``(u - u_{E,v}, g)``."""
    avg = weighted_average(w.u, v)
    return SobolevPair(w.u.with_values(w.u.values - avg), w.g)


def is_mean_zero(w: SobolevPair, v: ScalarField, p: ExponentField) -> bool:
    """``|int u v| <= 1e-10 ||u||_{L^p(v)} |E|`` (or ``<= 1e-14`` for ``u = 0``)."""
    if integrate(v) <= 0.0:
        raise DegenerateWeightError("weight has zero total mass")
    mass = abs(integrate(w.u.with_values(w.u.values * v.values)))
    if not np.any(w.u.values):
        return mass <= 1e-14
    return mass <= 1e-10 * weighted_norm(w.u, v, p) * w.grid.measure


def write_pair_csv(directory, w: SobolevPair, stem: str = "solution") -> tuple:
    """Write ``<stem>_u.csv`` and ``<stem>_g.csv``."""
    directory = Path(directory)
    return (write_field_csv(directory / f"{stem}_u.csv", w.u),
            write_field_csv(directory / f"{stem}_g.csv", w.g))
