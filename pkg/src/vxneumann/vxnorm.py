"""Variable-exponent Lebesgue machinery.

Exponent fields, the modular, the Luxemburg norm (by bracketed bisection),
conjugate exponents, and numerical checks of the Holder, modular/norm and
power-norm inequalities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, NumericalRangeError, ShapeMismatchError, ValidationError
from .grid import DualMesh, ScalarField, integrate, same_support

__all__ = [
    "ExponentField",
    "ExtremalExponents",
    "HOLDER_CONSTANT",
    "modular",
    "luxemburg_norm",
    "luxemburg_norm_rows",
    "weighted_norm",
    "conjugate",
    "holder_check",
    "mod_norm_bounds_check",
    "power_norm_check",
    "branch_l_b",
    "branch_p_star",
    "branch_r_star",
    "HolderReport",
    "ModNormReport",
    "PowerNormReport",
]

HOLDER_CONSTANT = 4.0
NORM_RTOL = 1e-12
MAX_BISECTIONS = 200
MAX_DOUBLINGS = 60
_TINY = 1e-300


@dataclass(frozen=True, eq=False)
class ExponentField:
    """Pointwise exponent ``p(x)``; ``np.inf`` marks cells of the infinity set."""

    support: object
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=float).reshape(-1)
        if arr.size != self.support.size:
            raise ShapeMismatchError(f"expected {self.support.size} exponents, got {arr.size}")
        if np.any(np.isnan(arr)) or np.any(arr == -np.inf):
            raise ValidationError("exponent values must be real numbers or +inf")
        finite = arr[np.isfinite(arr)]
        if finite.size and finite.min() < 1.0:
            raise ValidationError(f"exponent must satisfy p(x) >= 1, found {finite.min():g}")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def constant(cls, support, p: float) -> "ExponentField":
        return cls(support, np.full(support.size, float(p)))

    @property
    def infinite(self) -> np.ndarray:
        return np.isinf(self.values)

    @property
    def has_infinite(self) -> bool:
        return bool(self.infinite.any())

    @property
    def p_minus(self) -> float:
        fin = self.values[~self.infinite]
        return float(fin.min()) if fin.size else math.inf

    @property
    def p_plus(self) -> float:
        fin = self.values[~self.infinite]
        return float(fin.max()) if fin.size else math.inf

    @property
    def is_constant(self) -> bool:
        return not self.has_infinite and self.p_minus == self.p_plus

    @property
    def is_solver_admissible(self) -> bool:
        return (not self.has_infinite) and 1.0 < self.p_minus <= self.p_plus < math.inf

    def require_admissible(self) -> "ExponentField":
        if not self.is_solver_admissible:
            raise ValidationError(
                f"exponent must satisfy 1 < p_- <= p_+ < inf without infinite cells "
                f"(p_-={self.p_minus:g}, p_+={self.p_plus:g}, "
                f"infinite cells={int(self.infinite.sum())})")
        return self

    def on(self, support) -> "ExponentField":
        """This exponent on ``support`` (averaged onto dual samples if needed)."""
        if same_support(support, self.support):
            return self
        if isinstance(support, DualMesh) and same_support(support.grid, self.support):
            if self.has_infinite:
                raise DomainError("cannot average infinite exponents onto dual samples")
            return ExponentField(support, support.interpolation @ self.values)
        raise ShapeMismatchError("exponent field does not live on the requested support")


@dataclass(frozen=True)
class ExtremalExponents:
    """Branch exponents, each equal to ``p_-`` or ``p_+``."""

    p_star: float
    r_star: float
    l_star: float
    b_star: float


def branch_l_b(norm: float, p: ExponentField) -> tuple:
    """``(l*, b*)`` for a function of Luxemburg norm ``norm``."""
    if norm < 1.0:
        return p.p_plus, p.p_minus
    return p.p_minus, p.p_plus


def branch_p_star(g_norm: float, p: ExponentField) -> float:
    return p.p_plus if g_norm < 1.0 else p.p_minus


def branch_r_star(f_norm: float, p: ExponentField) -> float:
    return p.p_plus if f_norm >= 1.0 else p.p_minus


def _check_support(f, p):
    if not same_support(f.support, p.support):
        raise ShapeMismatchError("field and exponent live on different supports")


def _modular_abs(a: np.ndarray, pv: np.ndarray, w: np.ndarray, inf: Optional[np.ndarray]) -> float:
    with np.errstate(over="ignore", invalid="ignore"):
        if inf is not None:
            fin = ~inf
            terms = np.power(a[fin], pv[fin]) * w[fin]
            ess = float(a[inf].max()) if inf.any() else 0.0
        else:
            terms = np.power(a, pv) * w
            ess = 0.0
    if not np.all(np.isfinite(terms)) or not math.isfinite(ess):
        return math.inf
    total = math.fsum(terms) + ess
    return total if math.isfinite(total) else math.inf


def modular(f: ScalarField, p: ExponentField) -> float:
    """``sum_finite |f|^p dx + max_{inf-cells} |f|``; ``inf`` on overflow."""
    _check_support(f, p)
    inf = p.infinite if p.has_infinite else None
    return _modular_abs(np.abs(f.values), p.values, f.support.weights, inf)


def _luxemburg_abs(a, pv, w, inf, measure) -> float:
    amax = float(a.max()) if a.size else 0.0
    if amax == 0.0:
        return 0.0
    fin_p = pv[~inf] if inf is not None else pv
    p_lo = float(fin_p.min()) if fin_p.size else 1.0

    def rho(mu):
        return _modular_abs(a / mu, pv, w, inf)

    mu = max(amax * measure ** (1.0 / p_lo), _TINY)
    if rho(mu) > 1.0:
        for _ in range(MAX_DOUBLINGS):
            lo, mu = mu, mu * 2.0
            if rho(mu) <= 1.0:
                hi = mu
                break
        else:
            raise NumericalRangeError("could not bracket the Luxemburg norm from below")
    else:
        for _ in range(MAX_DOUBLINGS):
            hi, mu = mu, mu * 0.5
            if rho(mu) > 1.0:
                lo = mu
                break
        else:
            raise NumericalRangeError("could not bracket the Luxemburg norm from above")
    for _ in range(MAX_BISECTIONS):
        if hi - lo <= NORM_RTOL * hi:
            break
        mid = 0.5 * (lo + hi)
        if rho(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def luxemburg_norm(f: ScalarField, p: ExponentField) -> float:
    """The unique ``mu`` with ``modular(f / mu) = 1`` (0 for the zero field)."""
    _check_support(f, p)
    inf = p.infinite if p.has_infinite else None
    return _luxemburg_abs(np.abs(f.values), p.values, f.support.weights, inf,
                          f.support.measure)


def luxemburg_norm_rows(rows: np.ndarray, weights: np.ndarray, pv: np.ndarray) -> np.ndarray:
    """Luxemburg norms of every row of ``rows`` (finite exponents only), vectorised.

    ``weights`` and ``pv`` are shared ``(L,)`` arrays or per-row ``(K, L)``
    arrays; zero-weight entries are padding.  Same bracketing/bisection rule
    as :func:`luxemburg_norm` but with pairwise rather than exactly rounded
    summation; used for batches of test functions where a per-row Python
    loop would dominate run time.
    """
    a = np.abs(np.asarray(rows, dtype=float))
    k = a.shape[0]
    w = np.broadcast_to(np.asarray(weights, dtype=float), a.shape)
    e = np.broadcast_to(np.asarray(pv, dtype=float), a.shape)
    out = np.zeros(k)
    amax = (a * (w > 0)).max(axis=1, initial=0.0)
    live = amax > 0
    if not live.any():
        return out
    a, w, e = a[live], w[live], e[live]
    measure = w.sum(axis=1)
    p_lo = np.where(w > 0, e, np.inf).min(axis=1)

    def rho(mu):
        with np.errstate(over="ignore", invalid="ignore"):
            r = np.sum(np.power(a / mu[:, None], e) * w, axis=1)
        return np.where(np.isfinite(r), r, np.inf)

    cur = np.maximum(amax[live] * measure ** (1.0 / p_lo), _TINY)
    lo = np.zeros_like(cur)
    hi = np.zeros_like(cur)
    above = rho(cur) > 1.0
    open_ = np.ones(cur.size, dtype=bool)
    for _ in range(MAX_DOUBLINGS + 1):
        r = rho(cur)
        done_up = open_ & above & (r <= 1.0)
        done_down = open_ & ~above & (r > 1.0)
        hi[done_up] = cur[done_up]
        lo[done_up] = cur[done_up] / 2.0
        lo[done_down] = cur[done_down]
        hi[done_down] = cur[done_down] * 2.0
        open_ &= ~(done_up | done_down)
        if not open_.any():
            break
        cur = np.where(open_ & above, cur * 2.0, np.where(open_, cur * 0.5, cur))
    else:
        raise NumericalRangeError("could not bracket a batched Luxemburg norm")
    for _ in range(MAX_BISECTIONS):
        active = hi - lo > NORM_RTOL * hi
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        big = rho(mid) > 1.0
        lo = np.where(active & big, mid, lo)
        hi = np.where(active & ~big, mid, hi)
    out[live] = 0.5 * (lo + hi)
    return out


def weighted_norm(f: ScalarField, v: ScalarField, p: ExponentField) -> float:
    """``||f||_{L^p(v)} = ||f v||_{L^p}``."""
    if not same_support(f.support, v.support):
        raise ShapeMismatchError("f and v live on different supports")
    if np.any(v.values < 0):
        raise ValidationError("weight v must be non-negative")
    return luxemburg_norm(f.with_values(f.values * v.values), p)


def conjugate(p: ExponentField) -> ExponentField:
    """Pointwise ``p' = p/(p-1)`` with ``1 <-> inf``."""
    pv = p.values
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(np.isinf(pv), 1.0, np.where(pv == 1.0, np.inf, pv / (pv - 1.0)))
    return ExponentField(p.support, out)


@dataclass(frozen=True)
class HolderReport:
    lhs: float
    rhs: float
    ok: bool


def holder_check(f: ScalarField, g: ScalarField, p: ExponentField,
                 constant: float = HOLDER_CONSTANT) -> HolderReport:
    """``int |f g| <= K ||f||_p ||g||_{p'}`` with ``K = 4`` unless overridden."""
    _check_support(f, p)
    _check_support(g, p)
    lhs = integrate(f.with_values(np.abs(f.values * g.values)))
    rhs = constant * luxemburg_norm(f, p) * luxemburg_norm(g, conjugate(p))
    return HolderReport(lhs, rhs, bool(lhs <= rhs + 1e-10))


@dataclass(frozen=True)
class ModNormReport:
    norm: float
    modular: float
    lower: float
    upper: float
    ok: bool


def mod_norm_bounds_check(f: ScalarField, p: ExponentField, rtol: float = 1e-10) -> ModNormReport:
    """Sandwich the modular between powers ``p_-`` and ``p_+`` of the norm."""
    if p.has_infinite:
        raise DomainError("modular/norm bounds require an empty infinity set")
    norm = luxemburg_norm(f, p)
    rho = modular(f, p)
    if norm >= 1.0:
        lower, upper = norm ** p.p_minus, norm ** p.p_plus
    else:
        lower, upper = norm ** p.p_plus, norm ** p.p_minus
    ok = lower <= rho * (1 + rtol) + 1e-300 and rho <= upper * (1 + rtol) + 1e-300
    return ModNormReport(norm, rho, lower, upper, bool(ok))


@dataclass(frozen=True)
class PowerNormReport:
    lower: float
    mid: float
    upper: float
    l_star: float
    b_star: float
    norm: float
    ok: bool


def power_norm_check(f: ScalarField, p: ExponentField, rtol: float = 1e-10) -> PowerNormReport:
    """``||f||^{l*-1} <= || |f|^{p-1} ||_{p'} <= ||f||^{b*-1}``."""
    _check_support(f, p)
    if not p.is_solver_admissible:
        raise ValidationError("power-norm identity needs 1 < p_- <= p_+ < inf")
    norm = luxemburg_norm(f, p)
    l_star, b_star = branch_l_b(norm, p)
    powered = f.with_values(np.abs(f.values) ** (p.values - 1.0))
    mid = luxemburg_norm(powered, conjugate(p))
    lower, upper = norm ** (l_star - 1.0), norm ** (b_star - 1.0)
    ok = lower <= mid * (1 + rtol) and mid <= upper * (1 + rtol)
    return PowerNormReport(lower, mid, upper, l_star, b_star, norm, bool(ok))
