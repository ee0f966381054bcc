"""JSON run configuration: field specs and their validation.

A config is one JSON object::

    {
      "schema_version": 1,
      "domain":   {"extents": [[0, 1]], "resolution": [64]},
      "exponent": {"kind": "constant", "value": 2},
      "weight":   {"kind": "constant", "value": 1},
      "matrix":   {"kind": "identity"},
      "datum":    {"kind": "cosine", "wavenumbers": [1]},
      "solver":   {"tol": null, "epsilons": [1e-2, 1e-4, 1e-6, 1e-8],
                   "max_iters": 50000, "scheme": "compact"},
      "poincare": {"restarts": 4},
      "verify":   {"instances": 200, "holder_constant": 4.0}
    }

Every section except ``schema_version`` and ``domain`` is optional.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .errors import ConfigurationError, ValidationError
from .grid import Grid, ScalarField, build_grid
from .mweight import MatrixField
from .neumann import DEFAULT_EPSILONS, ProblemData, SolverOptions
from .sobolev import SCHEMES
from .vxnorm import ExponentField

__all__ = ["SCHEMA_VERSION", "RunConfig", "load_config", "parse_config", "exponent_from_spec",
           "scalar_from_spec", "matrix_from_spec"]

SCHEMA_VERSION = 1


def _get(spec: dict, key: str, default: Any = ConfigurationError) -> Any:
    if key in spec:
        return spec[key]
    if default is ConfigurationError:
        raise ConfigurationError(f"spec of kind {spec.get('kind')!r} is missing {key!r}")
    return default


def _number(x, what: str) -> float:
    if isinstance(x, str) and x.lower() in ("inf", "infinity"):
        return math.inf
    try:
        val = float(x)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{what} must be a number, got {x!r}") from None
    if math.isnan(val):
        raise ConfigurationError(f"{what} must not be NaN")
    return val


def _table(spec: dict, grid: Grid, width: Optional[tuple] = None) -> np.ndarray:
    vals = np.asarray(_get(spec, "values"), dtype=object)
    try:
        arr = np.vectorize(lambda x: _number(x, "table entry"), otypes=[float])(vals)
    except ValueError:
        raise ConfigurationError("table values must be numeric") from None
    shape = (grid.size,) + (width or ())
    if arr.size != int(np.prod(shape)):
        raise ConfigurationError(f"table needs {int(np.prod(shape))} entries, got {arr.size}")
    return arr.reshape(shape)


def _piecewise(spec: dict, grid: Grid) -> np.ndarray:
    axis = int(_get(spec, "axis", 0))
    if not 0 <= axis < grid.dim:
        raise ConfigurationError(f"axis {axis} out of range for a {grid.dim}D grid")
    breaks = [_number(b, "breakpoint") for b in _get(spec, "breakpoints")]
    vals = [_number(v, "piece value") for v in _get(spec, "values")]
    if len(vals) != len(breaks) + 1:
        raise ConfigurationError("piecewise-axis needs one more value than breakpoints")
    if any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])):
        raise ConfigurationError("breakpoints must be strictly increasing")
    idx = np.searchsorted(np.asarray(breaks), grid.coords[axis], side="right")
    return np.asarray(vals)[idx]


def _affine(spec: dict, grid: Grid) -> np.ndarray:
    offset = _number(_get(spec, "offset"), "offset")
    slope = _get(spec, "slope")
    slope = [slope] if np.ndim(slope) == 0 else list(slope)
    if len(slope) != grid.dim:
        raise ConfigurationError(f"affine slope needs {grid.dim} entries")
    return offset + sum(_number(s, "slope") * x for s, x in zip(slope, grid.coords))


def exponent_from_spec(spec: dict, grid: Grid) -> ExponentField:
    """Kinds: ``constant``, ``affine``, ``piecewise-axis``, ``table`` (``"inf"`` allowed)."""
    kind = _get(spec, "kind")
    if kind == "constant":
        vals = np.full(grid.size, _number(_get(spec, "value"), "exponent"))
    elif kind == "affine":
        vals = _affine(spec, grid)
    elif kind == "piecewise-axis":
        vals = _piecewise(spec, grid)
    elif kind == "table":
        vals = _table(spec, grid)
    else:
        raise ConfigurationError(f"unknown exponent kind {kind!r}")
    return ExponentField(grid, vals)


def scalar_from_spec(spec: dict, grid: Grid) -> ScalarField:
    """Kinds: ``constant``, ``affine``, ``piecewise-axis``, ``cosine``, ``table``.

    ``cosine`` is ``amplitude * prod_i cos(pi k_i (x_i - a_i) / (b_i - a_i))``.
    """
    kind = _get(spec, "kind")
    if kind == "constant":
        vals = np.full(grid.size, _number(_get(spec, "value"), "value"))
    elif kind == "affine":
        vals = _affine(spec, grid)
    elif kind == "piecewise-axis":
        vals = _piecewise(spec, grid)
    elif kind == "cosine":
        ks = _get(spec, "wavenumbers")
        ks = [ks] if np.ndim(ks) == 0 else list(ks)
        if len(ks) != grid.dim:
            raise ConfigurationError(f"cosine needs {grid.dim} wavenumbers")
        vals = np.full(grid.size, _number(_get(spec, "amplitude", 1.0), "amplitude"))
        for k, x, (a, b) in zip(ks, grid.coords, grid.extents):
            vals = vals * np.cos(np.pi * _number(k, "wavenumber") * (x - a) / (b - a))
    elif kind == "table":
        vals = _table(spec, grid)
    else:
        raise ConfigurationError(f"unknown scalar field kind {kind!r}")
    if not np.all(np.isfinite(vals)):
        raise ValidationError("scalar field values must be finite")
    return ScalarField(grid, vals)


def matrix_from_spec(spec: dict, grid: Grid) -> MatrixField:
    """Kinds: ``identity``, ``diagonal``, ``constant-matrix``, ``radial-degenerate``, ``table``.

    ``radial-degenerate`` has eigenvalue ``|x - x0|^alpha`` along ``x - x0`` and
    ``lambda_max`` (default 1) across it; in 1D it is the scalar ``|x - x0|^alpha``.
    """
    kind = _get(spec, "kind")
    n = grid.dim
    if kind == "identity":
        return MatrixField.identity(grid, _number(_get(spec, "scale", 1.0), "scale"))
    if kind == "diagonal":
        d = [_number(x, "diagonal entry") for x in _get(spec, "values")]
        if len(d) != n:
            raise ConfigurationError(f"diagonal needs {n} entries")
        return MatrixField(grid, np.diag(d))
    if kind == "constant-matrix":
        m = np.asarray(_get(spec, "matrix"), dtype=float)
        if m.shape != (n, n):
            raise ConfigurationError(f"constant-matrix needs a {n}x{n} matrix")
        return MatrixField(grid, m)
    if kind == "radial-degenerate":
        x0 = np.asarray(_get(spec, "center"), dtype=float).reshape(-1)
        if x0.size != n:
            raise ConfigurationError(f"center needs {n} coordinates")
        alpha = _number(_get(spec, "alpha"), "alpha")
        if alpha < 0:
            raise ConfigurationError("alpha must be non-negative")
        lam_max = _number(_get(spec, "lambda_max", 1.0), "lambda_max")
        rel = grid.centers - x0
        r = np.linalg.norm(rel, axis=1)
        lam_r = r ** alpha
        if n == 1:
            return MatrixField(grid, lam_r.reshape(-1, 1, 1))
        with np.errstate(invalid="ignore", divide="ignore"):
            rhat = np.where(r[:, None] > 0, rel / r[:, None], np.eye(n)[0])
        outer = np.einsum("ki,kj->kij", rhat, rhat)
        ent = lam_max * (np.eye(n) - outer) + lam_r[:, None, None] * outer
        return MatrixField(grid, ent)
    if kind == "table":
        return MatrixField(grid, _table(spec, grid, (n, n)))
    raise ConfigurationError(f"unknown matrix kind {kind!r}")


@dataclass
class RunConfig:
    grid: Grid
    exponent: ExponentField
    weight: ScalarField
    matrix: MatrixField
    datum: ScalarField
    solver: SolverOptions
    scheme: str = "compact"
    restarts: int = 4
    verify: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def problem(self) -> ProblemData:
        """Solver data; raises ``ValidationError`` for inadmissible exponents."""
        return ProblemData(self.grid, self.exponent, self.weight, self.matrix, self.datum,
                           self.scheme)


def parse_config(doc: dict, tol: Optional[float] = None) -> RunConfig:
    """Validate every spec in ``doc`` before anything is computed."""
    if not isinstance(doc, dict):
        raise ConfigurationError("config must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigurationError(f"unsupported schema_version {version!r}; expected {SCHEMA_VERSION}")
    dom = doc.get("domain")
    if not isinstance(dom, dict):
        raise ConfigurationError("config needs a 'domain' object")
    try:
        grid = build_grid(_get(dom, "extents"), _get(dom, "resolution"))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"bad domain: {exc}") from None
    p = exponent_from_spec(doc.get("exponent", {"kind": "constant", "value": 2}), grid)
    v = scalar_from_spec(doc.get("weight", {"kind": "constant", "value": 1}), grid)
    Q = matrix_from_spec(doc.get("matrix", {"kind": "identity"}), grid)
    f = scalar_from_spec(doc.get("datum", {"kind": "constant", "value": 0}), grid)
    sol = doc.get("solver", {})
    scheme = sol.get("scheme", "compact")
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown gradient scheme {scheme!r}")
    eps = tuple(_number(e, "epsilon") for e in sol.get("epsilons", DEFAULT_EPSILONS))
    if any(e < 0 for e in eps):
        raise ConfigurationError("epsilons must be non-negative")
    tol_value = tol if tol is not None else sol.get("tol")
    if tol_value is not None:
        tol_value = _number(tol_value, "tol")
        if not tol_value > 0:
            raise ConfigurationError("tol must be positive")
    max_iters = int(sol.get("max_iters", 50_000))
    if max_iters < 1:
        raise ConfigurationError("max_iters must be at least 1")
    restarts = int(doc.get("poincare", {}).get("restarts", 4))
    if restarts < 1:
        raise ConfigurationError("restarts must be at least 1")
    return RunConfig(grid, p, v, Q, f, SolverOptions(tol_value, eps, max_iters), scheme,
                     restarts, dict(doc.get("verify", {})), doc)


def load_config(path, tol: Optional[float] = None) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(doc, tol)
