"""Seeded battery of every inequality the toolkit checks, reported with worst-case margins.

A margin is ``(rhs - lhs) / max(|lhs|, |rhs|)`` for ``lhs <= rhs``: negative
means violated.  Reports contain no timings so that a fixed seed gives a
byte-identical JSON document.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .grid import Grid, VectorField, build_grid
from .mweight import MatrixField, component_norm_equivalence_check
from .neumann import (ProblemData, SolverOptions, coercivity_check, hemicontinuity_check,
                      monotonicity_check, random_smooth_field, regularity_check, solve)
from .poincare import (average_equivalence_check, estimate_C0, neumann_eigen_oracle,
                       neumann_implies_poincare_check)
from .vxnorm import (HOLDER_CONSTANT, ExponentField, holder_check, luxemburg_norm,
                     mod_norm_bounds_check, modular, power_norm_check, weighted_norm)

__all__ = ["random_grid", "random_exponent", "random_field", "random_psd", "margin",
           "run_battery", "CheckResult"]


def margin(lhs: float, rhs: float) -> float:
    scale = max(abs(lhs), abs(rhs))
    return 0.0 if scale == 0.0 else (rhs - lhs) / scale


def random_grid(rng: np.random.Generator, dim: Optional[int] = None) -> Grid:
    dim = dim or int(rng.integers(1, 3))
    if dim == 1:
        a = rng.uniform(-1, 1)
        return build_grid([(a, a + rng.uniform(0.2, 3.0))], [int(rng.integers(4, 40))])
    ext = []
    for _ in range(2):
        a = rng.uniform(-1, 1)
        ext.append((a, a + rng.uniform(0.2, 3.0)))
    return build_grid(ext, [int(rng.integers(3, 9)), int(rng.integers(3, 9))])


def random_exponent(rng: np.random.Generator, grid: Grid, lo: float = 1.1,
                    hi: float = 6.0) -> ExponentField:
    """Constant, smooth, or piecewise-constant exponents in ``[lo, hi]``."""
    kind = rng.integers(3)
    if kind == 0:
        vals = np.full(grid.size, rng.uniform(lo, hi))
    elif kind == 1:
        s = random_smooth_field(grid, rng, modes=3)
        s = (s - s.min()) / max(np.ptp(s), 1e-12)
        a, b = np.sort(rng.uniform(lo, hi, 2))
        vals = a + (b - a) * s
    else:
        vals = rng.uniform(lo, hi, grid.size)
    return ExponentField(grid, np.clip(vals, lo, hi))


def random_field(rng: np.random.Generator, grid: Grid, support=None) -> np.ndarray:
    """Values with random sign pattern, sparsity and magnitude (``10^-3 .. 10^3``)."""
    n = (support or grid).size
    vals = rng.normal(size=n) * 10.0 ** rng.uniform(-3, 3)
    if rng.random() < 0.3:
        vals[rng.random(n) < 0.5] = 0.0
    if not np.any(vals):
        vals[0] = 1.0
    return vals


def random_psd(rng: np.random.Generator, support, degenerate: bool = False) -> MatrixField:
    n = support.dim
    size = support.size
    a = rng.normal(size=(size, n, n))
    q = np.einsum("kij,klj->kil", a, a)
    if degenerate and n > 1:
        # a zero eigenvalue on half of the samples
        half = support.centers[:, 0] < np.median(support.centers[:, 0])
        lam, vec = np.linalg.eigh(q[half])
        lam[:, 0] = 0.0
        q[half] = np.einsum("kij,kj,klj->kil", vec, lam, vec)
        q = 0.5 * (q + q.transpose(0, 2, 1))
    elif degenerate:
        half = support.centers[:, 0] < np.median(support.centers[:, 0])
        q[half] = 0.0
    return MatrixField(support, q)


@dataclass
class CheckResult:
    name: str
    instances: int
    failures: int
    worst_margin: float
    detail: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict:
        out = {"name": self.name, "ok": self.ok, "instances": self.instances,
               "failures": self.failures, "worst_margin": self.worst_margin}
        if self.detail:
            out["detail"] = self.detail
        return out


class _Tally:
    def __init__(self, name: str):
        self.name = name
        self.n = 0
        self.fail = 0
        self.worst = math.inf

    def add(self, ok: bool, m: float):
        self.n += 1
        self.fail += 0 if ok else 1
        self.worst = min(self.worst, m)

    def result(self, detail=None) -> CheckResult:
        return CheckResult(self.name, self.n, self.fail, self.worst if self.n else 0.0, detail)


def _norm_battery(rng, n: int, holder_constant: float) -> list:
    homo, tri, normed, const = (_Tally("luxemburg_homogeneity"), _Tally("luxemburg_triangle"),
                                _Tally("normalized_modular"), _Tally("constant_exponent_agreement"))
    hold, mod, powr, equiv = (_Tally("holder"), _Tally("modular_norm_sandwich"),
                              _Tally("power_norm_sandwich"), _Tally("component_norm_equivalence"))
    for _ in range(n):
        grid = random_grid(rng)
        p = random_exponent(rng, grid)
        f = grid.scalar(random_field(rng, grid))
        h = grid.scalar(random_field(rng, grid))
        nf, nh = luxemburg_norm(f, p), luxemburg_norm(h, p)
        c = rng.normal() * 10.0 ** rng.uniform(-2, 2)
        ncf = luxemburg_norm(f.with_values(c * f.values), p)
        err = abs(ncf - abs(c) * nf)
        homo.add(err <= 1e-10 * abs(c) * nf, -err / (abs(c) * nf))
        nsum = luxemburg_norm(f.with_values(f.values + h.values), p)
        tri.add(nsum <= nf + nh + 1e-10 * (nf + nh), margin(nsum, nf + nh))
        rho = modular(f.with_values(f.values / nf), p)
        normed.add(abs(rho - 1.0) <= 1e-10, -abs(rho - 1.0))
        p0 = float(rng.choice([1.5, 2.0, 3.0, 7.0]))
        pc = ExponentField.constant(grid, p0)
        exact = math.fsum(np.abs(f.values) ** p0 * grid.weights) ** (1.0 / p0)
        rel = abs(luxemburg_norm(f, pc) - exact) / exact
        const.add(rel <= 1e-10, -rel)
        r = holder_check(f, h, p, holder_constant)
        hold.add(r.ok, margin(r.lhs, r.rhs))
        scale = 10.0 ** rng.uniform(-1, 1)
        r2 = mod_norm_bounds_check(f.with_values(f.values / nf * scale), p)
        mod.add(r2.ok, min(margin(r2.lower, r2.modular), margin(r2.modular, r2.upper)))
        r3 = power_norm_check(f.with_values(f.values / nf * scale), p)
        powr.add(r3.ok, min(margin(r3.lower, r3.mid), margin(r3.mid, r3.upper)))
        gvals = np.column_stack([random_field(rng, grid) for _ in range(grid.dim)])
        Q = random_psd(rng, grid, degenerate=bool(rng.random() < 0.3))
        r4 = component_norm_equivalence_check(VectorField(grid, gvals), Q, p)
        equiv.add(r4.ok, min(margin(r4.lower, r4.mid), margin(r4.mid, r4.upper)))
    return [t.result() for t in (homo, tri, normed, const, hold, mod, powr, equiv)]


def _interval_problem(p_fn: Callable, m: int, f=None, v=None, Q=1.0) -> ProblemData:
    g = build_grid([(0.0, 1.0)], [m])
    x = g.coords[0]
    fv = g.scalar(0.0) if f is None else g.scalar(f(x))
    vv = g.scalar(1.0) if v is None else g.scalar(v(x))
    return ProblemData(g, ExponentField(g, np.broadcast_to(p_fn(x), (m,))), vv,
                       MatrixField.identity(g, Q), fv)


def _minty_battery(rng, trials: int) -> list:
    out = []
    g = build_grid([(0.0, 1.0), (0.0, 1.0)], [8, 8])
    x, y = g.coords
    Q = random_psd(rng, g, degenerate=True)
    data = ProblemData(g, ExponentField(g, 1.2 + 3.0 * x * y), g.scalar(1.0 + x), Q,
                       g.scalar(np.cos(np.pi * x)))
    mono = monotonicity_check(data, trials, rng)
    out.append(CheckResult("monotonicity", mono["trials"], mono["failures"],
                           mono["worst_normalized"]))
    hemi = _Tally("hemicontinuity")
    slopes = {}
    for p0 in (1.5, 3.0):
        d = _interval_problem(lambda s: p0 + 0 * s, 32)
        u = d.lift(d.grid.scalar(random_smooth_field(d.grid, rng)))
        w = d.lift(d.grid.scalar(random_smooth_field(d.grid, rng)))
        r = hemicontinuity_check(d, u, w, float(rng.uniform(-1, 1)))
        slopes[str(p0)] = r["slope"]
        hemi.add(r["ok"], r["slope"] - r["required_slope"])
    out.append(hemi.result({"slopes": slopes}))
    d = _interval_problem(lambda s: 2.0 + s, 32, f=lambda s: np.cos(np.pi * s) + s,
                          v=lambda s: 1.0 + s)
    c0 = estimate_C0(d, 3, seed=int(rng.integers(2**31))).C0_lower
    coer = coercivity_check(d, max(10, trials // 10), rng, c0)
    out.append(CheckResult("coercivity", coer["samples"], coer["failures"],
                           min(coer["worst_lower_margin"], coer["worst_gap_margin"]),
                           {"lambda": coer["lambda"], "C0": c0}))
    return out


def _poincare_battery(rng) -> list:
    out = []
    d = _interval_problem(lambda s: 2.0 + 0 * s, 64)
    est = estimate_C0(d, 3, seed=int(rng.integers(2**31)))
    oracle = neumann_eigen_oracle(d)
    rel = abs(est.C0_lower - oracle) / oracle
    out.append(CheckResult("poincare_estimate_vs_eigen_oracle", 1, int(rel > 1e-2), 1e-2 - rel,
                           {"C0_lower": est.C0_lower, "oracle": oracle,
                            "inverse_pi": 1.0 / math.pi}))
    d4 = d.with_matrix(MatrixField.identity(d.grid, 4.0))
    est4 = estimate_C0(d4, 3, seed=int(rng.integers(2**31)))
    rel4 = abs(est4.C0_lower / est.C0_lower - 0.5) / 0.5
    out.append(CheckResult("poincare_matrix_scaling", 1, int(rel4 > 2e-2), 2e-2 - rel4))
    return out


def _chain_battery(rng, samples: int) -> list:
    reg = _Tally("regularity_chains")
    base = _interval_problem(lambda s: 2.0 + s, 32)
    c0 = estimate_C0(base, 3, seed=int(rng.integers(2**31))).C0_lower
    c1s = []
    opts = SolverOptions(tol=1e-8)
    for k in range(samples):
        vals = random_smooth_field(base.grid, rng) + rng.normal()
        f = base.grid.scalar(vals)
        target = 10.0 ** (-1.0 + 2.0 * k / max(1, samples - 1))
        f = f.with_values(f.values * target / weighted_norm(f, base.v, base.p))
        data = base.with_datum(f)
        rep = solve(data, opts)
        chk = regularity_check(rep, data, c0)
        worst = min(margin(s["lhs"], s["rhs"]) for n_, s in chk["steps"].items()
                    if "eq" not in n_)
        reg.add(chk["ok"], worst)
        c1s.append(chk["C1_observed"])
    out = [reg.result({"C0": c0, "C1_max": max(c1s), "C1_min": min(c1s)})]
    npc = _Tally("neumann_implies_poincare")
    probes = [base.grid.scalar(random_smooth_field(base.grid, rng)) for _ in range(2)]
    res = neumann_implies_poincare_check(base, probes, opts)
    for r in res["probes"]:
        st = r["steps"]["poincare_for_f1"]
        npc.add(r["ok"], margin(st["lhs"], st["rhs"]))
    out.append(npc.result())
    return out


def _average_battery(rng, n: int) -> list:
    tal = _Tally("average_equivalence")
    for _ in range(n):
        grid = random_grid(rng)
        p = float(rng.uniform(1.1, 6.0))
        f = grid.scalar(random_field(rng, grid))
        v = grid.scalar(rng.uniform(0.2, 5.0, grid.size))
        r = average_equivalence_check(f, v, p)
        tal.add(r["ok"], min(margin(c["lhs"], c["rhs"]) for c in r["checks"].values()))
    g = build_grid([(0.0, 1.0)], [16])
    r = average_equivalence_check(g.scalar(g.coords[0]), g.scalar(2.0), 2.0)
    exact = all(r[k] == 0.5 for k in ("K1", "K2", "K3", "K4"))
    tal.add(exact and r["ok"], 0.0 if exact else -1.0)
    return [tal.result({"K_unit_weight_2": [r["K1"], r["K2"], r["K3"], r["K4"]]})]


def run_battery(seed: int = 0, instances: int = 200,
                holder_constant: float = HOLDER_CONSTANT) -> dict:
    """Run every check; the result depends only on the arguments."""
    rng = np.random.default_rng(seed)
    checks = []
    checks += _norm_battery(rng, instances, holder_constant)
    checks += _minty_battery(rng, max(20, instances))
    checks += _poincare_battery(rng)
    checks += _chain_battery(rng, 5)
    checks += _average_battery(rng, instances)
    results = [c.to_dict() for c in checks]
    return {"seed": seed, "instances": instances, "holder_constant": holder_constant,
            "checks": results, "all_passed": all(c["ok"] for c in results)}

