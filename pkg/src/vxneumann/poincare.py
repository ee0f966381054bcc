"""Poincare constants: estimation, eigenvalue cross-check, and the pair/Neumann/average checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (DomainError, EstimationFailure, PreconditionError, UndefinedRatioError,
                     ValidationError)
from .grid import ScalarField, integrate, weighted_average
from .neumann import (ProblemData, SolverOptions, random_smooth_field,
                      regularity_check, solve, t_pairing, weak_residual)
from .sobolev import SobolevPair
from .vxnorm import HOLDER_CONSTANT, branch_l_b, conjugate, luxemburg_norm, modular

__all__ = [
    "PoincareEstimate",
    "poincare_ratio",
    "estimate_C0",
    "neumann_eigen_oracle",
    "poincare_pair_check",
    "neumann_implies_poincare_check",
    "average_equivalence_check",
]

GAIN_TOL = 1e-8
MAX_ASCENT = 2000


@dataclass
class PoincareEstimate:
    """``C0_lower`` is the best ratio found and therefore a lower bound on the discrete constant."""

    C0_lower: float
    witness: ScalarField
    restarts: int
    converged: bool
    best_by_restart: list = field(default_factory=list)
    probe_ratios: list = field(default_factory=list)
    iterations: int = 0

    def to_dict(self) -> dict:
        return {"C0_lower": self.C0_lower, "restarts": self.restarts, "converged": self.converged,
                "best_by_restart": list(self.best_by_restart), "iterations": self.iterations}


def _ratio_parts(data: ProblemData, f: np.ndarray) -> tuple:
    mass = data.mass_vector
    centred = f - math.fsum(mass * f) / math.fsum(mass)
    num = luxemburg_norm(data.grid.scalar(centred * data.v.values), data.p)
    g = data.gradient_values(f)
    den = luxemburg_norm(ScalarField(data.support, np.sqrt(data.quadratic(g))), data.p_grad)
    return num, den, centred, g


def poincare_ratio(f: ScalarField, data: ProblemData) -> float:
    """``||f - f_{E,v}||_{L^p(v)} / ||grad f||_{L_Q^p}`` with the problem's gradient scheme."""
    num, den, _, _ = _ratio_parts(data, f.values)
    if den == 0.0:
        raise UndefinedRatioError("gradient of the probe vanishes in the L_Q norm")
    return num / den


def _norm_gradient(a: np.ndarray, mu: float, w: np.ndarray, p: np.ndarray) -> np.ndarray:
    """``d||a||/da`` by implicit differentiation of ``modular(a/mu) = 1``."""
    r = np.abs(a) / mu
    top = w * p * r ** (p - 1.0) * np.sign(a)
    bottom = math.fsum(w * p * r ** p)
    return top / bottom


def _log_ratio_gradient(data: ProblemData, f: np.ndarray, num: float, den: float,
                        centred: np.ndarray, g: np.ndarray) -> np.ndarray:
    v = data.v.values
    mass = data.mass_vector
    dnum_da = _norm_gradient(centred * v, num, data.grid.weights, data.p.values)
    x = v * dnum_da
    dnum = x - mass * (x.sum() / mass.sum())
    s = np.sqrt(data.quadratic(g))
    dden_ds = _norm_gradient(s, den, data.support.weights, data.p_grad.values)
    qg = np.einsum("kij,kj->ki", data.Q_grad.entries, g)
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(s > 0, dden_ds / s, 0.0)
    dden = data.D.T @ (qg * coef[:, None]).ravel()
    return dnum / num - dden / den


def _stiffness(data: ProblemData) -> tuple:
    """``K = D^T W Q D`` (sparse) and ``M = diag(vol v^2)``: the ``p = 2`` forms."""
    wq = data.Q_grad.entries * data.support.weights[:, None, None]
    blocks = sp.block_diag(list(wq), format="csr") if data.grid.dim > 1 \
        else sp.diags(wq[:, 0, 0])
    K = (data.D.T @ blocks @ data.D).tocsc()
    M = sp.diags(data.grid.weights * data.v.values ** 2)
    return K, M


def _preconditioner(data: ProblemData):
    K, M = _stiffness(data)
    shift = 1e-6 * max(float(abs(K).sum()), 1e-300) / max(float(M.diagonal().sum()), 1e-300)
    return spla.splu((K + shift * M).tocsc())


def _ascend(data: ProblemData, f: np.ndarray, lu, probes: list) -> tuple:
    mass = data.mass_vector
    num, den, centred, g = _ratio_parts(data, f)
    if den == 0.0 or num == 0.0:
        return None
    f = centred / num
    num, den, centred, g = _ratio_parts(data, f)
    best = num / den
    probes.append(best)
    t = 1.0
    it = 0
    converged = False
    while it < MAX_ASCENT:
        it += 1
        grad = _log_ratio_gradient(data, f, num, den, centred, g)
        d = lu.solve(grad)
        d = d - math.fsum(mass * d) / math.fsum(mass)
        scale = np.max(np.abs(d))
        if scale == 0.0:
            converged = True
            break
        d = d / scale * np.max(np.abs(f))
        accepted = False
        while t > 1e-14:
            trial = f + t * d
            n2, d2, c2, _ = _ratio_parts(data, trial)
            if d2 > 0 and n2 > 0 and n2 / d2 > best:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            converged = True
            break
        gain = (n2 / d2 - best) / best
        f = c2 / n2
        num, den, centred, g = _ratio_parts(data, f)
        best = num / den
        probes.append(best)
        t = min(2.0 * t, 1.0)
        if gain < GAIN_TOL:
            converged = True
            break
    return best, f, it, converged


def estimate_C0(data: ProblemData, restarts: int = 4, seed: int = 0) -> PoincareEstimate:
    """Multi-start ascent on the Poincare ratio from random low-frequency fields.

    Each start is normalised, then improved along the gradient of
    ``log(ratio)`` preconditioned by the ``p = 2`` stiffness matrix; steps
    double on acceptance and halve on rejection, and a start stops once
    the relative gain falls below 1e-8.
    """
    rng = np.random.default_rng(seed)
    lu = _preconditioner(data)
    best_val, best_f, history, probes = -math.inf, None, [], []
    total = 0
    all_converged = True
    for _ in range(max(1, restarts)):
        f0 = random_smooth_field(data.grid, rng, modes=3, decay=2.0)
        out = _ascend(data, f0, lu, probes)
        if out is not None:
            val, f, its, conv = out
            total += its
            all_converged &= conv
            if val > best_val:
                best_val, best_f = val, f
        history.append(best_val)
    if best_f is None:
        raise EstimationFailure("every restart produced a constant field")
    witness = data.grid.scalar(best_f)
    c0 = poincare_ratio(witness, data)
    return PoincareEstimate(c0, witness, max(1, restarts), bool(all_converged), history,
                            probes, total)


def neumann_eigen_oracle(data: ProblemData) -> float:
    """Exact discrete constant for ``p = 2``: ``1/sqrt(lambda_min)`` of the weighted Neumann pencil.

    Restricted to mean-zero fields ``f = P z``:
    ``lambda_min = min (f^T K f) / (f^T M f)``, ``K = D^T W Q D``, ``M = diag(vol v^2)``.
    """
    if not (data.p.is_constant and data.p.p_minus == 2.0):
        raise DomainError("the eigenvalue oracle applies to p = 2 only")
    n = data.grid.size
    mass = data.mass_vector
    P = np.eye(n) - np.outer(np.ones(n), mass) / mass.sum()
    B = P[:, :-1]
    K, M = _stiffness(data)
    K, M = K.toarray(), M.toarray()
    Kb, Mb = B.T @ K @ B, B.T @ M @ B
    lam = sla.eigh(Kb, Mb, eigvals_only=True, subset_by_index=[0, 0])[0]
    if lam <= 0:
        raise UndefinedRatioError("the gradient form vanishes on a mean-zero field")
    return 1.0 / math.sqrt(lam)


def poincare_pair_check(w: SobolevPair, data: ProblemData, C0: float) -> dict:
    """``||u||_{L^p(v)} <= C0 ||g||_{L_Q} (1 + 1e-8)`` for a mean-zero pair."""
    u_norm, g_norm = data.norms(w)
    rhs = C0 * g_norm
    return {"lhs": u_norm, "rhs": rhs, "ok": bool(u_norm <= rhs * (1 + 1e-8))}


def neumann_implies_poincare_check(data: ProblemData, probes: Sequence[ScalarField],
                                   opts: Optional[SolverOptions] = None,
                                   rtol: float = 1e-6) -> dict:
    """For each probe, solve with the normalised mean-zero datum and walk the Poincare chain.

    With ``f1 = (f - f_{E,v}) / ||f - f_{E,v}||`` and solution ``(u, g)``:
    ``1 = int |f1 v|^p = int |f1|^{p-2} f1 f1 v^p = |<T(u), f1>|
    <= int |sqrt(Q)g|^{p-1} |sqrt(Q) grad f1| <= 4 || |sqrt(Q)g|^{p-1} ||_{p'} ||grad f1||
    <= 4 ||g||^{b*-1} ||grad f1||``, so ``4 ||g||^{b*-1}`` is a Poincare constant for ``f1``.
    """
    results = []
    for k, f in enumerate(probes):
        f0 = f.values - weighted_average(f, data.v)
        scale = max(1.0, float(np.max(np.abs(f.values))))
        if np.max(np.abs(f0)) <= 1e-13 * scale:
            results.append({"probe": k, "skipped": "constant after removing the weighted average"})
            continue
        n0 = luxemburg_norm(data.grid.scalar(f0 * data.v.values), data.p)
        f1 = data.grid.scalar(f0 / n0)
        sub = data.with_datum(f1)
        report = solve(sub, opts)
        w = report.solution
        g = w.g.values
        _, g_norm = sub.norms(w)
        test = sub.lift(f1)
        h = test.g.values
        s = np.sqrt(sub.quadratic(g))
        sh = np.sqrt(sub.quadratic(h))
        pg = sub.p_grad.values
        wts = sub.support.weights
        mod1 = modular(sub.grid.scalar(f1.values * sub.v.values), sub.p)
        data_side = math.fsum(np.abs(f1.values) ** sub.p.values * sub.v.values ** sub.p.values
                              * sub.grid.weights)
        pairing = abs(t_pairing(w, test, sub))
        defect = weak_residual(w, sub) * math.fsum(np.abs(f1.values) * sub.test_norms)
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(s > 0, s ** (pg - 2.0), 0.0)
        cs_left = math.fsum(coef * np.abs(np.einsum("ki,kij,kj->k", h, sub.Q_grad.entries, g)) * wts)
        cs_right = math.fsum(s ** (pg - 1.0) * sh * wts)
        powered = luxemburg_norm(ScalarField(sub.support, s ** (pg - 1.0)), conjugate(sub.p_grad))
        grad_f1 = luxemburg_norm(ScalarField(sub.support, sh), sub.p_grad)
        _, b_star = branch_l_b(g_norm, sub.p)
        implied = HOLDER_CONSTANT * g_norm ** (b_star - 1.0)
        steps = {
            "normalized_modular": {"lhs": mod1, "rhs": 1.0, "ok": bool(abs(mod1 - 1.0) <= 1e-10)},
            "weak_form": {"lhs": data_side, "rhs": pairing, "defect_bound": defect,
                          "ok": bool(abs(data_side - pairing) <= defect + 1e-12 * data_side)},
            "cauchy_schwarz": _le(cs_left, cs_right, rtol),
            "holder": _le(cs_right, HOLDER_CONSTANT * powered * grad_f1, rtol),
            "power_norm": _le(powered, g_norm ** (b_star - 1.0), rtol),
            "poincare_for_f1": _le(1.0, implied * grad_f1, rtol, defect),
        }
        reg = regularity_check(report, sub)
        steps["solution_chain"] = {"ok": reg["ok"], "detail": reg["steps"]["g_pstar_le_4_f_u"]}
        ratio = 1.0 / grad_f1 if grad_f1 > 0 else math.inf
        results.append({"probe": k, "implied_constant": implied, "measured_ratio": ratio,
                        "g_norm": g_norm, "b_star": b_star, "steps": steps,
                        "ok": all(st["ok"] for st in steps.values())})
    ok = all(r.get("ok", True) for r in results)
    return {"probes": results, "ok": bool(ok)}


def _le(lhs, rhs, rtol, atol=0.0) -> dict:
    return {"lhs": lhs, "rhs": rhs, "ok": bool(lhs <= rhs + rtol * max(abs(lhs), abs(rhs)) + atol)}


def _lp_weighted(vals: np.ndarray, v: np.ndarray, p: float, wts: np.ndarray) -> float:
    return math.fsum(np.abs(vals * v) ** p * wts) ** (1.0 / p)


def average_equivalence_check(f: ScalarField, v: ScalarField, p_const: float,
                              fourth: bool = True, rtol: float = 1e-10) -> dict:
    """Compare ``f - f_{E,v}``, ``f - f_{E,w}`` (``w = v^p``) and ``f - f_E`` in ``L^p(v)``.

    The constant of the fourth inequality, ``1 + K4 w(E)^{1/p}``, is
    reconstructed by repeating the triangle-inequality step of the first.
    """
    p = float(p_const)
    if not (1.0 < p < math.inf):
        raise ValidationError("average equivalence needs a constant exponent 1 < p < inf")
    grid = f.support
    wts = grid.weights
    vv = v.values
    if np.any(vv < 0):
        raise ValidationError("weight v must be non-negative")
    pc = p / (p - 1.0)
    size = grid.measure
    v_mass = integrate(v)
    w = vv ** p
    w_mass = math.fsum(w * wts)
    if v_mass <= 0:
        raise PreconditionError("weight v has zero total mass")
    f_v = math.fsum(f.values * vv * wts) / v_mass
    f_w = math.fsum(f.values * w * wts) / w_mass
    f_e = math.fsum(f.values * wts) / size
    n_v = _lp_weighted(f.values - f_v, vv, p, wts)
    n_w = _lp_weighted(f.values - f_w, vv, p, wts)
    n_e = _lp_weighted(f.values - f_e, vv, p, wts)
    K1 = size ** (1.0 / pc) / v_mass
    K2 = w_mass ** (-1.0 / p)
    K3 = size / v_mass
    out = {"K1": K1, "K2": K2, "K3": K3, "K4": None,
           "norms": {"minus_v_average": n_v, "minus_w_average": n_w, "minus_average": n_e}}
    checks = {
        "v_by_w": _le(n_v, (1.0 + K1 * w_mass ** (1.0 / p)) * n_w, rtol),
        "w_by_v": _le(n_w, 2.0 * n_v, rtol),
        "v_by_plain": _le(n_v, (1.0 + K3) * n_e, rtol),
    }
    if fourth:
        if np.any(vv == 0.0):
            raise PreconditionError("the fourth inequality needs v^{-1} in L^{p'}; v vanishes")
        K4 = math.fsum(vv ** (-pc) * wts) ** (1.0 / pc) / size
        out["K4"] = K4
        checks["plain_by_v"] = _le(n_e, (1.0 + K4 * w_mass ** (1.0 / p)) * n_v, rtol)
        checks["plain_by_v"]["constant_reconstructed"] = True
    out["checks"] = checks
    out["ok"] = all(c["ok"] for c in checks.values())
    return out
