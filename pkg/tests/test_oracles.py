"""Frozen oracle values, re-derived here by routes independent of the package."""
import json
import math
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate, optimize

from vxneumann import ExponentField, build_grid, luxemburg_norm

DATA = Path(__file__).parent / "data"


def p4_flux(x):
    # int_0^x cos^3(pi s) ds
    s = math.sin(math.pi * x)
    return (s - s ** 3 / 3) / math.pi


def test_frozen_p4_oracle_rederived_by_closed_form_flux():
    ref = json.loads((DATA / "p4_oracle_m128.json").read_text())
    x = np.asarray(ref["x"])
    u = np.asarray(ref["u"])
    assert ref["m"] == 128 and ref["p"] == 4.0 and len(x) == 128
    assert abs(float(np.sum(u)) / 128) < 1e-6
    def up(t):
        return np.cbrt(p4_flux(t))

    def U(t):
        return integrate.quad(up, 0, t, epsabs=1e-13)[0]

    mean = integrate.quad(U, 0, 1, epsabs=1e-12)[0]
    for k in (0, 17, 63, 64, 100, 127):
        assert U(x[k]) - mean == pytest.approx(u[k], abs=1e-10)


def test_frozen_p4_oracle_matches_shooting():
    ref = json.loads((DATA / "p4_oracle_m128.json").read_text())
    x = np.asarray(ref["x"])
    u = np.asarray(ref["u"])

    # (|u'|^2 u')' = |cos|^2 cos with zero flux at 0; carry int u along to fix the mean
    def rhs(t, y):
        return [np.cbrt(p4_flux(t)), y[0]]

    sol = integrate.solve_ivp(rhs, (0.0, 1.0), [0.0, 0.0], method="DOP853", rtol=1e-12,
                              atol=1e-14, dense_output=True)
    assert abs(p4_flux(1.0)) < 1e-15
    mean = sol.y[1, -1]
    np.testing.assert_allclose(sol.sol(x)[0] - mean, u, atol=1e-8)


def test_luxemburg_oracle_rederived():
    from test_vxnorm import LUX_X_P2X

    def rho(mu):
        return integrate.quad(lambda t: (t / mu) ** (2 + t), 0, 1, epsabs=1e-15, epsrel=1e-14)[0] - 1

    assert optimize.brentq(rho, 0.1, 2.0, xtol=1e-15) == pytest.approx(LUX_X_P2X, rel=1e-12)


def test_discrete_norm_matches_scalar_root_finder():
    g = build_grid([(0, 1)], [37])
    x = g.coords[0]
    f = np.sin(5 * x) + 0.2
    p = 1.3 + 3 * x ** 2

    def rho(mu):
        return math.fsum(np.abs(f / mu) ** p * g.weights) - 1

    want = optimize.brentq(rho, 1e-3, 10.0, xtol=1e-16, rtol=1e-15)
    assert luxemburg_norm(g.scalar(f), ExponentField(g, p)) == pytest.approx(want, rel=1e-12)
