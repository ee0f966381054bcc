"""Hypothesis property tests for the invariants of the norm engine, matrices and operators."""
import math

import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from vxneumann import (ExponentField, MatrixField, build_grid, eigendecompose, holder_check,
                       lift, luxemburg_norm, mean_zero_project, mod_norm_bounds_check, modular,
                       power_norm_check, t_pairing)
from vxneumann.neumann import _monotone_gap
from test_neumann import interval

M = 12
GRID = build_grid([(0.0, 1.5)], [M])
finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
vals = arrays(np.float64, M, elements=finite).filter(lambda a: np.max(np.abs(a)) > 1e-6)
exps = arrays(np.float64, M, elements=st.floats(1.1, 6.0))
scalars = st.floats(1e-3, 1e3) | st.floats(-1e3, -1e-3)

SETTINGS = settings(max_examples=150, deadline=None)


@SETTINGS
@given(vals, exps, scalars)
def test_homogeneity(f, p, c):
    pv = ExponentField(GRID, p)
    n = luxemburg_norm(GRID.scalar(f), pv)
    assert abs(luxemburg_norm(GRID.scalar(c * f), pv) - abs(c) * n) <= 1e-10 * abs(c) * n


@SETTINGS
@given(vals, vals, exps)
def test_triangle(f, h, p):
    pv = ExponentField(GRID, p)
    a, b = luxemburg_norm(GRID.scalar(f), pv), luxemburg_norm(GRID.scalar(h), pv)
    assert luxemburg_norm(GRID.scalar(f + h), pv) <= (a + b) * (1 + 1e-10)


@SETTINGS
@given(vals, exps)
def test_normalized_modular_is_one(f, p):
    pv = ExponentField(GRID, p)
    n = luxemburg_norm(GRID.scalar(f), pv)
    assert abs(modular(GRID.scalar(f / n), pv) - 1.0) <= 1e-10


@SETTINGS
@given(vals, exps)
def test_norm_monotone_in_modulus(f, p):
    pv = ExponentField(GRID, p)
    smaller = 0.5 * np.abs(f)
    assert luxemburg_norm(GRID.scalar(smaller), pv) <= luxemburg_norm(GRID.scalar(f), pv)


@SETTINGS
@given(vals, vals, exps)
def test_holder(f, h, p):
    assert holder_check(GRID.scalar(f), GRID.scalar(h), ExponentField(GRID, p)).ok


@SETTINGS
@given(vals, exps, st.floats(0.05, 20.0))
def test_sandwiches(f, p, target):
    pv = ExponentField(GRID, p)
    fs = GRID.scalar(f * target / luxemburg_norm(GRID.scalar(f), pv))
    assert mod_norm_bounds_check(fs, pv).ok
    assert power_norm_check(fs, pv).ok


@SETTINGS
@given(arrays(np.float64, (4, 2, 2), elements=st.floats(-10, 10)))
def test_eigen_reconstruction(a):
    g = build_grid([(0, 1), (0, 1)], [2, 2])
    Q = MatrixField(g, np.einsum("kij,klj->kil", a, a))
    e = eigendecompose(Q)
    lam = max(float(e.values.max()), 1e-300)
    rec = np.einsum("kij,kj,klj->kil", e.vectors, e.values, e.vectors)
    assert np.max(np.abs(rec - Q.entries)) <= 1e-8 * lam + 1e-300
    assert np.all(np.diff(e.values, axis=1) <= 0)
    orth = np.einsum("kji,kjl->kil", e.vectors, e.vectors)
    assert np.allclose(orth, np.eye(2), atol=1e-12)


@SETTINGS
@given(arrays(np.float64, 16, elements=st.floats(-50, 50)),
       arrays(np.float64, 16, elements=st.floats(-50, 50)), st.floats(1.2, 5.0))
def test_monotone_operator(a, b, p):
    d = interval(p=p, m=16)
    value, scale = _monotone_gap(d, d.gradient_values(a), d.gradient_values(b))
    assert value >= -1e-12 * scale


@SETTINGS
@given(arrays(np.float64, 16, elements=st.floats(-50, 50)), st.floats(1.2, 5.0))
def test_t_pairing_diagonal_positive(a, p):
    d = interval(p=p, m=16)
    w = d.lift(d.grid.scalar(a))
    assert t_pairing(w, w, d) >= 0.0


@SETTINGS
@given(arrays(np.float64, 16, elements=finite))
def test_mean_zero_idempotent(a):
    d = interval(m=16, v=lambda x: 1 + x)
    w = mean_zero_project(lift(d.grid.scalar(a)), d.v)
    w2 = mean_zero_project(w, d.v)
    assert np.allclose(w.u.values, w2.u.values, atol=1e-12 * (1 + np.max(np.abs(a))))
    assert abs(math.fsum(w.u.values * d.mass_vector)) <= 1e-12 * (1 + np.max(np.abs(a)))
