import math

import numpy as np
import pytest

from vxneumann import (ExponentField, MatrixField, ShapeMismatchError, SobolevPair, build_grid,
                       gradient, lift, mean_zero_project, sobolev_norm)
from vxneumann.sobolev import is_mean_zero, write_pair_csv


def unit(m=64):
    g = build_grid([(0, 1)], [m])
    return g, g.scalar(1.0), MatrixField.identity(g), ExponentField.constant(g, 2.0)


def test_norm_examples():
    g, v, Q, p = unit()
    assert sobolev_norm(lift(g.scalar(0.0)), v, Q, p) == 0.0
    assert sobolev_norm(lift(g.scalar(1.0)), v, Q, p) == pytest.approx(1.0, rel=1e-12)
    g, v, Q, p = unit(4096)
    val = sobolev_norm(lift(g.scalar(lambda x: x)), v, Q, p)
    assert val == pytest.approx(math.sqrt(1 / 3) + 1, rel=1e-7)


def test_lift_schemes():
    g, *_ = unit(32)
    w = lift(g.scalar(4.0))
    assert np.all(w.u.values == 4.0) and np.all(w.g.values == 0.0)
    for scheme in ("central", "compact"):
        wa = lift(g.scalar(lambda x: 3 * x - 1), scheme)
        np.testing.assert_allclose(wa.g.values, 3.0, rtol=1e-12)
    with pytest.raises(ValueError):
        lift(g.scalar(1.0), "upwind")


def test_lift_sine_second_order():
    errs = []
    for m in (32, 64, 128):
        g = build_grid([(0, 1)], [m])
        x = g.coords[0]
        w = lift(g.scalar(np.sin(np.pi * x)))
        errs.append(np.max(np.abs(w.g.values[:, 0] - np.pi * np.cos(np.pi * x))))
    assert math.log2(errs[1] / errs[2]) > 1.8


def test_mean_zero_project():
    g, v, Q, p = unit(50)
    w = mean_zero_project(lift(g.scalar(5.0)), v)
    assert np.max(np.abs(w.u.values)) <= 1e-14
    x = g.coords[0]
    w2 = mean_zero_project(lift(g.scalar(x)), v)
    np.testing.assert_allclose(w2.u.values, x - 0.5, atol=1e-14)
    w3 = mean_zero_project(w2, v)
    np.testing.assert_allclose(w3.u.values, w2.u.values, atol=1e-14)
    assert is_mean_zero(w3, v, p)
    assert not is_mean_zero(lift(g.scalar(x)), v, p)


def test_pair_arithmetic():
    g, *_ = unit(8)
    a = lift(g.scalar(lambda x: x))
    b = lift(g.scalar(lambda x: x ** 2))
    d = (a + b.scaled(2.0)) - a
    np.testing.assert_allclose(d.u.values, 2 * b.u.values)
    np.testing.assert_allclose(d.g.values, 2 * b.g.values)
    with pytest.raises(ShapeMismatchError):
        a + lift(g.scalar(1.0), "compact")


def test_pair_support_mismatch():
    g1 = build_grid([(0, 1)], [8])
    g2 = build_grid([(0, 1)], [9])
    with pytest.raises(ShapeMismatchError):
        SobolevPair(g1.scalar(1.0), gradient(g2.scalar(1.0)))


def test_write_pair(tmp_path):
    g, *_ = unit(5)
    pu, pg = write_pair_csv(tmp_path, lift(g.scalar(lambda x: x)), stem="s")
    assert pu.name == "s_u.csv" and pg.name == "s_g.csv"
    assert len(pu.read_text().splitlines()) == 6
