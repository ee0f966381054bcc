import math

import numpy as np
import pytest

from vxneumann import (ExponentField, MatrixField, ValidationError, build_grid,
                       component_norm_equivalence_check, eigendecompose, gamma, lq_norm,
                       luxemburg_norm, sqrt_field)
from vxneumann.verify import random_psd

G2 = build_grid([(0, 1), (0, 1)], [2, 2])


def test_eigen_diagonal():
    e = eigendecompose(MatrixField(G2, np.diag([4.0, 9.0])))
    np.testing.assert_allclose(e.values, np.tile([9.0, 4.0], (4, 1)))
    np.testing.assert_allclose(np.abs(e.vectors[0]), [[0, 1], [1, 0]], atol=1e-15)


def test_eigen_two_by_two():
    e = eigendecompose(MatrixField(G2, [[2.0, 1.0], [1.0, 2.0]]))
    np.testing.assert_allclose(e.values[0], [3.0, 1.0], rtol=1e-14)
    v = e.vectors[0]
    s = 1 / math.sqrt(2)
    np.testing.assert_allclose(np.abs(v[:, 0]), [s, s], rtol=1e-14)
    assert abs(v[:, 1] @ np.array([1.0, 1.0])) < 1e-14


def test_eigen_against_numpy_and_reconstruction():
    rng = np.random.default_rng(1)
    g = build_grid([(0, 1), (0, 1)], [7, 6])
    Q = random_psd(rng, g)
    e = eigendecompose(Q)
    np.testing.assert_allclose(e.values, np.linalg.eigvalsh(Q.entries)[:, ::-1],
                               rtol=1e-10, atol=1e-12 * e.values.max())
    rec = np.einsum("kij,kj,klj->kil", e.vectors, e.values, e.vectors)
    assert np.max(np.abs(rec - Q.entries)) <= 1e-8 * e.values.max()


def test_sqrt_field():
    s = sqrt_field(MatrixField(G2, np.diag([4.0, 9.0])))
    np.testing.assert_allclose(s.entries[0], np.diag([2.0, 3.0]), atol=1e-15)
    assert np.all(sqrt_field(MatrixField(G2, np.zeros((2, 2)))).entries == 0.0)
    a, b = (math.sqrt(3) + 1) / 2, (math.sqrt(3) - 1) / 2
    s2 = sqrt_field(MatrixField(G2, [[2.0, 1.0], [1.0, 2.0]]))
    np.testing.assert_allclose(s2.entries[0], [[a, b], [b, a]], rtol=1e-14)


def test_gamma():
    assert np.all(gamma(MatrixField(G2, np.diag([4.0, 9.0]))).values == pytest.approx(9.0))
    assert np.all(gamma(MatrixField(G2, [[2.0, 1.0], [1.0, 2.0]])).values == pytest.approx(3.0))
    assert np.all(gamma(MatrixField.identity(G2, 2.5)).values == pytest.approx(2.5))


def test_validation():
    with pytest.raises(ValidationError):
        MatrixField(G2, [[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValidationError):
        MatrixField(G2, np.diag([1.0, -1.0]))


def test_lq_norm_examples():
    g = build_grid([(0, 1), (0, 1)], [4, 4])
    rng = np.random.default_rng(0)
    vec = g.vector(rng.normal(size=(g.size, 2)))
    p = ExponentField(g, rng.uniform(1.5, 3, g.size))
    mag = g.scalar(np.linalg.norm(vec.values, axis=1))
    assert lq_norm(vec, MatrixField.identity(g), p) == pytest.approx(luxemburg_norm(mag, p), rel=1e-12)
    assert lq_norm(vec, MatrixField(g, np.zeros((2, 2))), p) == 0.0
    unit = g.vector([1.0, 0.0])
    val = lq_norm(unit, MatrixField(g, np.diag([4.0, 1.0])), ExponentField.constant(g, 2.0))
    assert val == pytest.approx(2.0, rel=1e-12)


def test_component_equivalence():
    g1 = build_grid([(0, 1)], [6])
    r = component_norm_equivalence_check(g1.vector(np.arange(6.0).reshape(-1, 1)),
                                         MatrixField.identity(g1), ExponentField.constant(g1, 3))
    assert r.lower == pytest.approx(r.upper) and r.ok
    g = build_grid([(0, 1), (0, 1)], [3, 3])
    vals = np.column_stack([np.linspace(1, 2, 9), np.zeros(9)])
    p = ExponentField.constant(g, 2.0)
    r2 = component_norm_equivalence_check(g.vector(vals), MatrixField.identity(g), p)
    n1 = luxemburg_norm(g.scalar(vals[:, 0]), p)
    assert (r2.lower, r2.mid, r2.upper) == pytest.approx((0.5 * n1, n1, n1))
