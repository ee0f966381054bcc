import math

import numpy as np
import pytest

from vxneumann import (DomainError, ExponentField, ShapeMismatchError, ValidationError, build_grid,
                       conjugate, holder_check, luxemburg_norm, mod_norm_bounds_check, modular,
                       power_norm_check, weighted_norm)
from vxneumann.vxnorm import branch_l_b, branch_p_star, branch_r_star, luxemburg_norm_rows

# root of int_0^1 (x/mu)^(2+x) dx = 1, scipy quad + brentq at 1e-14
LUX_X_P2X = 0.6308956505289967
# root of 0.5 (2/mu)^2 + 0.5 (4/mu)^1.5 = 1
POWER_MID_HALVES = 2.985132158146914


def halves(m=2):
    g = build_grid([(0, 1)], [m])
    return g, ExponentField(g, np.where(g.coords[0] < 0.5, 2.0, 3.0))


def test_modular_examples():
    g = build_grid([(0, 1)], [10])
    for p0 in (1.3, 2.0, 5.0):
        assert modular(g.scalar(1.0), ExponentField.constant(g, p0)) == pytest.approx(1.0, rel=1e-14)
    gh, p = halves(8)
    assert modular(gh.scalar(2.0), p) == pytest.approx(6.0, rel=1e-14)
    assert modular(gh.scalar(0.0), p) == 0.0


def test_modular_with_infinite_cells():
    g = build_grid([(0, 1)], [4])
    p = ExponentField(g, [2.0, 2.0, math.inf, math.inf])
    f = g.scalar([1.0, 1.0, 0.5, 0.25])
    assert modular(f, p) == pytest.approx(0.5 + 0.5)
    assert p.has_infinite and not p.is_solver_admissible


def test_norm_examples():
    g = build_grid([(0, 1)], [16])
    x = g.coords[0]
    pv = ExponentField(g, 1.5 + x)
    assert luxemburg_norm(g.scalar(-3.0), pv) == pytest.approx(3.0, rel=1e-12)
    assert luxemburg_norm(g.scalar(2.0), ExponentField.constant(g, 2.0)) == pytest.approx(2.0, rel=1e-12)
    gh, p = halves(8)
    assert luxemburg_norm(gh.scalar(2.0), p) == pytest.approx(2.0, rel=1e-12)
    assert luxemburg_norm(g.scalar(0.0), pv) == 0.0


def test_norm_of_x_with_variable_exponent_matches_quadrature_oracle():
    g = build_grid([(0, 1)], [4096])
    x = g.coords[0]
    assert luxemburg_norm(g.scalar(x), ExponentField(g, 2 + x)) == pytest.approx(LUX_X_P2X, rel=1e-7)


def test_norm_second_order_in_h():
    errs = []
    for m in (128, 256, 512):
        g = build_grid([(0, 1)], [m])
        x = g.coords[0]
        errs.append(abs(luxemburg_norm(g.scalar(x), ExponentField(g, 2 + x)) - LUX_X_P2X))
    assert 1.8 < math.log2(errs[0] / errs[1]) < 2.2


def test_weighted_norm_examples():
    g = build_grid([(0, 1)], [20])
    p = ExponentField.constant(g, 2.5)
    f = g.scalar(lambda x: np.sin(3 * x))
    assert weighted_norm(f, g.scalar(1.0), p) == luxemburg_norm(f, p)
    assert weighted_norm(g.scalar(1.0), g.scalar(2.0), p) == pytest.approx(2.0, rel=1e-12)
    g2 = build_grid([(0, 1)], [2048])
    x = g2.coords[0]
    val = weighted_norm(g2.scalar(x), g2.scalar(1 - x), ExponentField.constant(g2, 2.0))
    assert val == pytest.approx(math.sqrt(1 / 30), rel=1e-5)


def test_weighted_norm_rejects_negative_weight():
    g = build_grid([(0, 1)], [4])
    with pytest.raises(ValidationError):
        weighted_norm(g.scalar(1.0), g.scalar([1, -1, 1, 1]), ExponentField.constant(g, 2))


def test_conjugate():
    g = build_grid([(0, 1)], [3])
    assert np.all(conjugate(ExponentField.constant(g, 2.0)).values == 2.0)
    np.testing.assert_allclose(conjugate(ExponentField.constant(g, 3.0)).values, 1.5)
    assert np.all(np.isinf(conjugate(ExponentField.constant(g, 1.0)).values))
    assert np.all(conjugate(ExponentField(g, [math.inf] * 3)).values == 1.0)


def test_exponent_validation():
    g = build_grid([(0, 1)], [3])
    with pytest.raises(ValidationError):
        ExponentField(g, [0.5, 2, 2])
    with pytest.raises(ValidationError):
        ExponentField(g, [np.nan, 2, 2])
    with pytest.raises(ShapeMismatchError):
        ExponentField(g, [2, 2])


def test_holder_examples():
    g = build_grid([(0, 1)], [8])
    p = ExponentField.constant(g, 2.0)
    r = holder_check(g.scalar(1.0), g.scalar(1.0), p)
    assert r.lhs == pytest.approx(1.0) and r.rhs == pytest.approx(4.0) and r.ok
    r0 = holder_check(g.scalar(0.0), g.scalar(1.0), p)
    assert r0.lhs == 0.0 and r0.ok


def test_holder_falsifiable_with_small_constant():
    g = build_grid([(0, 1)], [8])
    p = ExponentField.constant(g, 2.0)
    assert not holder_check(g.scalar(1.0), g.scalar(1.0), p, constant=0.5).ok


def test_mod_norm_sandwich_halves():
    g, p = halves(8)
    r = mod_norm_bounds_check(g.scalar(2.0), p)
    assert (r.norm, r.modular, r.lower, r.upper) == pytest.approx((2.0, 6.0, 4.0, 8.0))
    assert r.ok


def test_mod_norm_unit_norm_forces_unit_modular():
    g, p = halves(8)
    f = g.scalar(lambda x: 1 + x)
    f = f.with_values(f.values / luxemburg_norm(f, p))
    r = mod_norm_bounds_check(f, p)
    assert r.modular == pytest.approx(1.0, abs=1e-10) and r.ok


def test_mod_norm_rejects_infinite():
    g = build_grid([(0, 1)], [2])
    with pytest.raises(DomainError):
        mod_norm_bounds_check(g.scalar(1.0), ExponentField(g, [2, math.inf]))


def test_power_norm_examples():
    g = build_grid([(0, 1)], [12])
    f = g.scalar(lambda x: np.cos(2 * x) + 0.3)
    r = power_norm_check(f, ExponentField.constant(g, 2.0))
    assert r.mid == pytest.approx(r.norm, rel=1e-12) and r.ok
    gh, p = halves(8)
    r2 = power_norm_check(gh.scalar(2.0), p)
    assert r2.lower == pytest.approx(2.0) and r2.upper == pytest.approx(4.0)
    assert r2.mid == pytest.approx(POWER_MID_HALVES, rel=1e-11) and r2.ok
    r3 = power_norm_check(gh.scalar(1.0), p)
    assert (r3.lower, r3.mid, r3.upper) == pytest.approx((1.0, 1.0, 1.0))


def test_branches():
    g, p = halves(4)
    assert branch_p_star(0.5, p) == 3.0 and branch_p_star(1.0, p) == 2.0
    assert branch_r_star(2.0, p) == 3.0 and branch_r_star(0.5, p) == 2.0
    assert branch_l_b(2.0, p) == (2.0, 3.0)
    assert branch_l_b(0.5, p) == (3.0, 2.0)


def test_rows_match_scalar_norm():
    rng = np.random.default_rng(3)
    g = build_grid([(0, 1)], [9])
    pv = ExponentField(g, rng.uniform(1.2, 4, 9))
    rows = rng.normal(size=(5, 9))
    got = luxemburg_norm_rows(rows, g.weights, pv.values)
    want = [luxemburg_norm(g.scalar(r), pv) for r in rows]
    np.testing.assert_allclose(got, want, rtol=1e-11)
