import json

import numpy as np
import pytest

from vxneumann import ConfigurationError, ValidationError, luxemburg_norm, modular
from vxneumann.config import load_config, matrix_from_spec, parse_config
from vxneumann.grid import build_grid

BASE = {"schema_version": 1, "domain": {"extents": [[0, 1]], "resolution": [8]}}


def doc(**sections):
    out = json.loads(json.dumps(BASE))
    out.update(sections)
    return out


def test_defaults():
    cfg = parse_config(doc())
    assert cfg.grid.size == 8 and cfg.scheme == "compact" and cfg.restarts == 4
    assert np.all(cfg.exponent.values == 2.0) and np.all(cfg.datum.values == 0.0)


def test_piecewise_exponent_example():
    cfg = parse_config(doc(exponent={"kind": "piecewise-axis", "breakpoints": [0.5],
                                     "values": [2, 3]},
                           datum={"kind": "constant", "value": 2}))
    assert modular(cfg.datum, cfg.exponent) == pytest.approx(6.0)
    assert luxemburg_norm(cfg.datum, cfg.exponent) == pytest.approx(2.0)


def test_field_kinds():
    cfg = parse_config(doc(exponent={"kind": "affine", "offset": 2, "slope": [1]},
                           weight={"kind": "table", "values": list(range(1, 9))},
                           datum={"kind": "cosine", "wavenumbers": [1], "amplitude": 2}))
    x = cfg.grid.coords[0]
    np.testing.assert_allclose(cfg.exponent.values, 2 + x)
    np.testing.assert_allclose(cfg.weight.values, np.arange(1, 9))
    np.testing.assert_allclose(cfg.datum.values, 2 * np.cos(np.pi * x))


def test_infinite_exponent_in_table():
    cfg = parse_config(doc(exponent={"kind": "table", "values": [2] * 7 + ["inf"]}))
    assert cfg.exponent.has_infinite
    with pytest.raises(ValidationError):
        cfg.problem()


@pytest.mark.parametrize("bad", [
    {"schema_version": 2, "domain": BASE["domain"]},
    {"schema_version": 1},
    doc(exponent={"kind": "wiggly"}),
    doc(exponent={"kind": "piecewise-axis", "breakpoints": [0.5], "values": [2]}),
    doc(weight={"kind": "table", "values": [1, 2]}),
    doc(solver={"scheme": "upwind"}),
    doc(solver={"tol": -1}),
    doc(matrix={"kind": "diagonal", "values": [1, 2]}),
    doc(poincare={"restarts": 0}),
])
def test_configuration_errors(bad):
    with pytest.raises(ConfigurationError):
        parse_config(bad)


def test_low_exponent_rejected():
    with pytest.raises(ValidationError):
        parse_config(doc(exponent={"kind": "constant", "value": 0.5}))


def test_radial_degenerate_matrix():
    g = build_grid([(0, 1), (0, 1)], [4, 4])
    Q = matrix_from_spec({"kind": "radial-degenerate", "center": [0.5, 0.5], "alpha": 2,
                          "lambda_max": 3}, g)
    rel = g.centers - 0.5
    r2 = np.sum(rel ** 2, axis=1)
    np.testing.assert_allclose(np.einsum("ki,kij,kj->k", rel, Q.entries, rel), r2 * r2, rtol=1e-12)
    g1 = build_grid([(0, 1)], [4])
    Q1 = matrix_from_spec({"kind": "radial-degenerate", "center": [0.0], "alpha": 1}, g1)
    np.testing.assert_allclose(Q1.entries[:, 0, 0], g1.coords[0])


def test_tol_override_and_files(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(doc(solver={"tol": 1e-5})))
    assert load_config(path).solver.tol == 1e-5
    assert load_config(path, tol=1e-9).solver.tol == 1e-9
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{nope")
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "bad.json")


@pytest.mark.parametrize("name", ["classical_1d", "p4_1d", "variable_2d", "verify"])
def test_shipped_configs_parse(name):
    from pathlib import Path
    cfg = load_config(Path(__file__).parent.parent / "configs" / f"{name}.json")
    assert cfg.grid.size > 0
