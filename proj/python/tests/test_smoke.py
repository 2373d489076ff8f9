import numpy as np
import pytest

import spk


def test_example_moduli_dimension():
    r = spk.existence_check([0] * 24)
    assert r["exists"] and r["N"] == 18 and r["verdict"] == "iff"


def test_projective_dimension_is_one_less():
    b = [-1, -1, -1, 0]
    assert spk.h_space_dim(b) == spk.existence_check(b)["N"] + 1 == 2


def test_sample_section_is_deterministic():
    assert spk.sample_section([-1, -1, -1], 7) == spk.sample_section([-1, -1, -1], 7)


def test_models_pass():
    rep = spk.verify_model("log", k=2, b=2 + 1j)
    assert all(c["pass"] for c in rep["checks"])
    rep = spk.verify_model("cone", beta=0.0)
    assert all(c["residual"] < 1e-8 for c in rep["checks"] if not c["skipped"])


def test_disc_solve_returns_grids():
    out = spk.solve_hyperbolic([{"type": "cone", "point": [0, 0], "alpha": 2}], disc_radius=0.5, n=64)
    assert out["area"] > 0
    g = out["grids"][0]
    assert isinstance(g["v"], np.ndarray) and g["v"].ndim == 2


def test_invalid_data_raises():
    with pytest.raises(spk.SpkError):
        spk.existence_check([0, 0], ell=5)


def test_pipeline_roundtrip(tmp_path):
    rc = spk.main(["pipeline", "--output-dir", tmp_path, "--config", _write(tmp_path, '{"grid":{"nr":256,"ntheta":256,"ncart":256}}')])
    assert rc == 0
    rep = spk.verify_structure(tmp_path / "structure.json")
    assert all(c["pass"] for c in rep["checks"])
    s = spk.load_structure(tmp_path / "structure.json")
    assert len(s["charts"]) >= 1 and np.isfinite(s["charts"][0]["u"]).any()


def _write(d, text):
    p = d / "cfg.json"
    p.write_text(text)
    return p
