import csv
import io
import json
import math

import numpy as np
import pytest

from padic_dirac.cli import main
from padic_dirac.padic import FieldContext
from padic_dirac.spinor import matrix_from_json
from padic_dirac.states import SpinorWaveletState, evaluate

CTX3 = FieldContext(3)


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out.read_bytes() if out.exists() else b""


def rows(blob: bytes):
    lines = [ln for ln in blob.decode().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def write_cfg(tmp_path, text, name="cfg.json"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# ---- causality


def test_causality_default(tmp_path):
    code, blob = run(tmp_path, "causality")
    assert code == 0
    table = rows(blob)
    assert [float(r["t"]) for r in table] == [0.0, 1e-6, 1e-3, 1.0]
    assert all(float(r["probability"]) > 0 for r in table)
    assert {r["distance"] for r in table} == {"9/1"}


def test_causality_deterministic(tmp_path):
    a = run(tmp_path, "causality", "--r-max", "4", name="a")
    b = run(tmp_path, "causality", "--r-max", "4", name="b")
    assert a == b and a[0] == 0
    j1 = run(tmp_path, "causality", "--format", "json", "--r-max", "4", name="c")[1]
    j2 = run(tmp_path, "causality", "--format", "json", "--r-max", "4", name="d")[1]
    assert j1 == j2
    assert json.loads(j1)["config"]["r_max"] == 4


def test_causality_literal_mode(tmp_path):
    code, blob = run(tmp_path, "causality", "--mode", "paper_literal")
    assert code == 0
    assert {r["mode"] for r in rows(blob)} == {"paper_literal"}


def test_causality_config_file(tmp_path):
    cfg = write_cfg(tmp_path, json.dumps({"p": 5, "b": ["1/5^1"] * 3, "r_max": 3, "times": [0.5]}))
    code, blob = run(tmp_path, "causality", "--config", cfg)
    assert code == 0
    (row,) = rows(blob)
    assert row["p"] == "5" and row["distance"] == "25/1"


def test_config_error_line(tmp_path, capsys):
    cfg = write_cfg(tmp_path, '{\n  "l0": 0,\n  "p": 3\n}\n')
    code, _ = run(tmp_path, "causality", "--config", cfg)
    assert code == 2
    err = capsys.readouterr().err
    assert f"{cfg}:2: l0:" in err


def test_config_unknown_key_line(tmp_path, capsys):
    cfg = write_cfg(tmp_path, '{\n  "p": 3,\n\n  "bogus": 1\n}\n')
    assert run(tmp_path, "causality", "--config", cfg)[0] == 2
    assert f"{cfg}:4: bogus: unknown key" in capsys.readouterr().err


def test_config_bad_json(tmp_path, capsys):
    cfg = write_cfg(tmp_path, '{\n  "p": 3,\n}\n')
    assert run(tmp_path, "spectrum", "--config", cfg)[0] == 2
    assert f"{cfg}:3:" in capsys.readouterr().err


def test_missing_config(tmp_path):
    assert main(["expand", "--config", str(tmp_path / "nope.json")]) == 2


def test_negative_seed():
    assert main(["verify", "--seed", "-1"]) == 2


# ---- verify


def test_verify_subset_passes(tmp_path):
    cfg = write_cfg(tmp_path, json.dumps({"only": ["padic-core", "dirac_algebra"]}))
    code, blob = run(tmp_path, "verify", "--config", cfg)
    assert code == 0
    table = rows(blob)
    assert len(table) == 6
    assert all(r["status"] == "pass" for r in table)


def test_verify_tolerance_override_fails(tmp_path):
    cfg = write_cfg(tmp_path, json.dumps({"only": ["character_additive", "evolution_power_series"]}))
    code, blob = run(tmp_path, "verify", "--config", cfg, "--tolerance", "1e-30")
    assert code == 1
    assert any(r["status"] == "fail" for r in rows(blob))


def test_verify_full_deterministic(tmp_path):
    a = run(tmp_path, "verify", "--seed", "3", "--format", "json", name="a")
    b = run(tmp_path, "verify", "--seed", "3", "--format", "json", name="b")
    assert a == b
    res = json.loads(a[1])
    failing = {r["invariant"] for r in res["results"] if r["status"] == "fail"}
    # the sign-flip identity for the conjugation matrix does not hold; see README
    assert failing == {"uc_conj_h_is_minus_h", "uc_conj_h_external", "conjugation_energy_swap"}
    assert a[0] == 1


# ---- spectrum


@pytest.mark.parametrize("m", [0.0, 1.0, 10.0])
def test_spectrum_gap(tmp_path, m):
    cfg = write_cfg(tmp_path, json.dumps({"m": m, "r_min": -5, "r_max": 5}))
    code, blob = run(tmp_path, "spectrum", "--config", cfg)
    assert code == 0
    table = rows(blob)
    assert len(table) == 11**3
    lams = [float(r["lambda"]) for r in table]
    assert min(lams) >= m
    assert lams == sorted(lams)
    for r in table[:5]:
        assert float(r["a_plus"]) ** 2 + float(r["a_minus"]) ** 2 == pytest.approx(1)


def test_spectrum_first_row(tmp_path):
    _, blob = run(tmp_path, "spectrum", "--r-max", "1")
    first = rows(blob)[0]
    # largest r gives the smallest frequency 3**(1-r) = 1 on every axis
    assert (first["r1"], first["r2"], first["r3"]) == ("1", "1", "1")
    assert float(first["lambda"]) == pytest.approx(2.0)


# ---- expand


def test_expand_default(tmp_path):
    code, blob = run(tmp_path, "expand")
    assert code == 0
    table = rows(blob)
    assert len(table) == 8
    for r in table:
        assert float(r["re"]) == pytest.approx(3 ** (-int(r["r"]) / 2), rel=1e-15)
    text = blob.decode()
    assert "# partial_norm2: 80/81" in text and "# tail_norm2: 1/81" in text


def test_expand_json_3d(tmp_path):
    cfg = write_cfg(tmp_path, json.dumps({"dim": 3, "r_max": 2}))
    code, blob = run(tmp_path, "expand", "--config", cfg, "--format", "json")
    assert code == 0
    obj = json.loads(blob)
    assert len(obj["coefficients"]) == 8 * 8
    assert obj["partial_norm2"] == "512/729"


def test_expand_bad_rmax(tmp_path):
    cfg = write_cfg(tmp_path, json.dumps({"R0": 2}))
    assert run(tmp_path, "expand", "--config", cfg, "--r-max", "-3")[0] == 2


# ---- evolve


def test_evolve_t0_reproduces_samples(tmp_path):
    code, blob = run(tmp_path, "evolve")
    assert code == 0
    obj = json.loads(blob)
    state = SpinorWaveletState.from_json(CTX3, obj["config"]["state"])
    pts = [tuple(CTX3.scalar(s) for s in pt) for pt in obj["config"]["points"]]
    at0 = [s for s in obj["samples"] if s["t"] == 0.0]
    assert len(at0) == len(pts)
    for s, pt in zip(at0, pts):
        assert np.array_equal(matrix_from_json(s["value"]), evaluate(state, pt))


def test_evolve_norm_preserved(tmp_path):
    cfg = write_cfg(tmp_path, json.dumps({"times": [0.0, 0.3, 2.0], "m": 0.5}))
    _, blob = run(tmp_path, "evolve", "--config", cfg)
    obj = json.loads(blob)
    norms = [SpinorWaveletState.from_json(CTX3, c["state"]).norm2() for c in obj["coefficients"]]
    assert all(math.isclose(n, 1.0, rel_tol=1e-12) for n in norms)


def test_evolve_csv(tmp_path):
    code, blob = run(tmp_path, "evolve", "--format", "csv")
    assert code == 0
    assert len(rows(blob)) == 2 * 3 * 4


def test_evolve_bad_state(tmp_path):
    cfg = write_cfg(tmp_path, '{\n "state": [{"index": 3}]\n}\n')
    assert run(tmp_path, "evolve", "--config", cfg)[0] == 2
