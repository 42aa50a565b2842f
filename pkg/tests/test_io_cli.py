import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from finslerfill import cli
from finslerfill import io as fio

from conftest import SPECS


def _config(tmp_path, name="cfg.json", **kw):
    cfg = {"metric": SPECS["hemi"], "h": 0.05, "n": 8, "m": 128}
    cfg.update(kw)
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _run(args):
    return cli.main(args)


# ---------------------------------------------------------------------------
# serialisation


def test_dumps_is_sorted_and_converts_numpy():
    s = fio.dumps({"b": np.float64(1.5), "a": np.arange(2), "c": np.bool_(True), "d": float("nan")})
    assert s == '{\n  "a": [\n    0,\n    1\n  ],\n  "b": 1.5,\n  "c": true,\n  "d": null\n}\n'


def test_csv_round_trip(tmp_path):
    p = tmp_path / "m.csv"
    M = np.array([[0.0, 1.25], [1.0 / 3.0, 0.0]])
    fio.write_matrix(p, M, [0.1, 0.2])
    text = p.read_text().splitlines()
    assert text[0] == "angle,q0,q1"
    header, data = fio.read_csv(p)
    assert header == ["angle", "q0", "q1"]
    np.testing.assert_array_equal(data[:, 1:], M)


def test_config_defaults_and_overrides(tmp_path):
    cfg = fio.load_config(_config(tmp_path), {"n": 12, "seed": None})
    assert cfg.n == 12 and cfg.h == 0.05 and cfg.R == 3 and cfg.seed == 0
    assert cfg.tol("cyclic_angle") == 0.02


def test_config_hash_ignores_output_dir(tmp_path):
    a = fio.load_config(_config(tmp_path), {"out": "x"})
    b = fio.load_config(_config(tmp_path), {"out": "y"})
    c = fio.load_config(_config(tmp_path), {"n": 9})
    assert a.config_hash == b.config_hash != c.config_hash


def test_metric_spec_from_file(tmp_path):
    (tmp_path / "hemi.json").write_text(json.dumps(SPECS["hemi"]))
    cfg = fio.load_config(_config(tmp_path, metric="hemi.json"))
    assert cfg.metric == SPECS["hemi"]


@pytest.mark.parametrize("bad", [
    {"h": 0.0}, {"h": "x"}, {"n": 1}, {"R": 2.5}, {"bogus": 1}, {"schedule": []},
    {"tolerances": {"nope": 1}}, {"metric": {"family": "unknown"}}, {"metric": "missing.json"},
])
def test_config_errors(tmp_path, bad):
    with pytest.raises(fio.ConfigError):
        fio.load_config(_config(tmp_path, **bad))


def test_config_must_be_object(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("[1, 2]")
    with pytest.raises(fio.ConfigError):
        fio.load_config(str(p))
    p.write_text("{not json")
    with pytest.raises(fio.ConfigError):
        fio.load_config(str(p))


def test_certificate_validation_detects_tampering():
    from finslerfill.certificates import FillingCertificate
    cfg = fio.RunConfig(metric=SPECS["euclid"])
    cert = FillingCertificate({}, {"h": 0.02, "R": 3}, 4, 1.0, 0.1, 3.14, "bound-holds", "t")
    doc = fio.certificate_document(cert, cfg)
    assert fio.validate_certificate(doc)
    doc["config"]["n"] = 99
    with pytest.raises(ValueError):
        fio.validate_certificate(doc)
    with pytest.raises(ValueError):
        fio.validate_certificate({"I": 1.0})


# ---------------------------------------------------------------------------
# command line


def test_usage_errors_exit_1(tmp_path, capsys):
    assert _run(["frobnicate", "--config", _config(tmp_path)]) == 1
    assert _run(["area"]) == 1
    assert _run(["area", "--config", str(tmp_path / "none.json")]) == 1
    assert _run(["area", "--config", _config(tmp_path), "--h", "5"]) == 1
    assert "error" in capsys.readouterr().err


def test_area_command(tmp_path):
    out = tmp_path / "o"
    assert _run(["area", "--config", _config(tmp_path), "--out", str(out)]) == 0
    doc = json.loads((out / "area.json").read_text())
    assert doc["ht_area"] == pytest.approx(2 * np.pi, rel=0.02)
    assert doc["busemann_area"] == pytest.approx(2 * np.pi, rel=0.02)
    assert doc["config"]["n"] == 8


def test_distance_command_csv(tmp_path):
    out = tmp_path / "o"
    assert _run(["distance", "--config", _config(tmp_path), "--out", str(out)]) == 0
    lines = (out / "distance_matrix.csv").read_text().splitlines()
    assert len(lines) == 9 and lines[0].startswith("angle,q0")
    header, data = fio.read_csv(out / "distance_matrix.csv")
    assert data.shape == (8, 9)
    assert np.all(np.diag(data[:, 1:]) == 0)


def test_lowerbound_certificate_schema(tmp_path):
    out = tmp_path / "o"
    cfg = _config(tmp_path, metric=SPECS["euclid"], schedule=[4, 8])
    assert _run(["lowerbound", "--config", cfg, "--out", str(out)]) == 0
    doc = json.loads((out / "certificate.json").read_text())
    for k in ("metrics", "mesh", "n", "I", "error_bar", "ht_area", "verdict", "tool_version", "config_hash"):
        assert k in doc
    assert set(doc["mesh"]) == {"h", "R"}
    assert doc["verdict"] == "bound-holds"
    assert fio.validate_certificate(doc)
    assert (out / "convergence.csv").read_text().splitlines()[0] == \
        "n,I_interior,I_boundary,excluded_error,richardson,error_bar"


def test_verify_hypothesis_failure_exits_2(tmp_path):
    small = {"family": "scaled", "params": {"scale": 0.5, "base": SPECS["euclid"]}}
    cfg = _config(tmp_path, metric=small, metric0=SPECS["euclid"])
    out = tmp_path / "o"
    assert _run(["verify", "--config", cfg, "--out", str(out)]) == 2
    assert json.loads((out / "certificate.json").read_text())["verdict"] == "inapplicable"


def test_verify_without_reference_is_usage_error(tmp_path):
    assert _run(["verify", "--config", _config(tmp_path), "--out", str(tmp_path / "o")]) == 1


def test_pu_nonreversible_exits_2(tmp_path):
    cfg = _config(tmp_path, metric=SPECS["randers"])
    assert _run(["pu", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_pu_command(tmp_path):
    out = tmp_path / "o"
    assert _run(["pu", "--config", _config(tmp_path, m=512), "--out", str(out)]) == 0
    doc = json.loads((out / "pu_report.json").read_text())
    assert doc["ratio"] == pytest.approx(1.0, abs=0.03) and doc["passed"]


def test_numeric_failure_exits_3(tmp_path, monkeypatch):
    def boom(cfg):
        raise FloatingPointError("overflow")
    monkeypatch.setitem(cli.HANDLERS, "area", boom)
    assert _run(["area", "--config", _config(tmp_path)]) == 3


@pytest.mark.parametrize("what", ["indicatrices", "geodesics", "hulls", "traces"])
def test_render_produces_valid_svg(tmp_path, what):
    out = tmp_path / "o"
    assert _run(["render", "--config", _config(tmp_path), "--what", what, "--out", str(out)]) == 0
    root = ET.parse(out / f"{what}.svg").getroot()
    assert root.tag.endswith("svg")
    assert len(list(root)) > 3


@pytest.mark.parametrize("command,files", [
    ("area", ["area.json"]),
    ("distance", ["distance_matrix.csv", "distance.json"]),
    ("render", ["indicatrices.svg"]),
    ("pu", ["pu_report.json"]),
])
def test_outputs_are_byte_identical(tmp_path, command, files):
    cfg = _config(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run([command, "--config", cfg, "--out", str(a)]) == 0
    assert _run([command, "--config", cfg, "--out", str(b)]) == 0
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_separate_processes_write_identical_bytes(tmp_path):
    import subprocess
    import sys
    cfg = _config(tmp_path)
    outs = []
    for d in ("p1", "p2"):
        r = subprocess.run([sys.executable, "-m", "finslerfill.cli", "distance", "--config", cfg,
                            "--out", str(tmp_path / d)], capture_output=True)
        assert r.returncode == 0, r.stderr
        outs.append((tmp_path / d / "distance.json").read_bytes())
    assert outs[0] == outs[1]
