import json

import pytest

from kosmann import cli
from kosmann.specfile import fixture_path


def _run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_killing_suite_passes(capsys):
    code, out, _ = _run(capsys, "check", "schwarzschild", "--suite", "killing")
    data = json.loads(out)
    assert code == 0 and data["passed"] and data["suite"] == "killing"
    names = {r["name"] for r in data["records"]}
    assert any(n.startswith("killing:dt") for n in names)


def test_wrong_expectation_fails(tmp_path, capsys):
    text = fixture_path("flat2d").read_text().replace("dilation = false", "dilation = true")
    spec = tmp_path / "wrong.geo"
    spec.write_text(text)
    code, out, _ = _run(capsys, "check", str(spec), "--suite", "killing")
    assert code == 1
    failed = [r for r in json.loads(out)["records"] if not r["passed"]]
    assert [r["name"].split("@")[0] for r in failed] == ["killing:dilation"]


def test_invalid_inputs_exit_2(tmp_path, capsys):
    assert _run(capsys, "check", str(tmp_path / "missing.geo"), "--suite", "killing")[0] == 2
    bad = tmp_path / "bad.geo"
    bad.write_text('name = "b"\nsignature = "++"\n[chart.p]\ncoords = ["x"]\n')
    code, _, err = _run(capsys, "check", str(bad), "--suite", "killing")
    assert code == 2 and "spec error" in err
    code, _, _ = _run(capsys, "oracle", "flat4d", "--group", "so3", "--cases", "1")
    assert code == 2


def test_output_is_deterministic(capsys, tmp_path, monkeypatch):
    args = ("check", "s2", "--suite", "covariance", "--seed", "0x2a", "--no-runtime")
    _, first, _ = _run(capsys, *args)
    _, second, _ = _run(capsys, *args)
    assert first == second and json.loads(first)["seed"] == 42
    monkeypatch.setenv("KOSMANN_SEED", "42")
    out = tmp_path / "r.json"
    _run(capsys, "check", "s2", "--suite", "covariance", "--no-runtime", "--out", str(out))
    assert out.read_text() == first
    monkeypatch.setenv("KOSMANN_SEED", "-3")
    assert _run(capsys, "check", "s2", "--suite", "covariance")[0] == 2


def test_reduce_product(capsys):
    code, out, _ = _run(capsys, "reduce", "product_s2xs1", "--npoints", "5")
    data = json.loads(out)
    assert code == 0
    assert all(abs(p - 1.0) < 1e-12 for row in data["Phi"] for p in sum(row, []))
    assert data["diagnostics"]["reconstruction"] < 1e-9


def test_reduce_hopf_flux(capsys):
    code, out, _ = _run(capsys, "reduce", "s3_hopf", "--npoints", "5")
    data = json.loads(out)
    assert code == 0 and data["flux_over_period"] == pytest.approx([-1.0], rel=1e-3)


def test_reduce_without_kk_block(capsys):
    assert _run(capsys, "reduce", "flat2d")[0] == 2


def test_witness_suite(capsys):
    code, out, _ = _run(capsys, "check", "flat2d", "--suite", "noncovariance-witness")
    assert code == 0
    assert all(r["passed"] for r in json.loads(out)["records"])


def test_oracle_command(capsys):
    code, out, _ = _run(capsys, "oracle", "flat2d", "--group", "so11", "--cases", "2",
                        "--npoints", "6", "--no-runtime")
    data = json.loads(out)
    assert code == 0 and len(data["records"]) == 2
    assert data["records"][0]["detail"]["natural_lift"] is True
