import csv
import io
import json

import pytest

from contextuality import cli


def _run(capsys, *argv, environ=None):
    code = cli.run(list(argv), environ=environ or {})
    out, err = capsys.readouterr()
    return code, out, err


def _json(capsys, *argv, environ=None):
    code, out, _ = _run(capsys, *argv, environ=environ)
    assert code == 0
    return json.loads(out)


def test_bounds_eq7(capsys):
    rep = _json(capsys, "bounds", "--inequality", "eq7", "--deterministic")
    assert set(rep) == {"config", "results", "references"}
    res = rep["results"]
    assert res["bound"] == 1
    assert res["assignments_searched"] == 16
    assert res["negative_control"]["bound"] == 3
    assert set(res["witness"]) == {"XS", "YS", "XP", "YP", "XSYP", "YSXP"}


def test_bounds_eq6(capsys):
    assert _json(capsys, "bounds", "--inequality", "eq6")["results"]["bound"] == 3


def test_ideal(capsys):
    res = _json(capsys, "ideal")["results"]
    assert [row["expectation"] for row in res["table"]] == [-1, -1, 1, 1, -1]
    assert res["eq6"] == 5 and res["eq7"] == 3


def test_ks_check(capsys):
    res = _json(capsys, "ks-check")["results"]
    assert res["satisfying_all_five"] == 0
    assert res["max_satisfied"] == 4
    assert res["rhs_product"] == -1


def test_simulate(capsys):
    rep = _json(capsys, "simulate", "--inequality", "eq7", "--visibility", "0.7",
                "--shots", "100000", "--seed", "42", "--deterministic")
    res = rep["results"]
    assert res["violation"] is True
    assert abs(res["value"] - 2.1) <= 5 * res["stderr"]
    assert rep["config"]["seed"] == 42 and rep["config"]["shots"] == 100000


def test_simulate_byte_identical(capsys):
    args = ("simulate", "--shots", "5000", "--visibility", "0.8", "--misalignment", "0.1",
            "--seed", "3", "--deterministic")
    first = _run(capsys, *args)[1]
    second = _run(capsys, *args)[1]
    threaded = _run(capsys, *args, "--workers", "4")[1]
    assert first == second == threaded


def test_timestamp_only_without_deterministic(capsys):
    assert "generated_at" in _json(capsys, "ks-check")
    assert "generated_at" not in _json(capsys, "ks-check", "--deterministic")


def test_numbers_rounded_to_12_significant():
    assert cli._clean({"x": 1 / 3}) == {"x": 0.333333333333}
    assert cli._clean([float("inf")]) == ["inf"]


def test_sweep(capsys):
    res = _json(capsys, "sweep-visibility", "--points", "11")["results"]
    assert len(res["table"]) == 11
    assert abs(res["critical_visibility"]["eq7"] - 1 / 3) <= 1e-9


def test_verify_apparatus(capsys):
    res = _json(capsys, "verify-apparatus")["results"]
    assert res["all_passed"]
    assert all(res["scheme_iii_reuses_scheme_ii_front_end"].values())
    assert res["mixer_success_on_bell_state"]["XSYP"] == [0.5]


def test_chsh(capsys):
    res = _json(capsys, "chsh", "--visibility", "0.795")["results"]
    assert abs(res["ideal"] - 2.82842712475) < 1e-10
    assert res["at_visibility"] == pytest.approx(2.25, abs=0.01)


def test_csv_output(capsys):
    code, out, _ = _run(capsys, "ideal", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["context"] for r in rows] == ["C1", "C2", "C3", "C4", "C5"]


def test_output_file(tmp_path, capsys):
    target = tmp_path / "r.json"
    code, out, _ = _run(capsys, "bounds", "--output", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["results"]["bound"] == 1


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"shots": 500, "seed": 7, "inequality": "eq6"}))
    rep = _json(capsys, "simulate", "--config", str(cfg), "--seed", "8")
    assert rep["config"]["shots"] == 500
    assert rep["config"]["seed"] == 8
    assert rep["config"]["inequality"] == "eq6"


def test_env_seed(capsys):
    rep = _json(capsys, "simulate", "--shots", "10", environ={"CONTEXTUALITY_SEED": "123"})
    assert rep["config"]["seed"] == 123
    rep = _json(capsys, "simulate", "--shots", "10", "--seed", "5", environ={"CONTEXTUALITY_SEED": "123"})
    assert rep["config"]["seed"] == 5


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["simulate", "--unknown-flag"],
    ["simulate", "--shots", "0"],
    ["simulate", "--visibility", "1.5"],
    ["bounds", "--inequality", "eq9"],
    [],
])
def test_invalid_input_exit_1(capsys, argv):
    assert _run(capsys, *argv)[0] == 1


def test_bad_config_exit_1(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert _run(capsys, "bounds", "--config", str(cfg))[0] == 1
    assert _run(capsys, "bounds", "--config", str(tmp_path / "missing.json"))[0] == 1


def test_consistency_failure_exit_2(capsys, monkeypatch):
    from contextuality.errors import ConsistencyError

    def boom(cfg):
        raise ConsistencyError("probabilities do not sum to one")

    monkeypatch.setitem(cli.COMMANDS, "ideal", boom)
    assert _run(capsys, "ideal")[0] == 2


def test_help_exit_0(capsys):
    assert _run(capsys, "--help")[0] == 0
