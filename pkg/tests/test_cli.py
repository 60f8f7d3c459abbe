import json

import pytest

from kochflake.cli import run


def test_generate_curve_json(tmp_path):
    out = tmp_path / "curve.json"
    code = run(["generate", "--seq", "1", "--level", "3", "--json", str(out)])
    assert code == 0
    data = json.loads(out.read_text())
    assert len(data["vertices"]) == 4**3 + 1
    assert data["closed"] is False


def test_generate_snowflake_svg(tmp_path):
    svg = tmp_path / "flake.svg"
    code = run(["generate", "--seq", "1,3,2,1", "--level", "3", "--snowflake",
                "--svg", str(svg)])
    assert code == 0
    assert svg.read_text().startswith("<svg")


def test_generate_resource_cap_exit_code():
    assert run(["generate", "--seq", "3", "--level", "12"]) == 3


def test_unknown_flag_exits_with_usage(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["generate", "--seq", "1", "--level", "1", "--frobnicate"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err.lower()


def test_dims_example33(capsys):
    assert run(["dims", "--rule", "example33", "--n", "65536", "--json"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    data = json.loads(lines[0])
    assert abs(data["lower"] - 1.2225) < 5e-3
    assert abs(data["upper"] - 1.2395) < 5e-3


def test_carpet_command(tmp_path, capsys):
    out = tmp_path / "dom.json"
    code = run(["carpet", "--pattern", "0111;1000", "--kind", "domain",
                "--level", "2", "--json", str(out)])
    assert code == 0
    assert "dim_H 1.449" in capsys.readouterr().out
    assert json.loads(out.read_text())["closed"] is True


def test_tube_command_csv(tmp_path):
    out = tmp_path / "tube.csv"
    code = run(["tube", "--seq", "1", "--eps-from", "0.03", "--eps-to", "0.1",
                "--eps-per-decade", "4", "--csv", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "eps,mu,muErr,level,gridH"
    assert len(lines) >= 3


def test_heat_command_and_manifest(tmp_path):
    out = tmp_path / "heat.csv"
    manifest = tmp_path / "run.json"
    code = run(["--manifest", str(manifest), "heat", "--seq", "1", "--level", "2",
                "--method", "fd", "--s-from", "1e-3", "--s-to", "1e-3"])
    assert code == 0
    man = json.loads(manifest.read_text())
    assert man["command"] == "heat"
    assert "parameters" in man and "artifacts" in man


def test_heat_cache_idempotence(tmp_path, monkeypatch):
    monkeypatch.setenv("KOCHFLAKE_CACHE_DIR", str(tmp_path / "cache"))
    args = ["heat", "--seq", "1", "--level", "2", "--method", "fd",
            "--s-from", "1e-3", "--s-to", "1e-3", "--cache",
            "--out", str(tmp_path / "a.csv")]
    assert run(args) == 0
    args2 = args[:-1] + [str(tmp_path / "b.csv")]
    # identical parameters except the output path should still rerun cleanly;
    # identical full parameters must hit the cache
    assert run(args) == 0
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "s,E,stderr,method"


def test_heat_bad_grid_exits_2():
    assert run(["heat", "--seq", "1", "--level", "2", "--s-from", "0",
                "--s-to", "1e-3"]) == 2


def test_gbp_command(capsys):
    assert run(["gbp", "--alphabet", "1", "--probs", "1.0"]) == 0
    out = capsys.readouterr().out
    assert "gamma=1.26185950714" in out


def test_report_requires_inputs():
    assert run(["report"]) == 2
    assert run(["report", "--inputs", "does_not_exist.json"]) == 2


def test_report_aggregates_tube_profile(tmp_path, capsys):
    tube_json = tmp_path / "tube.json"
    assert run(["tube", "--seq", "1", "--eps-from", "0.02", "--eps-to", "0.2",
                "--eps-per-decade", "4", "--json", str(tube_json)]) == 0
    out = tmp_path / "report.json"
    assert run(["report", "--inputs", str(tube_json), "--out", str(out)]) == 0
    panels = json.loads(out.read_text())["panels"]
    assert panels[0]["kind"] == "tube"
    assert 1.0 < panels[0]["dimension"] < 2.0
