import csv
import io
import json
import math
import os
import subprocess
import sys

import pytest

from typelab.cli import main
from typelab.config import DEFAULTS, ConfigError, load_config, parse_config
from typelab.report import CSV_COLUMNS, fmt, jsonable

SMALL_GRID = {"start": 2, "ratio": 2, "count": 8}
# fine enough for every tail window to settle on the zoo families
MEDIUM_GRID = {"start": 2, "ratio": math.sqrt(2), "count": 16}
BORDERLINE = "log(2*pi) + log(1+abs(t)) + log(log(2+abs(t)))"


def write_config(tmp_path, doc, name="cfg.json"):
    doc = dict(doc)
    doc.setdefault("output", {"csv": str(tmp_path / "curves.csv"), "json": str(tmp_path / "report.json")})
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def run(argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


# -- parsing ------------------------------------------------------------------------


def test_defaults_applied():
    cfg = parse_config('{"families":[{"kind":"flat-cylinder"}]}')
    assert cfg.r_grid == {"start": 2.0, "ratio": math.sqrt(2.0), "count": 24}
    assert cfg.solver == DEFAULTS["solver"] and cfg.checks == "all" and cfg.seed == 0
    assert cfg.faults is None
    assert len(cfg.models()) == 1


def test_partial_section_merged():
    cfg = parse_config('{"families":[{"kind":"dprs"}], "r_grid":{"count":10}}')
    assert cfg.r_grid["count"] == 10 and cfg.r_grid["start"] == 2.0


def test_family_constraint_reported():
    with pytest.raises(ConfigError, match=r"families/0: .*alpha must be > 0"):
        parse_config('{"families":[{"kind":"power","alpha":-1}]}')


@pytest.mark.parametrize(
    "doc,path",
    [
        ({"families": [{"kind": "dprs"}], "colour": 1}, "<root>"),
        ({"families": [{"kind": "dprs", "beta": 2, "extra": 1}]}, "families/0"),
        ({"families": [{"kind": "dprs"}], "r_grid": {"ratio": 0.5}}, "r_grid/ratio"),
        ({"families": [{"kind": "dprs"}], "r_grid": {"count": 4}}, "r_grid/count"),
        ({"families": [{"kind": "dprs"}], "solver": {"tol": 0.1}}, "solver/tol"),
        ({"families": [{"kind": "dprs"}], "checks": ["thm9_9"]}, "checks"),
        ({"families": [{"kind": "warp"}]}, "families/0/kind"),
        ({}, "<root>"),
    ],
)
def test_schema_errors_carry_paths(doc, path):
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps(doc))
    assert str(info.value).startswith(path + ":")


def test_invalid_json():
    with pytest.raises(ConfigError, match="invalid JSON"):
        parse_config("{families")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(str(tmp_path / "absent.json"))


def test_round_trip():
    doc = {
        "families": [{"kind": "power", "alpha": 2.5}, {"kind": "mu-family", "mu": "log", "gamma": 1}],
        "r_grid": {"start": 1.5, "ratio": 1.5, "count": 9},
        "solver": {"tol": 1e-7, "max_grid_doublings": 6},
        "checks": ["thm1_4", "thm1_6"],
        "seed": 7,
        "jobs": 2,
        "output": {"csv": "a.csv", "json": "b.json"},
        "faults": {"t0": 2.0, "eigen_scale": {"euclid(n=2)": 1.25}},
    }
    cfg = parse_config(json.dumps(doc))
    assert cfg.to_dict() == doc
    assert parse_config(cfg.dumps()).dumps() == cfg.dumps()
    assert cfg.check_ids == ("thm1_4", "thm1_6")


def test_jsonable_rounding():
    assert jsonable({"x": 1 / 3, "y": math.inf, "z": [math.nan, 2]}) == {
        "x": 0.333333333333, "y": "inf", "z": ["nan", 2]}
    assert fmt(-math.inf) == "-inf" and fmt(2.0) == "2"


# -- runs ------------------------------------------------------------------------------


def test_euclid_run(tmp_path):
    path = write_config(tmp_path, {"families": [{"kind": "euclid", "n": 2}],
                                   "r_grid": {"start": 2, "ratio": 2, "count": 12}})
    code, text = run(["run", path])
    assert code == 0
    assert "summary: Pass=" in text
    with open(tmp_path / "curves.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 1 + 12
    for row in rows[1:]:
        assert float(row[4]) == pytest.approx(5.7832, rel=2e-3)
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["exit_code"] == 0
    assert report["thresholds"]["four_t0_sq"] == pytest.approx(18.6237490319)
    assert report["thresholds"]["lemma34_threshold"] == pytest.approx(6.9376, abs=5e-4)
    assert report["config"]["r_grid"]["count"] == 12
    (model,) = report["models"]
    assert model["type"]["classification"] == "Parabolic"
    assert model["profile"]["Lambda_star"]["status"] == "Converged"


def test_exp_report(tmp_path):
    path = write_config(tmp_path, {"families": [{"kind": "exp", "alpha": 1}], "r_grid": MEDIUM_GRID})
    code, _ = run(["run", path])
    assert code == 0
    (model,) = json.loads((tmp_path / "report.json").read_text())["models"]
    assert model["profile"]["LambdaTilde_star"]["value"] == pytest.approx(1.0, abs=0.05)
    assert model["profile"]["alpha_star_inf"]["value"] == pytest.approx(1.0, abs=0.05)


def test_row_count_and_skipped_rows(tmp_path):
    # exp(2) is capped at r = 30: the remaining grid points are explicit rows
    path = write_config(tmp_path, {"families": [{"kind": "exp", "alpha": 2}, {"kind": "flat-cylinder"}],
                                   "r_grid": SMALL_GRID, "checks": ["thm1_4"]})
    assert run(["run", path])[0] == 0
    with open(tmp_path / "curves.csv", newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    assert len(rows) == 2 * 8
    skipped = [r for r in rows if r[2] == "skipped"]
    assert [float(r[1]) for r in skipped] == [32.0, 64.0, 128.0, 256.0]


def test_coarse_grid_is_inconclusive(tmp_path):
    # 5 points below the exponential cap leave the decay rate unsettled
    path = write_config(tmp_path, {"families": [{"kind": "exp", "alpha": 1}], "r_grid": SMALL_GRID})
    code, text = run(["run", path])
    assert code == 2 and "Fail" not in text


def test_injected_fault_exit_one(tmp_path):
    path = write_config(tmp_path, {"families": [{"kind": "euclid", "n": 2}], "r_grid": SMALL_GRID,
                                   "faults": {"t0": 2.0}})
    code, text = run(["run", path])
    assert code == 1 and "Fail" in text


def test_eigen_fault_exit_one(tmp_path):
    path = write_config(tmp_path, {"families": [{"kind": "euclid", "n": 2}], "r_grid": SMALL_GRID,
                                   "faults": {"eigen_scale": {"euclid(n=2)": 1.25}}})
    assert run(["run", path])[0] == 1


def test_inconclusive_exit_two(tmp_path):
    fam = {"kind": "generic", "model_kind": "cylinder", "log_weight": BORDERLINE}
    path = write_config(tmp_path, {"families": [fam], "r_grid": SMALL_GRID})
    code, text = run(["run", path])
    assert code == 2 and "Inconclusive" in text
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["models"][0]["type"]["classification"] == "Inconclusive"


def test_config_error_exit_three(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"families":[{"kind":"power","alpha":-1}]}')
    assert run(["run", path])[0] == 3
    assert "alpha must be > 0" in capsys.readouterr().err


def test_unwritable_output_exit_three(tmp_path, capsys):
    target = tmp_path / "no" / "such" / "dir" / "out.csv"
    path = write_config(tmp_path, {"families": [{"kind": "flat-cylinder"}], "r_grid": SMALL_GRID,
                                   "checks": ["thm1_4"], "output": {"csv": str(target)}})
    assert run(["run", path])[0] == 3
    assert "cannot write" in capsys.readouterr().err


def test_byte_determinism(tmp_path):
    doc = {"families": [{"kind": "power", "alpha": 2}, {"kind": "dprs"}], "r_grid": MEDIUM_GRID}
    outputs = []
    for k, jobs in enumerate((1, 3)):
        d = tmp_path / f"run{k}"
        d.mkdir()
        path = write_config(d, doc)
        assert run(["run", path, "--jobs", jobs])[0] == 0
        outputs.append(((d / "curves.csv").read_bytes(), (d / "report.json").read_bytes()))
    csv_a, json_a = outputs[0]
    csv_b, json_b = outputs[1]
    assert csv_a == csv_b
    # the echoed config differs only in the jobs count and output paths
    a, b = json.loads(json_a), json.loads(json_b)
    for doc in (a, b):
        doc["config"].pop("jobs")
        doc["config"].pop("output")
    assert a == b


def test_repeat_runs_identical(tmp_path):
    path = write_config(tmp_path, {"families": [{"kind": "mu-family", "mu": "log", "gamma": 1}],
                                   "r_grid": SMALL_GRID})
    run(["run", path])
    first = (tmp_path / "curves.csv").read_bytes(), (tmp_path / "report.json").read_bytes()
    run(["run", path])
    assert first == ((tmp_path / "curves.csv").read_bytes(), (tmp_path / "report.json").read_bytes())


def test_output_overrides(tmp_path):
    path = write_config(tmp_path, {"families": [{"kind": "flat-cylinder"}], "r_grid": SMALL_GRID,
                                   "checks": ["thm1_4"]})
    alt = tmp_path / "alt.csv"
    assert run(["run", path, "--csv", alt])[0] == 0
    assert alt.exists()


def test_check_command(tmp_path):
    path = write_config(tmp_path, {"families": [{"kind": "flat-cylinder"}], "r_grid": SMALL_GRID,
                                   "checks": ["lemma3_1", "thm1_4"]})
    code, text = run(["check", path, "--seed", 5])
    assert code == 0
    assert "lemma3_1" in text and "thm1_4" in text
    assert not (tmp_path / "curves.csv").exists()
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["global_checks"][0]["check_id"] == "lemma3_1"


def test_thresholds_command():
    code, text = run(["thresholds"])
    assert code == 0
    table = dict(line.rsplit(None, 1) for line in text.strip().splitlines())
    assert float(table["t0"]) == pytest.approx(2.15776209485)
    assert float(table["4*t0^2"]) == pytest.approx(18.6237490319)
    assert float(table["4*log(2+sqrt(3))^2"]) == pytest.approx(6.93751240909)
    assert float(table["C2(4*log(2+sqrt(3))^2)"]) == pytest.approx(4.0, abs=1e-9)
    assert float(table["U(1)"]) == pytest.approx(2.95, abs=0.01)


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "typelab.cli", "thresholds"], capture_output=True,
                         text=True, env={**os.environ}, check=False)
    assert res.returncode == 0 and "t0" in res.stdout
