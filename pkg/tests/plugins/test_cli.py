import json

import pytest
import typer
from typer.testing import CliRunner

from cslab import Cslab
from cslab.cli.cli import main
from cslab.models import HypothesisReport, Verdict

runner = CliRunner()

WEAK = {
    "type": "leslie_gower",
    "lambda": [3, 3, 3],
    "a": [[1, 0.5, 0.5], [0.5, 1, 0.5], [0.5, 0.5, 1]],
}
FLAT = {
    "type": "leslie_gower",
    "lambda": [2, 2, 2],
    "a": [[1, 1, 1], [1, 1, 1], [1, 1, 1]],
}


@pytest.fixture
def app(in_tmp):
    app = typer.Typer()
    app.callback()(main)
    m = Cslab()
    m._pm.hook.cli(cslab=m, app=app)
    return app


def config(path, model=None, **extra):
    data = {"model": model, **extra} if model is not None else extra
    path.write_text(json.dumps(data))
    return str(path)


def invoke(app, *args):
    return runner.invoke(app, [*args, "--quiet", "--no-pretty"])


def test_version(app):
    result = runner.invoke(app, ["--version"])
    assert result.exit_code == 0
    assert "cslab CLI Version" in result.stdout


def test_simplex(app, in_tmp):
    path = config(in_tmp / "flat.json", FLAT)
    result = invoke(app, "simplex", "--config", path, "--level", "8", "--out", "out")
    assert result.exit_code == 0
    out = in_tmp / "out"
    for name in ("simplex", "invariance", "unorderedness", "attraction", "manifest"):
        assert (out / f"{name}.json").exists()
    for name in ("surface.csv", "surface.obj", "face_12.csv", "face_13.csv", "face_23.csv"):
        assert (out / name).exists()
    assert len((out / "surface.csv").read_text().splitlines()) == 1 + 45
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert manifest["targets"] == ["simplex"]
    assert {entry["path"] for entry in manifest["artifacts"]} >= {"surface.csv", "simplex.json"}


def test_reports_are_deterministic(app, in_tmp):
    path = config(in_tmp / "weak.json", WEAK)
    for out in ("a", "b"):
        assert invoke(app, "classify", "--config", path, "--out", out).exit_code == 0
    first = (in_tmp / "a" / "classify.json").read_text()
    assert first == (in_tmp / "b" / "classify.json").read_text()
    assert json.loads(first)["verdict"] == "NeatlyEmbeddedPredicted"


def test_fixed_points(app, in_tmp):
    path = config(in_tmp / "weak.json", WEAK)
    assert invoke(app, "fixed-points", "--config", path, "--out", "out").exit_code == 0
    report = json.loads((in_tmp / "out" / "fixed_points.json").read_text())
    assert len(report["axial"]) == 3
    assert len(report["interior"]) == 1


def test_hypotheses_pass(app, in_tmp):
    path = config(in_tmp / "weak.json", WEAK, hypotheses={"sample_budget": 50, "pair_budget": 50})
    result = invoke(app, "hypotheses", "--config", path, "--out", "out")
    assert result.exit_code == 0
    assert (in_tmp / "out" / "hypotheses.json").exists()


def test_hypotheses_fail_exit_three(app, in_tmp, mocker):
    failing = HypothesisReport(hypothesis="H2", violation_count=1, verdict=Verdict.Fail)
    mocker.patch("cslab.plugins.hypotheses.check_hypotheses", return_value=[failing])
    path = config(in_tmp / "weak.json", WEAK)
    result = invoke(app, "hypotheses", "--config", path, "--out", "out")
    assert result.exit_code == 3
    out = in_tmp / "out"
    assert json.loads((out / "hypotheses.json").read_text())["verdict"] == "Fail"
    error = json.loads((out / "error.json").read_text())
    assert error["type"] == "HypothesisViolation"
    assert error["exit_code"] == 3


def test_config_error_exit_one(app, in_tmp):
    path = config(in_tmp / "bad.json", WEAK, gird={"level": 8})
    result = invoke(app, "simplex", "--config", path, "--out", "out")
    assert result.exit_code == 1
    error = json.loads((in_tmp / "out" / "error.json").read_text())
    assert error["type"] == "ConfigError"
    assert "did you mean 'grid'" in error["message"]


def test_missing_model_exit_one(app, in_tmp):
    path = config(in_tmp / "empty.json")
    assert invoke(app, "classify", "--config", path, "--out", "out").exit_code == 1


def test_cone_on_flat_model_exit_two(app, in_tmp):
    path = config(in_tmp / "flat.json", FLAT)
    result = invoke(app, "cone", "--config", path, "--level", "8", "--out", "out")
    assert result.exit_code == 2
    error = json.loads((in_tmp / "out" / "error.json").read_text())
    assert error["type"] == "InsufficientSamples"
    manifest = json.loads((in_tmp / "out" / "manifest.json").read_text())
    assert manifest["status"] == "InsufficientSamples"


def test_level_out_of_range_exit_one(app, in_tmp):
    path = config(in_tmp / "flat.json", FLAT)
    assert invoke(app, "simplex", "--config", path, "--level", "2", "--out", "out").exit_code == 1


@pytest.mark.slow
def test_separation(app, in_tmp):
    path = config(
        in_tmp / "weak.json",
        WEAK,
        separation={"face": "12", "n_max": 30, "anchor": True},
    )
    result = invoke(app, "separation", "--config", path, "--level", "16", "--out", "out")
    assert result.exit_code == 0
    report = json.loads((in_tmp / "out" / "separation.json").read_text())
    assert report["anchored"]
    assert report["relative_error"] < 0.05


def test_sweep_requires_section(app, in_tmp):
    path = config(in_tmp / "sweep.json")
    assert invoke(app, "sweep", "--config", path, "--out", "out").exit_code == 1


def test_config_show(app, in_tmp):
    path = config(in_tmp / "weak.json", WEAK)
    result = runner.invoke(app, ["config", "show", "--config", path, "--level", "12"])
    assert result.exit_code == 0
    assert "level=12" in result.stdout


def test_clean(app, in_tmp):
    (in_tmp / "cslab-out").mkdir()
    result = runner.invoke(app, ["clean", "--dry-run"])
    assert result.exit_code == 0
    assert "would remove cslab-out" in result.stdout
    assert (in_tmp / "cslab-out").exists()
    assert runner.invoke(app, ["clean", "--quiet"]).exit_code == 0
    assert not (in_tmp / "cslab-out").exists()
