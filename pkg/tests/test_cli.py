import json
import subprocess
import sys

import pytest

from pitchipw import __version__
from pitchipw.cli import main
from pitchipw.io import read_json


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """synth, fit, estimate, stratify and diagnose on a small confounded sample."""
    d = tmp_path_factory.mktemp("pipe")
    assert run("synth", "--out", d / "syn", "--n", 6000, "--seed", 3) == 0
    assert run("fit", "--matrix", d / "syn/matrix.csv", "--out", d / "model.json", "--trees", 30, "--depth", 6,
               "--seed", 4) == 0
    res = d / "res"
    res.mkdir()
    assert run("estimate", "--matrix", d / "syn/matrix.csv", "--model", d / "model.json", "--bootstrap", 200,
               "--seed", 5, "--manifest", d / "syn/manifest.json", "--out", res / "estimate.json") == 0
    assert run("stratify", "--matrix", d / "syn/matrix.csv", "--model", d / "model.json", "--by", "batter_woba",
               "--edges=-inf,0.2,0.3,inf", "--min-n", 1500, "--bootstrap", 100, "--seed", 5,
               "--out", res / "strata.json") == 0
    assert run("diagnose", "--matrix", d / "syn/matrix.csv", "--model", d / "model.json", "--repeats", 2,
               "--seed", 6, "--out", res) == 0
    return d


def test_estimate_output(pipeline):
    est = read_json(pipeline / "res/estimate.json")
    assert est["outside_minus_inside"] == -est["tau"]
    assert est["ci"][0] <= est["tau"] <= est["ci"][1]
    assert est["ci_outside_minus_inside"] == [-est["ci"][1], -est["ci"][0]]
    assert est["n"]["treated"] + est["n"]["control"] == 6000
    assert est["oracle"]["true_tau"] == 0.006
    # the forest adjusts for the confounders: IPW is closer to the truth than the raw contrast
    assert abs(est["oracle"]["ipw_error"]) < abs(est["oracle"]["naive_error"])


def test_estimate_with_true_propensities(pipeline, tmp_path):
    out = tmp_path / "e.json"
    assert run("estimate", "--matrix", pipeline / "syn/matrix.csv", "--propensities", pipeline / "syn/oracle.csv",
               "--bootstrap", 100, "--seed", 1, "--out", out) == 0
    est = read_json(out)
    assert est["ci"][0] <= 0.006 <= est["ci"][1]


def test_reruns_are_byte_identical(pipeline, tmp_path):
    assert run("fit", "--matrix", pipeline / "syn/matrix.csv", "--out", tmp_path / "m.json", "--trees", 30,
               "--depth", 6, "--seed", 4) == 0
    assert (tmp_path / "m.json").read_bytes() == (pipeline / "model.json").read_bytes()
    assert run("estimate", "--matrix", pipeline / "syn/matrix.csv", "--model", tmp_path / "m.json",
               "--bootstrap", 200, "--seed", 5, "--manifest", pipeline / "syn/manifest.json",
               "--out", tmp_path / "estimate.json") == 0
    a = (tmp_path / "estimate.json").read_text()
    b = (pipeline / "res/estimate.json").read_text()
    # metadata records input paths, which differ here; the payload must match exactly
    assert json.loads(a)["tau"] == json.loads(b)["tau"]
    assert json.loads(a)["ci"] == json.loads(b)["ci"]
    assert run("synth", "--out", tmp_path / "syn", "--n", 6000, "--seed", 3) == 0
    for name in ("matrix.csv", "oracle.csv", "manifest.json"):
        assert (tmp_path / "syn" / name).read_bytes() == (pipeline / "syn" / name).read_bytes()


def test_report(pipeline, tmp_path):
    assert run("report", "--results", pipeline / "res", "--out", tmp_path) == 0
    text = (tmp_path / "summary.md").read_text()
    strata = read_json(pipeline / "res/strata.json")["strata"]
    excluded = [s for s in strata if not s["included"]]
    assert excluded, "the low-wOBA bin should fall under min-n"
    assert "insufficient sample" in text and "excluded [1]" in text
    for name in ("overlap.svg", "balance.svg", "importance.svg", "strata.svg"):
        assert (tmp_path / name).read_text().lstrip().startswith("<?xml")
    assert "| IPW estimate |" in text
    first = (tmp_path / "balance.svg").read_bytes()
    assert run("report", "--results", pipeline / "res", "--out", tmp_path) == 0
    assert (tmp_path / "balance.svg").read_bytes() == first


def test_report_flags_failing_features(pipeline, tmp_path):
    import shutil

    res = tmp_path / "res"
    shutil.copytree(pipeline / "res", res)
    assert run("diagnose", "--matrix", pipeline / "syn/matrix.csv", "--model", pipeline / "model.json",
               "--threshold", 0.0001, "--repeats", 1, "--seed", 1, "--out", res) == 0
    assert run("report", "--results", res) == 0
    assert "**FAIL**" in (res / "summary.md").read_text()


def test_report_missing_artifact(tmp_path, capsys):
    (tmp_path / "estimate.json").write_text("{}")
    assert run("report", "--results", tmp_path) == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "MissingArtifact" and "balance.csv" in err["message"]


def test_missing_input_names_path(tmp_path, capsys):
    missing = tmp_path / "nope.csv"
    code = run("fit", "--matrix", missing, "--out", tmp_path / "m.json", "--seed", 1)
    assert code == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["path"] == str(missing) and err["command"] == "fit"


def test_config_file_overridden_by_flags(pipeline, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bootstrap": 50, "level": 0.9, "seed": 2}))
    out = tmp_path / "e.json"
    assert run("estimate", "--config", cfg, "--level", 0.95, "--matrix", pipeline / "syn/matrix.csv",
               "--propensities", pipeline / "syn/oracle.csv", "--out", out) == 0
    est = read_json(out)
    assert est["level"] == 0.95 and est["bootstrap"]["B"] == 50 and est["bootstrap"]["seed"] == 2


def test_generated_seed_is_recorded(pipeline, tmp_path, capsys):
    out = tmp_path / "e.json"
    assert run("estimate", "--matrix", pipeline / "syn/matrix.csv", "--propensities", pipeline / "syn/oracle.csv",
               "--bootstrap", 20, "--out", out) == 0
    assert "generated seed" in capsys.readouterr().err
    meta = json.loads(out.read_text())
    assert isinstance(read_json(out)["bootstrap"]["seed"], int)
    assert "seed" in json.dumps(meta)


def test_season_pipeline(tmp_path):
    assert run("synth", "--kind", "season", "--seed", 11, "--out", tmp_path) == 0
    assert run("ingest", "--input", tmp_path / "pitches.csv", "--out", tmp_path / "events.csv") == 0
    summary = read_json(tmp_path / "events.summary.json")
    assert summary
    assert run("build-re", "--events", tmp_path / "events.csv", "--out", tmp_path / "re.csv") == 0
    assert run("featurize", "--events", tmp_path / "events.csv", "--re-table", tmp_path / "re.csv",
               "--out", tmp_path / "matrix.csv") == 0
    assert (tmp_path / "matrix.csv").stat().st_size > 0


def test_version_entry_point():
    out = subprocess.run([sys.executable, "-m", "pitchipw.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0
    assert out.stdout.strip() == f"pitchipw {__version__} (file format 1, model format pitchipw-forest/1)"
