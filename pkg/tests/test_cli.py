import csv
import json
import subprocess
import sys

import jsonschema
import pydot
import pytest

from citeshift.cli import run
from conftest import ROOT

SCHEMAS = ROOT / "docs" / "schemas"


def schema(name):
    return json.loads((SCHEMAS / f"{name}.schema.json").read_text())


def validate(path, name):
    data = json.loads(path.read_text())
    jsonschema.validate(data, schema(name))
    return data


@pytest.fixture
def synth_dir(tmp_path):
    out = tmp_path / "synth"
    assert run(["synth", "--scenario", "default", "--out", str(out)]) == 0
    return out


def test_help_lists_subcommands(capsys):
    assert run(["--help"]) == 0
    text = capsys.readouterr().out
    for name in ("stats", "diff", "rank", "categories", "env", "synth"):
        assert name in text


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "citeshift", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "citeshift" in proc.stdout


@pytest.mark.parametrize("argv", [["bogus"], [], ["diff", "only_one.csv"], ["env", "a.csv", "b.csv"]])
def test_usage_errors(argv):
    assert run(argv) == 2


def test_missing_file(tmp_path, capsys):
    assert run(["stats", str(tmp_path / "missing.csv")]) == 1
    assert "error" in capsys.readouterr().err


def test_malformed_input_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("citing,cited,count\nA,B,2\nA,B\n")
    assert run(["stats", str(bad)]) == 1
    assert "3" in capsys.readouterr().err


def test_stats(synth_dir, tmp_path, capsys):
    out = tmp_path / "stats"
    assert run(["stats", str(synth_dir / "prior.csv"), "--out", str(out)]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert validate(out / "stats.json", "stats") == printed
    assert printed["journals"] == 200


def test_synth_outputs(synth_dir):
    truth = validate(synth_dir / "truth.json", "truth")
    assert len(truth["affected"]) == 5
    validate(synth_dir / "synth_manifest.json", "manifest")
    assert json.loads((synth_dir / "config.json").read_text())["n_journals"] == 200


def test_null_diff_is_zero(tmp_path, capsys):
    out = tmp_path / "null"
    assert run(["synth", "--scenario", "null", "--out", str(out)]) == 0
    capsys.readouterr()
    assert run(["diff", str(out / "prior.csv"), str(out / "posterior.csv"), "--axis", "cited"]) == 0
    report = json.loads(capsys.readouterr().out)
    jsonschema.validate(report, schema("report"))
    assert report["file_i_millibits"] == 0


def test_synth_from_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_journals": 30, "n_clusters": 3, "events": [{"kind": "merge", "cluster_a": 0, "cluster_b": 1}]}))
    out = tmp_path / "o"
    assert run(["synth", "--config", str(cfg), "--out", str(out)]) == 0
    manifest = validate(out / "synth_manifest.json", "manifest")
    assert str(cfg) in manifest["inputs"]
    assert len(json.loads((out / "truth.json").read_text())["affected"]) == 20


def test_bad_config_is_data_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_journals": 0}))
    assert run(["synth", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_rank_files(synth_dir, tmp_path):
    out = tmp_path / "rank"
    assert run(["rank", str(synth_dir / "prior.csv"), str(synth_dir / "posterior.csv"), "--out", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    for part in ("file_level", "vector", "normalized_log2n", "normalized_n", "matrix", "omitted"):
        assert f"rank_cited_{part}.csv" in names
    with open(out / "rank_cited_vector.csv") as fh:
        top5 = [row["journal"] for row in csv.DictReader(fh)][:5]
    truth = json.loads((synth_dir / "truth.json").read_text())
    assert set(top5) == set(truth["affected"])


def test_categories(synth_dir, tmp_path):
    truth = json.loads((synth_dir / "truth.json").read_text())
    scheme = tmp_path / "scheme.csv"
    scheme.write_text("journal,category\n" + "".join(f"{j},C{c[0]}\n" for j, c in truth["clusters"].items()))
    out = tmp_path / "cat"
    argv = ["categories", str(synth_dir / "prior.csv"), str(synth_dir / "posterior.csv"), "--scheme", str(scheme)]
    assert run(argv + ["--out", str(out)]) == 0
    with open(out / "categories_cited.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["category"] == "C0"
    assert json.loads((out / "categories_cited_summary.json").read_text())["categories"] == 20
    assert run(argv[:-2] + ["--out", str(out)]) == 2


def test_env_zoom_and_dot(synth_dir, tmp_path):
    out = tmp_path / "env"
    argv = ["env", str(synth_dir / "prior.csv"), str(synth_dir / "posterior.csv"), "--seed", "J000", "--zoom"]
    assert run(argv + ["--out", str(out)]) == 0
    summary = validate(out / "env_J000_summary.json", "env_summary")
    assert [r["threshold_pct"] for r in summary["runs"]] == [1.0, 1.0, 2.0, 2.0]
    dots = sorted(out.glob("*.dot"))
    assert len(dots) == 4
    for path in dots:
        assert pydot.graph_from_dot_data(path.read_text())


def test_env_unknown_seed(synth_dir, tmp_path):
    argv = ["env", str(synth_dir / "prior.csv"), str(synth_dir / "posterior.csv"), "--seed", "NOPE", "--out", str(tmp_path)]
    assert run(argv) == 1


def test_name_changes_applied(tmp_path, capsys):
    prior = tmp_path / "p.csv"
    post = tmp_path / "q.csv"
    changes = tmp_path / "c.csv"
    prior.write_text("citing,cited,count\nB,OLD,4\nOLD,B,3\n")
    post.write_text("citing,cited,count\nB,NEW,4\nNEW,B,3\n")
    changes.write_text("old,new,kind\nOLD,NEW,rename\n")
    assert run(["diff", str(prior), str(post), "--changes", str(changes)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["dropped_journals"] == 0 and report["added_journals"] == 0
    assert report["file_i_bits"] == 0.0
