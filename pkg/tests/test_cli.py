from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from strike import cli, runners
from strike.bundle import load_bundle
from strike.metrics import evaluate
from strike.stacking import predict_strike
from strike.synth import make_fixture, write_fixture
from strike.tabular import load_csv

POOL = ["logreg", {"kind": "tree", "max_depth": 3}]


@pytest.fixture
def project(tmp_path):
    paths = write_fixture(make_fixture("conditional_independent", 900, seed=1, per_group=4), tmp_path / "data")
    cfg = {"dataset": "data/data.csv", "grouping": {"strategy": "manual", "config": "data/data_groups.json"},
           "pool": POOL, "k": 2, "output_dir": "out", "ablation_seeds": [0, 1, 2, 3, 4]}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    return tmp_path, paths


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_train_writes_bundle_and_report(project, capsys):
    root, _ = project
    assert run("train", "--config", root / "cfg.json") == 0
    report = json.loads((root / "out" / "report.json").read_text())
    assert 0.5 < report["meta"]["cv_auc_mean"] <= 1
    assert set(report["test"]) == {"auc", "f1", "log_loss", "accuracy", "balanced_accuracy"}
    assert "meta cv auc" in capsys.readouterr().out


def test_train_is_byte_identical_across_runs_and_workers(project):
    root, _ = project
    run("train", "--config", root / "cfg.json", "--out", root / "a")
    run("train", "--config", root / "cfg.json", "--out", root / "b", "--workers", 3)
    assert (root / "a" / "bundle.json").read_bytes() == (root / "b" / "bundle.json").read_bytes()


def test_override_beats_config_file(project):
    root, _ = project
    run("train", "--config", root / "cfg.json", "--meta_kind", "additive_binned", "--k", "1")
    model, snapshot = load_bundle(root / "out" / "bundle.json")
    assert snapshot["meta_kind"] == "additive_binned" and snapshot["k"] == 1
    assert model.meta.kind == "additive_binned"


@pytest.mark.parametrize("override, field", [
    (["--meta_kind", "gam"], "meta_kind"),
    (["--grouping.strategy", "kmeans"], "grouping.strategy"),
    (["--pool", '["svm"]'], "pool"),
    (["--K", "1"], "K"),
    (["--colour", "red"], "colour"),
    (["--grouping.strategy", "corr"], "grouping.G"),
    (["--dataset", "missing.csv"], "dataset"),
])
def test_config_errors_exit_2(project, capsys, override, field):
    root, _ = project
    assert run("train", "--config", root / "cfg.json", *override) == 2
    assert field in capsys.readouterr().err


def test_missing_config_file_exit_2(tmp_path, capsys):
    assert run("train", "--config", tmp_path / "nope.json") == 2


def test_runtime_failure_exit_1(project, monkeypatch, capsys):
    root, _ = project

    def boom(cfg):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(runners, "run_train", boom)
    assert run("train", "--config", root / "cfg.json") == 1
    assert "disk on fire" in capsys.readouterr().err


def test_predict_and_evaluate(project, capsys):
    root, paths = project
    run("train", "--config", root / "cfg.json")
    bundle = root / "out" / "bundle.json"
    assert run("predict", "--bundle", bundle, "--input", paths["csv"], "--output", root / "s.csv") == 0
    rows = list(csv.DictReader((root / "s.csv").open()))
    scores = np.array([float(r["probability"]) for r in rows])
    assert [int(r["row_index"]) for r in rows] == list(range(900))
    assert np.all((scores > 0) & (scores < 1))

    model, _ = load_bundle(bundle)
    raw = load_csv(paths["csv"], "target")
    assert np.array_equal(scores, predict_strike(model, raw))
    capsys.readouterr()
    assert run("evaluate", "--bundle", bundle, "--input", paths["csv"], "--output", root / "m.json") == 0
    metrics = json.loads((root / "m.json").read_text())
    recomputed = evaluate(scores, raw.labels).values
    assert all(abs(metrics[k] - recomputed[k]) < 1e-12 for k in recomputed)


def test_in_memory_and_reloaded_predictions_match(project):
    root, paths = project
    cfg = cli.load_config(root / "cfg.json")
    model, _ = runners.run_train(cfg)
    cli.save_bundle(root / "x.json", model, cfg.model_snapshot())
    reloaded, _ = load_bundle(root / "x.json")
    raw = load_csv(paths["csv"], "target")
    assert np.array_equal(predict_strike(model, raw), predict_strike(reloaded, raw))


def test_schema_mismatch_and_single_class_exit_2(project, capsys):
    root, paths = project
    run("train", "--config", root / "cfg.json")
    bundle = root / "out" / "bundle.json"
    lines = paths["csv"].read_text().splitlines()
    (root / "bad.csv").write_text("\n".join(",".join(l.split(",")[1:]) for l in lines) + "\n")
    assert run("predict", "--bundle", bundle, "--input", root / "bad.csv", "--output", root / "z.csv") == 2
    single = [lines[0]] + [l for l in lines[1:] if l.endswith(",0")]
    (root / "one.csv").write_text("\n".join(single) + "\n")
    capsys.readouterr()
    assert run("evaluate", "--bundle", bundle, "--input", root / "one.csv") == 2
    assert "AUC is undefined" in capsys.readouterr().err


def test_bundle_version_mismatch_exit_2(project, capsys):
    root, paths = project
    run("train", "--config", root / "cfg.json")
    bundle = root / "out" / "bundle.json"
    body = json.loads(bundle.read_text())
    body["format_version"] = 2
    bundle.write_text(json.dumps(body))
    assert run("predict", "--bundle", bundle, "--input", paths["csv"], "--output", root / "z.csv") == 2
    assert "format_version" in capsys.readouterr().err


def test_ablate_groups_table(project):
    root, _ = project
    assert run("ablate-groups", "--config", root / "cfg.json", "--out", root / "ab") == 0
    rows = json.loads((root / "ab" / "ablate_groups.json").read_text())
    assert [r["strategy"] for r in rows] == ["manual", "mi", "corr"] + ["random"] * 5 + ["random_mean"]
    assert rows[0]["delta_vs_manual"] == 0.0
    first = (root / "ab" / "ablate_groups.csv").read_bytes()
    run("ablate-groups", "--config", root / "cfg.json", "--out", root / "ab")
    assert (root / "ab" / "ablate_groups.csv").read_bytes() == first


def test_ablate_groups_without_manual_config(project):
    root, _ = project
    args = ["--grouping.config", "null", "--grouping.G", "3", "--out", root / "ab2"]
    assert run("ablate-groups", "--config", root / "cfg.json", *args) == 0
    rows = json.loads((root / "ab2" / "ablate_groups.json").read_text())
    assert len(rows) == 2 + 5 + 1 and all(r["delta_vs_manual"] is None for r in rows)


def test_ablate_meta_and_benchmark_tables(project):
    root, _ = project
    assert run("ablate-meta", "--config", root / "cfg.json", "--out", root / "t") == 0
    rows = json.loads((root / "t" / "ablate_meta.json").read_text())
    assert [r["meta_kind"] for r in rows] == ["logistic", "additive_binned"] and all("cv_auc" in r for r in rows)
    assert run("benchmark", "--config", root / "cfg.json", "--out", root / "t") == 0
    rows = json.loads((root / "t" / "benchmark.json").read_text())
    assert [r["model"] for r in rows] == ["logreg", "tree", "orthodox_stacking", "strike"]


def test_cmi_outputs(project):
    root, _ = project
    assert run("cmi", "--config", root / "cfg.json", "--out", root / "c") == 0
    data = json.loads((root / "c" / "cmi.json").read_text())
    M = np.array(data["matrix"])
    assert np.array_equal(M, M.T) and data["settings"]["summary"] == "oof_logit"
    header = (root / "c" / "cmi.csv").read_text().splitlines()[0]
    assert header == "group,g0,g1,g2"


def test_synth_is_reproducible(tmp_path):
    for d in ("a", "b"):
        assert run("synth", "--kind", "xor_meta", "--n", 200, "--seed", 3, "--out", tmp_path / d) == 0
    assert (tmp_path / "a" / "data.csv").read_bytes() == (tmp_path / "b" / "data.csv").read_bytes()


def test_config_paths_resolve_against_config_directory(project, monkeypatch, tmp_path_factory):
    root, _ = project
    monkeypatch.chdir(tmp_path_factory.mktemp("elsewhere"))
    assert run("train", "--config", root / "cfg.json") == 0
    assert (root / "out" / "bundle.json").is_file()
