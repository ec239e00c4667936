import json
from pathlib import Path

import pytest

import helpers
from insultsense.cli import RUN_MANIFEST, build_parser, main
from insultsense.corpus import escape_comment

SMALL_TRAIN = {"max_epochs": 3, "embedding_dim": 32, "hidden_size": 16, "min_freq": 1}


def _source_files(root: Path):
    texts, labels = helpers.synthetic_texts(120, seed=11)
    rows = [(y, "20120618192155Z", escape_comment(t)) for t, y in zip(texts, labels)]
    train = helpers.write_kaggle_csv(root / "train.csv", rows[:80])
    test = helpers.write_kaggle_csv(root / "test_with_solutions.csv", rows[80:], usage=True)
    return train, test, labels


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """ingest -> split -> train on a synthetic corpus, shared across tests."""
    root = tmp_path_factory.mktemp("cli")
    train, test, labels = _source_files(root)
    assert main(["ingest", "--train", str(train), "--test", str(test), "--out", str(root / "work")]) == 0
    assert main(["split", "--merged", str(root / "work" / "train_merged.csv"), "--seed", "3",
                 "--out", str(root / "work" / "split")]) == 0
    config = {
        "data": {"merged_csv": "work/train_merged.csv", "split_manifest": "work/split/split.json"},
        "model": {"variant": "bilstm"},
        "train": SMALL_TRAIN,
        "out_dir": "runs/bilstm",
    }
    (root / "bilstm.json").write_text(json.dumps(config))
    assert main(["train", "--config", str(root / "bilstm.json")]) == 0
    return root, labels


def test_ingest_outputs(pipeline):
    root, labels = pipeline
    stats = json.loads((root / "work" / "stats.json").read_text())
    assert stats["merged"] == {"total": 120, "insulting": sum(labels), "neutral": 120 - sum(labels)}
    assert stats["train_file"]["total"] == 80 and stats["test_file"]["total"] == 40
    header = (root / "work" / "train_merged.csv").read_text().splitlines()[0]
    assert header == "Insult,Date,Comment"
    m = json.loads((root / "work" / RUN_MANIFEST).read_text())
    assert m["command"] == "ingest" and len(m["inputs"]) == 2
    assert all(len(h) == 64 for h in m["inputs"].values())


def test_split_outputs(pipeline):
    root, _ = pipeline
    split = json.loads((root / "work" / "split" / "split.json").read_text())
    assert split["seed"] == 3
    assert [len(split["ids"][k]) for k in ("train", "val", "test")] == [72, 24, 24]


def test_train_outputs(pipeline):
    root, _ = pipeline
    out = root / "runs" / "bilstm"
    for d in (out, out / "model"):
        m = json.loads((d / RUN_MANIFEST).read_text())
        assert m["command"] == "train"
        assert m["config"]["seed"] == 42
        assert m["split"]["seed"] == 3
        assert m["kind"]["variant"] == "bilstm"
        assert m["tool_version"]
        assert m["report"].endswith("report.json")
    rep = json.loads((out / "report.json").read_text())
    assert rep["model_id"] == "BiLSTM"


def test_evaluate_is_byte_identical(pipeline):
    root, _ = pipeline
    args = ["evaluate", "--model", str(root / "runs" / "bilstm" / "model"),
            "--split", str(root / "work" / "split" / "split.json")]
    assert main(args + ["--out", str(root / "eval_a")]) == 0
    assert main(args + ["--out", str(root / "eval_b")]) == 0
    a = (root / "eval_a" / "report.json").read_bytes()
    assert a == (root / "eval_b" / "report.json").read_bytes()
    assert a == (root / "runs" / "bilstm" / "report.json").read_bytes()
    assert (root / "eval_a" / RUN_MANIFEST).is_file()


def test_replay_same_accuracy(pipeline):
    root, _ = pipeline
    assert main(["train", "--config", str(root / "bilstm.json"), "--out", str(root / "replay")]) == 0
    first = json.loads((root / "runs" / "bilstm" / "report.json").read_text())
    again = json.loads((root / "replay" / "report.json").read_text())
    assert first["accuracy"] == again["accuracy"]
    assert first == again


def test_train_flag_overrides(pipeline):
    root, _ = pipeline
    assert main(["train", "--config", str(root / "bilstm.json"), "--out", str(root / "o"), "--seed", "5",
                 "--set", "max_epochs=1"]) == 0
    m = json.loads((root / "o" / RUN_MANIFEST).read_text())
    assert m["config"]["seed"] == 5 and m["config"]["max_epochs"] == 1


def test_compare_with_baseline(tmp_path):
    reports = []
    for name, acc in [("A", 0.9), ("B", 0.85), ("C", 0.8), ("D", 0.7), ("E", 0.6)]:
        n = 100
        correct = int(acc * n)
        gold = [1] * 30 + [0] * 70
        pred = gold[:correct] + [1 - g for g in gold[correct:]]
        from insultsense.evaluation import report

        p = tmp_path / f"{name}.json"
        p.write_text(report(name, gold, pred).to_json())
        reports.append(str(p))
    assert main(["compare", "--reports", *reports, "--out", str(tmp_path / "cmp")]) == 0
    import csv

    rows = list(csv.DictReader((tmp_path / "cmp" / "comparison.csv").open()))
    base = [r for r in rows if r["model"] == "baseline"]
    assert base and all(r["accuracy_pct"] == "82.18" for r in base)
    assert [r["model"] for r in rows][::2][:5] == ["A", "B", "C", "D", "E"]
    for f in ("comparison.md", "accuracy.png", "classification_report.png", "baseline_comparison.png", RUN_MANIFEST):
        assert (tmp_path / "cmp" / f).is_file()


def test_predict(pipeline, capsys, tmp_path):
    root, _ = pipeline
    model = str(root / "runs" / "bilstm" / "model")
    capsys.readouterr()
    assert main(["predict", "--model", model, "--text", "you idiot"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert 0 <= res["prob_insult"] <= 1 and res["label"] in ("insulting", "neutral")
    f = tmp_path / "in.txt"
    f.write_text("one\n\ntwo\nthree\n")
    assert main(["predict", "--model", model, "--file", str(f)]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 3


def test_unknown_flag_exits_nonzero(capsys):
    with pytest.raises(SystemExit) as e:
        main(["ingest", "--bogus"])
    assert e.value.code != 0
    assert "usage" in capsys.readouterr().err


def test_failure_is_one_line(tmp_path, capsys):
    code = main(["ingest", "--train", str(tmp_path / "nope.csv"), "--test", str(tmp_path / "x.csv"),
                 "--out", str(tmp_path / "o")])
    assert code == 1
    err = capsys.readouterr().err.strip()
    assert len(err.splitlines()) == 1 and "error" in err


def test_every_subcommand_has_help():
    parser = build_parser()
    for cmd in ("ingest", "split", "train", "evaluate", "compare", "predict", "serve"):
        with pytest.raises(SystemExit) as e:
            parser.parse_args([cmd, "--help"])
        assert e.value.code == 0


def test_bundled_configs_parse():
    from importlib import resources

    from insultsense.models import ModelKind, TrainConfig

    files = sorted(p for p in resources.files("insultsense.configs").iterdir() if p.name.endswith(".json"))
    assert len(files) == 5
    for f in files:
        cfg = json.loads(f.read_text())
        kind = ModelKind.from_dict(cfg["model"])
        TrainConfig.for_variant(kind.variant, **cfg["train"])
