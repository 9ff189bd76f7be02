import json
import os

import numpy as np
import pytest

from lobrep.cli import main
from lobrep.evaluate import read_results_csv
from lobrep.tensorfile import read_tensor


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    events_dir = root / "events"
    assert main(["synth", "--days", "3", "--events", "1500", "--seed", "11",
                 "--outdir", str(events_dir)]) == 0
    cache = root / "series.pkl"
    paths = sorted(str(p) for p in events_dir.glob("events_day*.csv"))
    assert main(["ingest", "--format", "events", "--tick-size", "0.01",
                 "--min-size", "1", "--out", str(cache), *paths]) == 0
    return root, cache


GRID_ARGS = ["--set", "N=6", "--set", "W=12", "--set", "k=20", "--set", "stride=4",
             "--set", "epochs=5", "--set", "patience=5", "--set", "lr=0.003",
             "--set", "seeds=0,1", "--set", "models=linear",
             "--set", "paradigms=none,both"]


def test_ingest_cache_hit(corpus, capsys):
    root, cache = corpus
    paths = sorted(str(p) for p in (root / "events").glob("events_day*.csv"))
    before = cache.read_bytes()
    assert main(["ingest", "--format", "events", "--tick-size", "0.01",
                 "--min-size", "1", "--out", str(cache), *paths]) == 0
    assert "cache hit" in capsys.readouterr().out
    assert cache.read_bytes() == before


def test_ingest_malformed_row_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("seq,kind,side,price,volume\n0,place,ask,10.02,5\n1,place,bid,oops,3\n")
    code = main(["ingest", "--format", "events", "--out", str(tmp_path / "c.pkl"), str(bad)])
    assert code == 2
    assert "row 3" in capsys.readouterr().err


def test_label_and_perturb_labels_identical(corpus, tmp_path):
    _, cache = corpus
    labels_a = tmp_path / "a.lobt"
    assert main(["label", "--series", str(cache), "--k", "20", "--out", str(labels_a)]) == 0
    perturbed = tmp_path / "pert.pkl"
    assert main(["perturb", "--series", str(cache), "--paradigm", "both",
                 "--out", str(perturbed)]) == 0
    labels_b = tmp_path / "b.lobt"
    assert main(["label", "--series", str(perturbed), "--k", "20", "--out", str(labels_b)]) == 0
    a, _ = read_tensor(labels_a)
    b, _ = read_tensor(labels_b)
    assert np.array_equal(a, b)
    # payloads byte-identical too
    assert labels_a.read_bytes() == labels_b.read_bytes()


def test_represent_dims(corpus, tmp_path):
    _, cache = corpus
    out = tmp_path / "mw.lobt"
    assert main(["represent", "--series", str(cache), "--scheme", "mw",
                 "--N", "10", "--W", "20", "--stride", "5", "--out", str(out)]) == 0
    arr, meta = read_tensor(out)
    assert arr.shape[1:] == (10, 41)
    assert meta["scheme"] == "mw"


def test_export_train_evaluate_round_trip(corpus, tmp_path):
    _, cache = corpus
    exp = tmp_path / "exports"
    assert main(["export", "--series", str(cache), "--outdir", str(exp),
                 "--set", "schemes=mw", *GRID_ARGS]) == 0
    x = exp / "mw_train_x.lobt"
    y = exp / "train_y.lobt"
    assert x.exists() and y.exists()
    arr, meta = read_tensor(x)
    assert meta["split"] == "train" and meta["labels"] == "train_y.lobt"

    model = tmp_path / "model.lobm"
    assert main(["train", "--x", str(x), "--y", str(y), "--model", "linear",
                 "--epochs", "5", "--lr", "0.003", "--out", str(model)]) == 0

    # evaluating the checkpoint on its training tensors reproduces the
    # metrics stored at train time
    stored = json.loads((tmp_path / "model.lobm.metrics.json").read_text())
    redo = tmp_path / "redo.json"
    assert main(["evaluate", "--model", str(model), "--x", str(x), "--y", str(y),
                 "--out", str(redo)]) == 0
    assert json.loads(redo.read_text())["metrics"] == stored["train"]

    out1 = tmp_path / "m1.json"
    out2 = tmp_path / "m2.json"
    test_x = exp / "mw_test_none_x.lobt"
    test_y = exp / "test_none_y.lobt"
    assert main(["evaluate", "--model", str(model), "--x", str(test_x),
                 "--y", str(test_y), "--out", str(out1)]) == 0
    assert main(["evaluate", "--model", str(model), "--x", str(test_x),
                 "--y", str(test_y), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()

    # export -> reimport round trip preserves payload bits
    arr2, _ = read_tensor(x)
    assert np.array_equal(arr, arr2)


def test_grid_outputs_and_determinism(corpus, tmp_path):
    _, cache = corpus
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    for outdir in (out1, out2):
        assert main(["grid", "--series", str(cache), "--outdir", str(outdir),
                     *GRID_ARGS]) == 0
    rows = read_results_csv(out1 / "results.csv")
    assert len(rows) == 4 * 2 * 2  # schemes x paradigms x seeds, linear only
    assert (out1 / "summary.json").exists()
    confusions = sorted(p.name for p in out1.glob("confusion_*.csv"))
    assert len(confusions) == 8
    for name in ("results.csv", "summary.json", *confusions):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
    summary = json.loads((out1 / "summary.json").read_text())
    assert summary["config"]["k"] == 20
    assert len(summary["grid"]) == 8


def test_grid_config_file_with_flag_override(corpus, tmp_path):
    _, cache = corpus
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        "# experiment config\n"
        "models=linear\nschemes=mw\nparadigms=none\nseeds=0\n"
        "N=6\nW=12\nk=20\nstride=6\nepochs=2\npatience=2\n"
    )
    outdir = tmp_path / "out"
    assert main(["grid", "--series", str(cache), "--config", str(cfg),
                 "--outdir", str(outdir), "--set", "seeds=0,1"]) == 0
    rows = read_results_csv(outdir / "results.csv")
    assert {r["seed"] for r in rows} == {0, 1}  # flag overrode the file


def test_grid_direct_flags(corpus, tmp_path):
    _, cache = corpus
    outdir = tmp_path / "direct"
    assert main(["grid", "--series", str(cache), "--outdir", str(outdir),
                 "--models", "linear", "--schemes", "mw,level_based",
                 "--paradigms", "none", "--seeds", "0,1", "--k", "20",
                 "--set", "N=6", "--set", "W=12", "--set", "stride=6",
                 "--set", "epochs=2", "--set", "patience=2"]) == 0
    rows = read_results_csv(outdir / "results.csv")
    assert len(rows) == 2 * 1 * 2  # schemes x paradigms x seeds
    assert (outdir / "table.txt").exists()


def test_grid_bare_seed_count(corpus, tmp_path):
    _, cache = corpus
    outdir = tmp_path / "count"
    assert main(["grid", "--series", str(cache), "--outdir", str(outdir),
                 "--models", "linear", "--schemes", "mw", "--paradigms", "none",
                 "--seeds", "3", "--k", "20", "--set", "N=6", "--set", "W=12",
                 "--set", "stride=6", "--set", "epochs=2", "--set", "patience=2"]) == 0
    rows = read_results_csv(outdir / "results.csv")
    assert {r["seed"] for r in rows} == {0, 1, 2}  # "3" is a seed count


def test_grid_rejects_unknown_scheme(corpus, tmp_path):
    _, cache = corpus
    code = main(["grid", "--series", str(cache), "--outdir", str(tmp_path / "x"),
                 "--set", "schemes=bogus"])
    assert code == 2
