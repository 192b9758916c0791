import json
import math
import os
from pathlib import Path

import pytest

import reldata

DATA = Path(os.environ.get("RELDATA_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


def test_normalization_and_decision():
    assert reldata.normalize_yes(-3.0, -3.0) == 0.5
    assert math.isclose(reldata.normalize_yes(-1.0, -2.0), 1 / (1 + math.exp(-1)), rel_tol=1e-12)
    assert reldata.decide(0.4, 0.4) == 1
    assert reldata.decide(0.39, 0.4) == 0
    with pytest.raises(reldata.DataError):
        reldata.normalize_yes(float("inf"), 0.0)


def test_average_f1_display():
    assert reldata.format_half_up(reldata.average_f1(0.8965, 0.8897)) == "0.8931"
    assert reldata.format_half_up(reldata.average_f1(0.8896, 0.8833)) == "0.8865"


def test_f1_and_calibration():
    m = reldata.f1_positive(3, 1, 1)
    assert m["f1"] == 0.75
    assert reldata.f1_positive(0, 0, 0, 9)["degenerate"]
    grid = reldata.threshold_grid(0.01)
    assert 0.4 in grid and 0.2 in grid
    result = reldata.calibrate([0.9, 0.8, 0.3, 0.1], [1, 1, 0, 0])
    assert result["best_f1"] == 1.0
    with pytest.raises(reldata.ConfigError):
        reldata.calibrate([0.5], [1], mode="fancy")


def test_embedding_and_top_k():
    vectors = reldata.embed(["red shoes", "red shoe", "garden hose"])
    assert all(abs(sum(x * x for x in v) - 1.0) < 1e-9 for v in vectors)
    hits = reldata.top_k(vectors, vectors[0], 2, exclude=0)
    assert [i for i, _ in hits] == [1, 2]


def test_cli_and_pipeline(tmp_path):
    code, out, _ = reldata.cli("--json", "stats", "--in", DATA / "train.jsonl")
    assert code == 0
    assert json.loads(out)["rows"][0]["total"] == 600
    assert reldata.cli("frobnicate")[0] == 1

    manifest = reldata.run_pipeline(DATA / "pipeline.toml", tmp_path / "run")
    assert manifest["status"] == "ok"
    ledger = manifest["ledger"]
    assert ledger["input"] + ledger["augmented"] + ledger["negatives"] == (
        ledger["output"] + ledger["filtered"] + ledger["deduped"]
    )
    records = reldata.load_corpus(tmp_path / "run" / "final" / "corpus.jsonl")
    assert len(records) == ledger["output"]
