import json

import pytest

from paralab.pipelines import PIPELINES, Verdict, list_pipelines, resolve_params, run


def test_catalog_lists_every_pipeline():
    names = {p["name"] for p in list_pipelines()}
    assert names == set(PIPELINES)
    assert {"sharpness", "fu-ren", "psi-audit", "flattening-monotone"} <= names
    for entry in list_pipelines():
        assert entry["claim"]
        json.dumps(entry)


def test_unknown_pipeline_and_parameter():
    with pytest.raises(ValueError, match="unknown pipeline"):
        run("nope")
    with pytest.raises(ValueError, match="unknown parameter"):
        resolve_params("sharpness", {"colour": 1})


def test_randomized_pipeline_needs_seed():
    with pytest.raises(ValueError, match="pass a seed"):
        resolve_params("fu-ren", {})
    assert resolve_params("fu-ren", {"seed": 3})["seed"] == 3


def test_parameter_coercion():
    p = resolve_params("sharpness", {"levels": [6, 7, 8], "s": 1})
    assert p["levels"] == [6, 7, 8] and isinstance(p["s"], float)
    with pytest.raises(ValueError):
        resolve_params("sharpness", {"levels": "many"})


def test_verdict_relations():
    assert Verdict.check("a", 1.0, 1.2, 0.1, "<=").passed
    assert not Verdict.check("a", 1.4, 1.2, 0.1, "<=").passed
    assert Verdict.check("a", 1.15, 1.2, 0.1, ">=").passed
    assert not Verdict.check("a", 1.4, 1.2, 0.1, "abs").passed
    with pytest.raises(ValueError):
        Verdict.check("a", 1.0, 1.0, 0.1, "~")


def test_fourier_decay_record():
    rec = run("fourier-decay", {"R_levels": [4, 5, 6]})
    assert rec.passed
    assert rec.columns[0] in rec.to_csv().splitlines()[0]
    assert "timings" in json.loads(rec.to_json())
    assert rec.to_plotdata().startswith("#")


def test_csv_is_reproducible():
    a = run("psi-audit", {"samples": 2000, "anchors": 10, "transfer_anchors": 3, "seed": 7})
    b = run("psi-audit", {"samples": 2000, "anchors": 10, "transfer_anchors": 3, "seed": 7})
    assert a.passed
    assert a.to_csv() == b.to_csv()


def test_flattening_uses_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("PARALAB_CACHE", str(tmp_path))
    params = {"r_levels": [3], "kmax": 2}
    first = run("flattening-monotone", params)
    files = sorted(p.name for p in tmp_path.iterdir())
    assert files and all(f.endswith(".grid") for f in files)
    second = run("flattening-monotone", params)
    assert first.to_csv() == second.to_csv()
    assert first.passed


def test_forced_failure_is_reported():
    rec = run("smoothing", {"levels": [2, 3, 4], "tolerance": -5.0})
    assert not rec.passed
    assert not rec.verdicts[0].passed
