"""Stage orchestration on the bundled synthetic admission corpus.

The expected numbers in this file are hand derivations from the corpus
construction (document frequencies over 8 chapter and 10 rest summaries),
not captured program output; synthetic.py documents the layout.
"""

import json

import pytest

from chaptercoder import cli, pipeline, synthetic
from chaptercoder.entities import read_weight_set
from chaptercoder.pipeline import ConfigError, MissingArtifactError, load_config
from chaptercoder.sectioner import read_summaries

RAW_CHAPTER_CENTS = {
    "anemia": 100, "bleeding": 50, "fatigue": 63, "hypertension": 50,
    "iron deficiency": 50, "pneumonia": 13, "renal failure": 13,
    "thrombocytopenia": 50, "transfusion": 75,
}
RAW_REST_CENTS = {
    "anemia": 10, "bleeding": 40, "fatigue": 60, "hypertension": 70,
    "iron deficiency": 0, "pneumonia": 30, "renal failure": 30,
    "thrombocytopenia": 0, "transfusion": 10,
}
DEBIASED_CENTS = {
    "anemia": 90, "bleeding": 10, "fatigue": 3,
    "iron deficiency": 50, "thrombocytopenia": 50, "transfusion": 65,
}
INFLUENCED_CENTS = {
    "anemia": 180, "bleeding": 10, "coagulopathy": 50, "fatigue": 3,
    "iron deficiency": 100, "thrombocytopenia": 100, "transfusion": 130,
}
EXPECTED_SUM_CENTS = {
    "100101": 513, "100102": 413, "100103": 513, "100104": 513,
    "100105": 423, "100106": 320, "100107": 240, "100108": 190,
    "100201": 133, "100202": 193, "100203": 13, "100204": 13,
    "100205": 13, "100206": 3, "100207": 0, "100208": 0,
    "100209": 0, "100210": 0,
}


def _write_config(tmp_path, corpus_paths, **extra):
    obj = {
        "paths": {
            "notes": str(corpus_paths["notes"]),
            "diagnoses": str(corpus_paths["diagnoses"]),
            "lexicon": str(corpus_paths["lexicon"]),
            "curated": str(corpus_paths["curated"]),
            "runs_dir": str(tmp_path / "runs"),
        },
        "chapter": {"prefixes": ["28"], "prefix_len": 2},
        "categorize": {"tau": 1.0},
        "models": {
            "codes": ["285"], "kinds": ["bigru_attn", "transformer"],
            "max_len": 48, "embed_dim": 12, "hidden_dim": 8, "heads": 2,
            "ffn_dim": 16, "epochs": 2, "batch_size": 4, "valid_fraction": 0.25,
        },
        "seed": 0,
        "run_id": "test-run",
    }
    obj.update(extra)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(obj))
    return path


@pytest.fixture(scope="module")
def finished_run(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("pipeline")
    corpus_paths = synthetic.write_corpus(tmp_path / "data")
    config = load_config(_write_config(tmp_path, corpus_paths))
    manifest = pipeline.run_all(config)
    return config, manifest


def test_ingest_and_sectionize_stats(finished_run):
    _, manifest = finished_run
    ingest = manifest["ingest"]["stats"]
    assert ingest["notes"] == 25
    assert ingest["notes_filtered"] == 1
    assert ingest["notes_empty_text"] == 1
    assert ingest["diagnosis_rows"] == 32
    assert ingest["diagnosis_rows_skipped"] == 2
    assert ingest["admissions"] == 23
    assert ingest["notes_without_diagnoses"] == 1
    assert ingest["diagnoses_without_note"] == 1
    assert ingest["duplicate_notes"] == 1
    assert manifest["sectionize"]["stats"] == {"summaries": 18, "excluded": 5}


def test_weight_stage_matches_hand_computation(finished_run):
    config, manifest = finished_run
    assert manifest["weights"]["stats"] == {
        "candidates": 9, "cleaned": 9, "debiased": 6, "influenced": 7,
    }
    run_dir = config.run_dir()
    assert read_weight_set(run_dir / "weights_raw_chapter.jsonl").cents == RAW_CHAPTER_CENTS
    raw_rest = read_weight_set(run_dir / "weights_raw_rest.jsonl")
    assert raw_rest.cents == RAW_REST_CENTS
    assert read_weight_set(run_dir / "weights_debiased.jsonl").cents == DEBIASED_CENTS
    influenced = read_weight_set(run_dir / "weights_influenced.jsonl")
    assert influenced.cents == INFLUENCED_CENTS
    assert influenced.provenance == {
        "anemia": "doubled", "iron deficiency": "doubled",
        "thrombocytopenia": "doubled", "transfusion": "doubled",
        "bleeding": "frequency", "fatigue": "frequency",
        "coagulopathy": "injected",
    }


def test_scores_match_hand_computation(finished_run):
    config, manifest = finished_run
    from chaptercoder.categorize import read_score_reports

    reports, labels = read_score_reports(config.run_dir() / "scores.jsonl")
    assert {r.doc_id: r.sum_cents for r in reports} == EXPECTED_SUM_CENTS
    assert manifest["categorize"]["stats"]["predicted_chapter"] == 10
    assert sum(labels.values()) == 8


def test_band_stage(finished_run):
    config, manifest = finished_run
    from chaptercoder.categorize import read_bands

    assert manifest["bands"]["stats"] == {"bands": 7, "faulty": 2, "banded_docs": 14}
    bands = read_bands(config.run_dir() / "bands.jsonl")
    by_bounds = {(b.lower, b.upper): b for b in bands}
    faulty_high = by_bounds[(1.0, 1.5)]
    assert (faulty_high.count_chapter, faulty_high.count_rest) == (0, 1)
    assert faulty_high.impurity == 1.0 and faulty_high.faulty
    mixed = by_bounds[(1.5, 2.0)]
    assert (mixed.count_chapter, mixed.count_rest) == (1, 1)
    assert mixed.impurity == 0.5 and mixed.faulty
    assert by_bounds[(3.0, 5.5)].count_chapter == 6
    # the four zero-sum docs sit on the lowest edge and are unbanded
    assert sum(b.total for b in bands) == 14


def test_artifact_count_and_rerun_hashes(finished_run):
    config, _ = finished_run
    manifest = pipeline.read_manifest(config)
    hashes = {
        path: digest
        for stage in manifest["stages"].values()
        for path, digest in stage["outputs"].items()
    }
    # 1 admissions + 1 summaries + 1 mentions + 4 weight sets + 1 scores
    # + 1 bands + (2 dataset splits + 2 models) for one code + 1 metrics
    assert len(hashes) == 14
    pipeline.run_all(config)
    manifest2 = pipeline.read_manifest(config)
    hashes2 = {
        path: digest
        for stage in manifest2["stages"].values()
        for path, digest in stage["outputs"].items()
    }
    assert hashes == hashes2


def test_missing_artifact_names_the_stage_to_run(tmp_path):
    corpus_paths = synthetic.write_corpus(tmp_path / "data")
    config = load_config(_write_config(tmp_path, corpus_paths))
    with pytest.raises(MissingArtifactError, match="run ingest first"):
        pipeline.run_stage("sectionize", config)
    with pytest.raises(MissingArtifactError, match="run sectionize first"):
        pipeline.run_stage("weights", config)
    with pytest.raises(MissingArtifactError, match="run categorize first"):
        pipeline.run_stage("bands", config)
    with pytest.raises(ConfigError):
        pipeline.run_stage("warp", config)


def test_reports(finished_run):
    config, _ = finished_run
    thresholds = pipeline.export_report(config, "thresholds")
    assert "influenced" in thresholds and "debiased" in thresholds
    # hand-computed sweep: at tau 1.0 influenced catches all 8 chapter docs
    # while 2 of 10 rest docs leak
    rows = [line.split() for line in thresholds.splitlines()]
    assert ["influenced", "1", "100.00%", "20.00%"] in rows
    assert ["debiased", "1", "75.00%", "10.00%"] in rows
    bands_report = pipeline.export_report(config, "bands")
    assert "faulty" in bands_report.splitlines()[0]
    metrics_report = pipeline.export_report(config, "metrics")
    assert "bigru_attn" in metrics_report and "average" in metrics_report
    interp = pipeline.export_report(config, "interpretation")
    assert "100201" in interp and "transfusion (1.3)" in interp
    with pytest.raises(ConfigError, match="thresholds, bands, metrics, interpretation"):
        pipeline.export_report(config, "nope")


def test_report_is_deterministic(finished_run):
    config, _ = finished_run
    for kind in pipeline.REPORT_KINDS:
        assert pipeline.export_report(config, kind) == pipeline.export_report(config, kind)


def test_config_validation(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"paths": {"notes": "n.csv"}}))
    with pytest.raises(ConfigError, match="diagnoses"):
        load_config(bad)
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="JSON"):
        load_config(bad)
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.json")
    edges = tmp_path / "edges.json"
    edges.write_text(json.dumps({
        "paths": {"notes": "n", "diagnoses": "d", "lexicon": "l"},
        "categorize": {"band_edges": [1.0, 1.0]},
    }))
    with pytest.raises(ConfigError, match="strictly increasing"):
        load_config(edges)


def test_env_overrides_paths(tmp_path):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({
        "paths": {"notes": "a.csv", "diagnoses": "b.csv", "lexicon": "c.txt"},
    }))
    env = {"CHAPTERCODER_NOTES": "/elsewhere/notes.csv"}
    config = load_config(cfg, env=env)
    assert config.notes_path == "/elsewhere/notes.csv"
    assert config.diagnoses_path == str(tmp_path / "b.csv")


def test_relative_paths_resolve_against_config_dir(tmp_path):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({
        "paths": {"notes": "data/n.csv", "diagnoses": "d.csv", "lexicon": "l.txt"},
    }))
    config = load_config(cfg, env={})
    assert config.notes_path == str(tmp_path / "data" / "n.csv")
    assert config.runs_dir == str(tmp_path / "runs")


def test_run_id_defaults_to_config_hash_prefix(tmp_path):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({
        "paths": {"notes": "n", "diagnoses": "d", "lexicon": "l"},
    }))
    config = load_config(cfg, env={})
    assert config.resolved_run_id() == f"run-{config.config_hash()[:12]}"
    named = load_config(cfg, env={}, run_id="mine")
    assert named.resolved_run_id() == "mine"


def test_make_code_dataset_stratified_and_capped(finished_run):
    config, _ = finished_run
    summaries = read_summaries(config.run_dir() / "summaries.jsonl")
    labels = pipeline.summary_labels(summaries, config.label_spec())
    chapter = [(s, c) for s, c in summaries if labels[s.admission_id] == 1]
    ds = pipeline.make_code_dataset(chapter, "285", valid_fraction=0.25, seed=0)
    all_docs = ds.train + ds.valid
    assert len(all_docs) == 8
    # 2859, 28522, 2851 are the 285-prefix admissions
    positives = {d.doc_id for d in all_docs if d.label == 1}
    assert positives == {"100101", "100102", "100107"}
    again = pipeline.make_code_dataset(chapter, "285", valid_fraction=0.25, seed=0)
    assert again == ds
    capped = pipeline.make_code_dataset(chapter, "285", valid_fraction=0.0, seed=0, rest_cap=2)
    assert sum(1 for d in capped.train if d.label == 0) == 2
    assert sum(1 for d in capped.train if d.label == 1) == 3


def test_eval_metrics_artifact(finished_run):
    config, manifest = finished_run
    assert manifest["eval"]["stats"] == {"models": 2}
    rows = [
        json.loads(line)
        for line in (config.run_dir() / "metrics.jsonl").read_text().splitlines()
    ]
    assert {(r["code"], r["kind"]) for r in rows} == {
        ("285", "bigru_attn"), ("285", "transformer"),
    }
    for row in rows:
        for key in ("micro_f1", "macro_f1", "tpr", "tnr", "precision", "recall", "f1"):
            assert 0.0 <= row[key] <= 1.0


# -------------------------------------------------------------------- CLI

def test_cli_stage_chain_and_exit_codes(tmp_path, capsys):
    corpus_paths = synthetic.write_corpus(tmp_path / "data")
    cfg = _write_config(tmp_path, corpus_paths)

    assert cli.main(["weights", "--config", str(cfg)]) == 2
    assert "run sectionize first" in capsys.readouterr().err

    assert cli.main(["ingest", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert json.loads(out)["stage"] == "ingest"

    for stage in ("sectionize", "entities", "weights", "categorize", "bands"):
        assert cli.main([stage, "--config", str(cfg)]) == 0
    capsys.readouterr()

    assert cli.main(["report", "--config", str(cfg), "--kind", "bands"]) == 0
    assert "impurity" in capsys.readouterr().out

    assert cli.main(["report", "--config", str(cfg), "--kind", "bogus"]) == 1
    assert "unknown report kind" in capsys.readouterr().err

    assert cli.main(["run", "--config", str(cfg), "--stage", "warp"]) == 1
    assert "unknown stage" in capsys.readouterr().err

    assert cli.main(["ingest", "--config", str(tmp_path / "nope.json")]) == 1
    assert "not found" in capsys.readouterr().err


def test_cli_run_id_flag_isolates_runs(tmp_path, capsys):
    corpus_paths = synthetic.write_corpus(tmp_path / "data")
    cfg = _write_config(tmp_path, corpus_paths)
    assert cli.main(["ingest", "--config", str(cfg), "--run", "other"]) == 0
    capsys.readouterr()
    assert (tmp_path / "runs" / "other" / "admissions.jsonl").exists()
