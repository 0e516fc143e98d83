"""Score summaries against the influenced weights, pick a threshold, and
find the score bands where the rule cannot be trusted."""

import json
import tempfile
from pathlib import Path

from chaptercoder import pipeline, synthetic
from chaptercoder.categorize import (
    assign_bands,
    band_analysis,
    classify_reports,
    read_score_reports,
    sweep_thresholds,
)
from chaptercoder.pipeline import load_config

workdir = Path(tempfile.mkdtemp(prefix="chaptercoder-demo-"))
corpus = synthetic.write_corpus(workdir / "data")
cfg_path = workdir / "config.json"
cfg_path.write_text(json.dumps({
    "paths": {
        "notes": str(corpus["notes"]),
        "diagnoses": str(corpus["diagnoses"]),
        "lexicon": str(corpus["lexicon"]),
        "curated": str(corpus["curated"]),
        "runs_dir": str(workdir / "runs"),
    },
    "run_id": "demo",
}))
config = load_config(cfg_path)
pipeline.run_all(config, through="categorize")
reports, labels = read_score_reports(config.run_dir() / "scores.jsonl")

# Each summary's score is the sum of weights of the entities it mentions,
# every entity counted once.
sample = max(reports, key=lambda r: r.sum_cents)
print(f"doc {sample.doc_id}: SUM {sample.sum} from {sample.matched}")

# Sweep candidate thresholds: the chapter rate should stay high while the
# leakage from the rest class drops.
print("\ntau   chapter rate   rest leakage")
for row in sweep_thresholds(reports, labels, ["0.5", "1.0", "2.0"]):
    print(f"{row.tau:<5g} {row.chapter_rate:>12.0%} {row.rest_leakage:>14.0%}")

tau = 1.0
reports = classify_reports(reports, tau)
predicted = sum(1 for r in reports if r.predicted == "chapter")
print(f"\nat tau {tau}: {predicted} of {len(reports)} predicted chapter "
      f"(a score equal to tau goes to rest)")

# Bands are open intervals over the score axis; a band is faulty when the
# share of wrong-class documents inside it exceeds the cutoff.
bands = band_analysis(reports, labels, (0, 0.3, 0.6, 1, 1.5, 2, 3, 5.5), tau)
print("\nband          n1  n0  share  impurity  faulty")
for b in bands:
    interval = f"({b.lower:g}, {b.upper:g})"
    print(f"{interval:12s}{b.count_chapter:>4d}{b.count_rest:>4d} "
          f"{b.share:>6.1%} {b.impurity:>9.2f}  {b.faulty}")

flagged = [r.doc_id for r in assign_bands(reports, bands)
           if r.band is not None and bands[r.band].faulty]
print(f"\ndocs routed to human review: {sorted(flagged)}")
