"""Run every pipeline stage from one config file, print the reports, and
walk the review queue the way the HTTP service serves it."""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from chaptercoder import pipeline, synthetic
from chaptercoder.pipeline import export_report, load_config
from chaptercoder.service import RunStore, create_app

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
    "models": {"codes": ["285"], "epochs": 3, "max_len": 48, "embed_dim": 12,
               "hidden_dim": 8, "heads": 2, "ffn_dim": 16, "batch_size": 4},
    "run_id": "demo",
}))
config = load_config(cfg_path)

stats_by_stage = pipeline.run_all(config)
for stage, record in stats_by_stage.items():
    print(f"{stage:10s} {record['stats']}")

for kind in ("thresholds", "bands", "metrics"):
    print(f"\n=== {kind} report ===")
    print(export_report(config, kind))

# The review service reads the finished run straight off disk. Decisions
# are appended to a log and replayed on restart; the export merges them
# over the automatic predictions.
client = TestClient(create_app(RunStore.from_config(config)))
queue = client.get("/runs/demo/queue").json()
print(f"=== review queue ({queue['total']} docs in faulty bands) ===")
for item in queue["items"]:
    print(f"doc {item['doc_id']}: SUM {item['sum']}, "
          f"band ({item['band']['lower']:g}, {item['band']['upper']:g}), "
          f"predicted {item['predicted']}")

doc_id = queue["items"][0]["doc_id"]
body = client.get(f"/runs/demo/docs/{doc_id}/interpretation").json()
print(f"\ninterpretation of doc {doc_id}:")
for m in body["matched"]:
    print(f"  {m['entity']} ({m['weight']})")

resp = client.post("/runs/demo/decisions",
                   json={"doc_id": doc_id, "verdict": "override"},
                   headers={"X-Coder-Id": "demo-coder"})
print(f"\noverride recorded: {resp.json()}")

export = client.get("/runs/demo/export").json()
decided = [row for row in export if row["source"] == "decision"]
print(f"export: {len(export)} rows, {len(decided)} from human decisions")
