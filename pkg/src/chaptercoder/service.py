"""Human-review HTTP service.

Serves categorization runs for review: band summaries, a queue of documents
in faulty bands, per-document interpretations with highlight spans, decision
capture, and export of the validated label set.  Decisions are an
append-only JSONL log per run; resubmitting a document supersedes the
earlier decision but keeps it in the log.  Single-process only.
"""

from __future__ import annotations

import datetime as _dt
import json
import os
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Header, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .categorize import CHAPTER, REST, BandStat, CategorizationRun, assign_bands, read_bands, read_score_reports
from .entities import EntityLexicon, LexiconMatcher
from .pipeline import PipelineConfig
from .sectioner import ShortSummary, read_summaries

VERDICTS = ("confirm", "override")


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _not_found(message: str) -> ApiError:
    return ApiError(404, "not_found", message)


def _validation(message: str) -> ApiError:
    return ApiError(422, "validation_error", message)


@dataclass(frozen=True)
class DecisionRecord:
    seq: int
    doc_id: str
    verdict: str
    final_class: str
    coder: str
    timestamp: str


class LoadedRun:
    """One run's scores, bands, texts, and decision log."""

    def __init__(self, run_id: str, run_dir: Path, run: CategorizationRun, texts: dict):
        self.run_id = run_id
        self.run_dir = run_dir
        self.run = run
        self.texts = texts
        self.decisions: list[DecisionRecord] = []
        self.active: dict[str, DecisionRecord] = {}
        self._replay()

    @property
    def decisions_path(self) -> Path:
        return self.run_dir / "decisions.jsonl"

    def _replay(self) -> None:
        if not self.decisions_path.exists():
            return
        with open(self.decisions_path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                record = DecisionRecord(
                    seq=int(obj["seq"]), doc_id=obj["doc_id"], verdict=obj["verdict"],
                    final_class=obj["final_class"], coder=obj["coder"],
                    timestamp=obj["timestamp"],
                )
                self.decisions.append(record)
                self.active[record.doc_id] = record

    def queue_doc_ids(self) -> list[str]:
        """Docs in faulty bands, most impure band first, then ascending sum."""
        if not self.run.bands:
            raise ApiError(409, "bands_missing", f"run {self.run_id} has no band analysis; run bands first")
        items = [
            r for r in self.run.reports.values()
            if r.band is not None and self.run.bands[r.band].faulty
        ]
        items.sort(key=lambda r: (-self.run.bands[r.band].impurity, r.sum_cents, r.doc_id))
        return [r.doc_id for r in items]

    def status_of(self, doc_id: str) -> str:
        return "decided" if doc_id in self.active else "pending"

    def submit(self, doc_id: str, verdict: str, coder: str) -> tuple[DecisionRecord, bool]:
        report = self.run.reports.get(doc_id)
        if report is None:
            raise _not_found(f"no document {doc_id} in run {self.run_id}")
        if verdict not in VERDICTS:
            raise _validation(f"verdict must be one of: {', '.join(VERDICTS)}")
        predicted = report.predicted or REST
        if verdict == "confirm":
            final = predicted
        else:
            final = REST if predicted == CHAPTER else CHAPTER
        superseded = doc_id in self.active
        record = DecisionRecord(
            seq=len(self.decisions) + 1, doc_id=doc_id, verdict=verdict,
            final_class=final, coder=coder,
            timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat(),
        )
        with open(self.decisions_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record.__dict__, sort_keys=True))
            fh.write("\n")
        self.decisions.append(record)
        self.active[doc_id] = record
        return record, superseded

    def export_rows(self) -> list[dict]:
        rows = []
        for doc_id in sorted(self.run.reports):
            report = self.run.reports[doc_id]
            decision = self.active.get(doc_id)
            if decision is not None:
                label = 1 if decision.final_class == CHAPTER else 0
                source = "decision"
            else:
                label = 1 if report.predicted == CHAPTER else 0
                source = "automatic"
            rows.append({"doc_id": doc_id, "label": label, "source": source})
        return rows


class RunStore:
    """Loads runs lazily from a runs directory and keeps them cached."""

    def __init__(self, runs_dir, default_tau: float = 1.0, page_size: int = 50):
        self.runs_dir = Path(runs_dir)
        self.default_tau = default_tau
        self.page_size = page_size
        self._cache: dict[str, LoadedRun] = {}

    @classmethod
    def from_config(cls, config: PipelineConfig) -> "RunStore":
        return cls(config.runs_dir, default_tau=config.tau, page_size=config.page_size)

    def run_ids(self) -> list[str]:
        if not self.runs_dir.exists():
            return []
        return sorted(
            p.name for p in self.runs_dir.iterdir()
            if p.is_dir() and (p / "scores.jsonl").exists()
        )

    def get(self, run_id: str) -> LoadedRun:
        if run_id in self._cache:
            return self._cache[run_id]
        run_dir = self.runs_dir / run_id
        scores_path = run_dir / "scores.jsonl"
        if not scores_path.exists():
            raise _not_found(f"no run {run_id}")
        reports, labels = read_score_reports(scores_path)
        bands_path = run_dir / "bands.jsonl"
        bands: list[BandStat] = []
        if bands_path.exists():
            bands = read_bands(bands_path)
            reports = assign_bands(reports, bands)
        texts = {}
        summaries_path = run_dir / "summaries.jsonl"
        if summaries_path.exists():
            texts = {s.admission_id: s.text for s, _ in read_summaries(summaries_path)}
        tau = self._tau_from_manifest(run_dir)
        loaded = LoadedRun(
            run_id, run_dir,
            CategorizationRun(
                reports={r.doc_id: r for r in reports}, labels=labels, bands=bands, tau=tau,
            ),
            texts,
        )
        self._cache[run_id] = loaded
        return loaded

    def _tau_from_manifest(self, run_dir: Path) -> float:
        manifest_path = run_dir / "manifest.json"
        if manifest_path.exists():
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
            stats = manifest.get("stages", {}).get("categorize", {}).get("stats", {})
            if "tau" in stats:
                return float(stats["tau"])
        return self.default_tau


def entity_spans(text: str, entities) -> list[dict]:
    """Non-overlapping highlight spans for the given entities in text,
    longest match first at each position."""
    if not entities:
        return []
    matcher = LexiconMatcher(EntityLexicon(phrases=frozenset(entities), source="weights"))
    summary = ShortSummary(admission_id="", text=text, section_spans={})
    return [
        {"entity": m.entity, "start": m.span[0], "end": m.span[1]}
        for m in matcher.mentions(summary)
    ]


def _band_payload(band: BandStat | None) -> dict | None:
    if band is None:
        return None
    return {
        "index": band.index, "lower": band.lower, "upper": band.upper,
        "count_chapter": band.count_chapter, "count_rest": band.count_rest,
        "share": band.share, "impurity": band.impurity,
        "orientation": band.orientation, "faulty": band.faulty,
    }


class DecisionIn(BaseModel):
    doc_id: str
    verdict: str


def create_app(store: RunStore) -> FastAPI:
    app = FastAPI(title="chaptercoder review service", version="0.1.0")

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def _request_error(request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        where = ".".join(str(p) for p in first.get("loc", ()))
        message = f"{where}: {first.get('msg', 'invalid request')}" if where else "invalid request"
        return JSONResponse(status_code=422, content={"code": "validation_error", "message": message})

    def _queue_items(loaded: LoadedRun, status: str | None, band: int | None):
        doc_ids = loaded.queue_doc_ids()
        items = []
        for doc_id in doc_ids:
            report = loaded.run.reports[doc_id]
            if band is not None and report.band != band:
                continue
            doc_status = loaded.status_of(doc_id)
            if status is not None and doc_status != status:
                continue
            decision = loaded.active.get(doc_id)
            items.append({
                "doc_id": doc_id,
                "sum": report.sum,
                "band": _band_payload(loaded.run.bands[report.band]),
                "predicted": report.predicted,
                "status": doc_status,
                "final_class": decision.final_class if decision else None,
            })
        return items

    @app.get("/runs")
    def list_runs():
        out = []
        for run_id in store.run_ids():
            loaded = store.get(run_id)
            run = loaded.run
            faulty = [b for b in run.bands if b.faulty]
            queue_size = len(loaded.queue_doc_ids()) if run.bands else 0
            out.append({
                "run_id": run_id,
                "tau": run.tau,
                "docs": len(run.reports),
                "bands": len(run.bands),
                "faulty_bands": len(faulty),
                "queue_size": queue_size,
                "decided": len(loaded.active),
            })
        return out

    @app.get("/runs/{run_id}/bands")
    def get_bands(run_id: str):
        loaded = store.get(run_id)
        if not loaded.run.bands:
            raise ApiError(409, "bands_missing", f"run {run_id} has no band analysis; run bands first")
        return [_band_payload(b) for b in loaded.run.bands]

    @app.get("/runs/{run_id}/queue")
    def get_queue(
        run_id: str,
        status: str | None = Query(None),
        band: int | None = Query(None),
        page: int = Query(1, ge=1),
    ):
        loaded = store.get(run_id)
        if status is not None and status not in ("pending", "decided"):
            raise _validation('status must be "pending" or "decided"')
        if band is not None and not 0 <= band < len(loaded.run.bands):
            raise _validation(f"band index must be in [0, {len(loaded.run.bands)})")
        items = _queue_items(loaded, status, band)
        size = store.page_size
        start = (page - 1) * size
        return {
            "run_id": run_id,
            "page": page,
            "page_size": size,
            "total": len(items),
            "items": items[start:start + size],
        }

    @app.get("/runs/{run_id}/docs/{doc_id}/interpretation")
    def get_interpretation(run_id: str, doc_id: str):
        loaded = store.get(run_id)
        report = loaded.run.reports.get(doc_id)
        if report is None:
            raise _not_found(f"no document {doc_id} in run {run_id}")
        band = loaded.run.bands[report.band] if report.band is not None else None
        text = loaded.texts.get(doc_id, "")
        decision = loaded.active.get(doc_id)
        return {
            "doc_id": doc_id,
            "text": text,
            "sum": report.sum,
            "predicted": report.predicted,
            "band": _band_payload(band),
            "flagged_for_review": band.faulty if band else False,
            "status": loaded.status_of(doc_id),
            "final_class": decision.final_class if decision else None,
            "matched": [{"entity": e, "weight": w} for e, w in report.matched],
            "spans": entity_spans(text, [e for e, _ in report.matched]),
        }

    @app.post("/runs/{run_id}/decisions", status_code=201)
    def post_decision(
        run_id: str,
        body: DecisionIn,
        coder_id: str | None = Header(None, alias="X-Coder-Id"),
    ):
        if not coder_id:
            raise _validation("missing X-Coder-Id header")
        loaded = store.get(run_id)
        record, superseded = loaded.submit(body.doc_id, body.verdict, coder_id)
        return {
            "doc_id": record.doc_id,
            "verdict": record.verdict,
            "final_class": record.final_class,
            "coder": record.coder,
            "seq": record.seq,
            "superseded": superseded,
        }

    @app.get("/runs/{run_id}/export")
    def export(run_id: str):
        return store.get(run_id).export_rows()

    return app


def serve(config: PipelineConfig, port: int | None = None, host: str = "127.0.0.1") -> None:
    import uvicorn

    if port is None:
        raw = os.environ.get("CHAPTERCODER_PORT")
        port = int(raw) if raw else config.port
    uvicorn.run(create_app(RunStore.from_config(config)), host=host, port=port)
