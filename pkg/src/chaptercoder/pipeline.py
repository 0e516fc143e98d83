"""Stage orchestration: declarative config, per-run artifact directory, and a
manifest recording sha256 hashes of everything each stage consumed and wrote.

Stages run one at a time in dependency order: ingest -> sectionize ->
entities -> weights -> categorize -> bands -> train -> eval.  Artifacts are
line-delimited records; reruns with identical inputs and config produce
byte-identical artifacts.
"""

from __future__ import annotations

import dataclasses
import datetime as _dt
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import entities as ent
from . import sectioner
from .categorize import (
    assign_bands,
    band_analysis,
    classify_reports,
    interpret,
    read_bands,
    read_score_reports,
    score_summary,
    sweep_thresholds,
    write_bands,
    write_score_reports,
    CategorizationRun,
)
from .corpus import (
    AdmissionRecord,
    LabelSpec,
    label_one_vs_rest,
    merge_admissions,
    parse_diagnoses,
    parse_notes,
    read_admissions,
    truncate_code,
    write_admissions,
)
from .metrics import Confusion, confusion, micro_macro_f1, prf1, tpr_tnr
from .nn.models import Dataset, LabeledDoc, ModelConfig, load_model, read_dataset, train as train_model, write_dataset

VERSION = "0.1.0"

STAGES = ("ingest", "sectionize", "entities", "weights", "categorize", "bands", "train", "eval")
REPORT_KINDS = ("thresholds", "bands", "metrics", "interpretation")

WEIGHT_FILES = {
    "raw_chapter": "weights_raw_chapter.jsonl",
    "raw_rest": "weights_raw_rest.jsonl",
    "debiased": "weights_debiased.jsonl",
    "influenced": "weights_influenced.jsonl",
}

# artifact -> stage that produces it, used to name the stage to run first
_PRODUCERS = [
    ("admissions.jsonl", "ingest"),
    ("summaries.jsonl", "sectionize"),
    ("mentions.jsonl", "entities"),
    (WEIGHT_FILES["influenced"], "weights"),
    ("scores.jsonl", "categorize"),
    ("bands.jsonl", "bands"),
    ("metrics.jsonl", "eval"),
]

_ENV_PATHS = {
    "CHAPTERCODER_NOTES": "notes_path",
    "CHAPTERCODER_DIAGNOSES": "diagnoses_path",
    "CHAPTERCODER_LEXICON": "lexicon_path",
    "CHAPTERCODER_CURATED": "curated_path",
    "CHAPTERCODER_ANNOTATIONS": "annotations_path",
    "CHAPTERCODER_RUNS_DIR": "runs_dir",
    "CHAPTERCODER_VALIDATED": "validated_labels_path",
}


class ConfigError(ValueError):
    """Bad configuration or invalid stage/report request (exit code 1)."""


class MissingArtifactError(FileNotFoundError):
    """Upstream stage has not produced its artifact yet (exit code 2)."""

    def __init__(self, path, stage):
        super().__init__(f"missing artifact {path}; run {stage} first")
        self.stage = stage


@dataclass(frozen=True)
class PipelineConfig:
    notes_path: str
    diagnoses_path: str
    lexicon_path: str | None
    curated_path: str | None
    runs_dir: str
    annotations_path: str | None = None
    section_patterns_path: str | None = None
    chapter_prefixes: tuple = ("28",)
    prefix_len: int = 2
    n_top: int = 10
    stop_list: tuple | None = None
    min_len: int = 2
    injected_weight: float = 0.5
    double_margin: float = 0.1
    tau: float = 1.0
    sweep_taus: tuple = (0.5, 1.0, 2.0)
    band_edges: tuple = (0.0, 0.3, 0.6, 1.0, 1.5, 2.0, 3.0, 5.5)
    impurity_cutoff: float = 0.25
    codes: tuple = ()
    model_kinds: tuple = ("bigru_attn", "transformer")
    max_len: int = 64
    embed_dim: int = 24
    hidden_dim: int = 16
    heads: int = 4
    ffn_dim: int = 32
    dropout: float = 0.2
    batch_size: int = 8
    learning_rate: float = 5e-3
    epochs: int = 5
    vocab_min_count: int = 1
    valid_fraction: float = 0.25
    rest_cap: int | None = None
    validated_labels_path: str | None = None
    page_size: int = 50
    port: int = 8470
    seed: int = 0
    run_id: str | None = None

    def model_config(self, kind) -> ModelConfig:
        return ModelConfig(
            kind=kind, max_len=self.max_len, embed_dim=self.embed_dim,
            hidden_dim=self.hidden_dim, heads=self.heads, ffn_dim=self.ffn_dim,
            dropout=self.dropout, batch_size=self.batch_size,
            learning_rate=self.learning_rate, epochs=self.epochs,
            vocab_min_count=self.vocab_min_count, seed=self.seed,
        )

    def label_spec(self) -> LabelSpec:
        return LabelSpec(target_prefixes=frozenset(self.chapter_prefixes), prefix_len=self.prefix_len)

    def config_hash(self) -> str:
        return _sha256_bytes(json.dumps(dataclasses.asdict(self), sort_keys=True).encode())

    def resolved_run_id(self) -> str:
        return self.run_id or f"run-{self.config_hash()[:12]}"

    def run_dir(self) -> Path:
        return Path(self.runs_dir) / self.resolved_run_id()


def _resolve(base: Path, value):
    if value is None:
        return None
    p = Path(value)
    return str(p if p.is_absolute() else base / p)


def load_config(path, env=None, run_id=None, seed=None) -> PipelineConfig:
    """Read the JSON config; relative paths resolve against the config file's
    directory.  Environment variables override paths (and only paths) here;
    the service port override is applied where the service starts."""
    env = os.environ if env is None else env
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")

    base = path.resolve().parent
    paths = raw.get("paths", {})
    weights = raw.get("weights", {})
    categorize = raw.get("categorize", {})
    models = raw.get("models", {})
    service = raw.get("service", {})
    chapter = raw.get("chapter", {})

    kwargs = dict(
        notes_path=_resolve(base, paths.get("notes")),
        diagnoses_path=_resolve(base, paths.get("diagnoses")),
        lexicon_path=_resolve(base, paths.get("lexicon")),
        curated_path=_resolve(base, paths.get("curated")),
        annotations_path=_resolve(base, paths.get("annotations")),
        section_patterns_path=_resolve(base, paths.get("section_patterns")),
        runs_dir=_resolve(base, paths.get("runs_dir", "runs")),
        chapter_prefixes=tuple(chapter.get("prefixes", ["28"])),
        prefix_len=int(chapter.get("prefix_len", 2)),
        n_top=int(weights.get("n_top", 10)),
        stop_list=tuple(weights["stop_list"]) if weights.get("stop_list") is not None else None,
        min_len=int(weights.get("min_len", 2)),
        injected_weight=float(weights.get("injected_weight", 0.5)),
        double_margin=float(weights.get("double_margin", 0.1)),
        tau=float(categorize.get("tau", 1.0)),
        sweep_taus=tuple(categorize.get("sweep_taus", [0.5, 1.0, 2.0])),
        band_edges=tuple(categorize.get("band_edges", [0.0, 0.3, 0.6, 1.0, 1.5, 2.0, 3.0, 5.5])),
        impurity_cutoff=float(categorize.get("impurity_cutoff", 0.25)),
        codes=tuple(models.get("codes", [])),
        model_kinds=tuple(models.get("kinds", ["bigru_attn", "transformer"])),
        max_len=int(models.get("max_len", 64)),
        embed_dim=int(models.get("embed_dim", 24)),
        hidden_dim=int(models.get("hidden_dim", 16)),
        heads=int(models.get("heads", 4)),
        ffn_dim=int(models.get("ffn_dim", 32)),
        dropout=float(models.get("dropout", 0.2)),
        batch_size=int(models.get("batch_size", 8)),
        learning_rate=float(models.get("learning_rate", 5e-3)),
        epochs=int(models.get("epochs", 5)),
        vocab_min_count=int(models.get("vocab_min_count", 1)),
        valid_fraction=float(models.get("valid_fraction", 0.25)),
        rest_cap=int(models["rest_cap"]) if models.get("rest_cap") is not None else None,
        validated_labels_path=_resolve(base, models.get("validated_labels")),
        page_size=int(service.get("page_size", 50)),
        port=int(service.get("port", 8470)),
        seed=int(raw.get("seed", 0)),
        run_id=raw.get("run_id"),
    )
    for var, field_name in _ENV_PATHS.items():
        if env.get(var):
            kwargs[field_name] = env[var]
    if run_id is not None:
        kwargs["run_id"] = run_id
    if seed is not None:
        kwargs["seed"] = int(seed)
    config = PipelineConfig(**kwargs)
    _validate_config(config)
    return config


def _validate_config(config: PipelineConfig) -> None:
    if not config.notes_path or not config.diagnoses_path:
        raise ConfigError("config must set paths.notes and paths.diagnoses")
    if config.annotations_path is None and not config.lexicon_path:
        raise ConfigError("config must set paths.lexicon or paths.annotations")
    if not config.chapter_prefixes:
        raise ConfigError("chapter.prefixes must be non-empty")
    if config.prefix_len not in (2, 3, 4, 5):
        raise ConfigError("chapter.prefix_len must be one of 2, 3, 4, 5")
    edges = list(config.band_edges)
    if len(edges) < 2 or any(a >= b for a, b in zip(edges, edges[1:])):
        raise ConfigError("categorize.band_edges must be strictly increasing with at least two edges")
    if config.tau < 0:
        raise ConfigError("categorize.tau must be >= 0")
    if not 0 <= config.valid_fraction < 1:
        raise ConfigError("models.valid_fraction must be in [0, 1)")
    for kind in config.model_kinds:
        config.model_config(kind)  # raises on inconsistent model settings


def _sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _manifest_path(config: PipelineConfig) -> Path:
    return config.run_dir() / "manifest.json"


def read_manifest(config: PipelineConfig) -> dict:
    path = _manifest_path(config)
    if path.exists():
        return json.loads(path.read_text(encoding="utf-8"))
    return {
        "run_id": config.resolved_run_id(),
        "version": VERSION,
        "config_hash": config.config_hash(),
        "stages": {},
    }


def _record_stage(config, stage, inputs, outputs, stats) -> dict:
    manifest = read_manifest(config)
    manifest["config_hash"] = config.config_hash()
    manifest["stages"][stage] = {
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {str(p): sha256_file(p) for p in outputs},
        "stats": stats,
        "completed_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    path = _manifest_path(config)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest["stages"][stage]


def _require(config: PipelineConfig, relpath: str) -> Path:
    path = config.run_dir() / relpath
    if not path.exists():
        stage = next(s for rel, s in _PRODUCERS if rel == relpath)
        raise MissingArtifactError(path, stage)
    return path


def _require_input(path, description) -> Path:
    if path is None:
        raise ConfigError(f"config does not set a path for {description}")
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{description} file not found: {p}")
    return p


def run_stage(stage: str, config: PipelineConfig) -> dict:
    """Run one stage; returns its manifest entry."""
    runners = {
        "ingest": _stage_ingest,
        "sectionize": _stage_sectionize,
        "entities": _stage_entities,
        "weights": _stage_weights,
        "categorize": _stage_categorize,
        "bands": _stage_bands,
        "train": _stage_train,
        "eval": _stage_eval,
    }
    if stage not in runners:
        raise ConfigError(f"unknown stage {stage!r}; stages are: {', '.join(STAGES)}")
    config.run_dir().mkdir(parents=True, exist_ok=True)
    return runners[stage](config)


def run_all(config: PipelineConfig, through: str = "eval") -> dict:
    if through not in STAGES:
        raise ConfigError(f"unknown stage {through!r}; stages are: {', '.join(STAGES)}")
    manifest = {}
    for stage in STAGES[: STAGES.index(through) + 1]:
        manifest[stage] = run_stage(stage, config)
    return manifest


def _stage_ingest(config: PipelineConfig) -> dict:
    notes_path = _require_input(config.notes_path, "notes")
    diagnoses_path = _require_input(config.diagnoses_path, "diagnoses")
    notes = parse_notes(notes_path)
    diagnoses = parse_diagnoses(diagnoses_path)
    admissions, merge_stats = merge_admissions(notes.records, diagnoses.rows)
    out = config.run_dir() / "admissions.jsonl"
    write_admissions(admissions, out)
    stats = {
        "notes": len(notes.records),
        "notes_filtered": notes.filtered,
        "notes_malformed": notes.malformed,
        "notes_empty_text": notes.empty_text,
        "diagnosis_rows": len(diagnoses.rows),
        "diagnosis_rows_skipped": diagnoses.skipped,
        "admissions": len(admissions),
        "notes_without_diagnoses": merge_stats.notes_without_diagnoses,
        "diagnoses_without_note": merge_stats.diagnoses_without_note,
        "duplicate_notes": merge_stats.duplicate_notes,
    }
    return _record_stage(config, "ingest", [notes_path, diagnoses_path], [out], stats)


def _stage_sectionize(config: PipelineConfig) -> dict:
    admissions_path = _require(config, "admissions.jsonl")
    inputs = [admissions_path]
    patterns = None
    if config.section_patterns_path:
        patterns_path = _require_input(config.section_patterns_path, "section patterns")
        patterns = sectioner.load_section_patterns(patterns_path)
        inputs.append(patterns_path)
    admissions = read_admissions(admissions_path)
    summaries, excluded = sectioner.summarize_corpus(admissions, patterns)
    out = config.run_dir() / "summaries.jsonl"
    sectioner.write_summaries(summaries, out)
    stats = {"summaries": len(summaries), "excluded": excluded}
    return _record_stage(config, "sectionize", inputs, [out], stats)


def _load_summaries(config: PipelineConfig):
    return sectioner.read_summaries(_require(config, "summaries.jsonl"))


def summary_labels(summaries_with_codes, spec: LabelSpec) -> dict:
    """Chapter-vs-rest label per summarized doc, from its diagnosis codes."""
    labels = {}
    for summary, codes in summaries_with_codes:
        record = AdmissionRecord(admission_id=summary.admission_id, text=summary.text, codes=tuple(codes))
        labels[summary.admission_id] = label_one_vs_rest(record, spec)
    return labels


def _stage_entities(config: PipelineConfig) -> dict:
    summaries_path = _require(config, "summaries.jsonl")
    summaries = sectioner.read_summaries(summaries_path)
    if config.annotations_path:
        source_path = _require_input(config.annotations_path, "annotations")
        imported = ent.ImportedAnnotations.load(source_path)
        imported.validate_corpus_ids([s.admission_id for s, _ in summaries])
        extractor = imported
        source = "imported"
    else:
        source_path = _require_input(config.lexicon_path, "lexicon")
        extractor = ent.LexiconMatcher(ent.load_lexicon(source_path))
        source = "lexicon"
    out = config.run_dir() / "mentions.jsonl"
    n_mentions = 0
    with open(out, "w", encoding="utf-8") as fh:
        for summary, _ in summaries:
            mentions = ent.extract_entities(summary, extractor)
            n_mentions += len(mentions)
            fh.write(json.dumps(
                {
                    "doc_id": summary.admission_id,
                    "entities": [
                        {"entity": m.entity, "span": list(m.span) if m.span else None}
                        for m in mentions
                    ],
                },
                sort_keys=True,
            ))
            fh.write("\n")
    stats = {"docs": len(summaries), "mentions": n_mentions, "source": source}
    return _record_stage(config, "entities", [summaries_path, source_path], [out], stats)


def _read_mentions(path) -> dict:
    by_doc = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            by_doc[obj["doc_id"]] = [
                ent.EntityMention(
                    entity=e["entity"], doc_id=obj["doc_id"],
                    span=tuple(e["span"]) if e.get("span") else None,
                )
                for e in obj["entities"]
            ]
    return by_doc


def _stage_weights(config: PipelineConfig) -> dict:
    summaries_path = _require(config, "summaries.jsonl")
    mentions_path = _require(config, "mentions.jsonl")
    summaries = sectioner.read_summaries(summaries_path)
    labels = summary_labels(summaries, config.label_spec())
    chapter_docs = [s for s, _ in summaries if labels[s.admission_id] == 1]
    rest_docs = [s for s, _ in summaries if labels[s.admission_id] == 0]
    if not chapter_docs or not rest_docs:
        raise ConfigError("weights stage needs at least one chapter and one rest document")

    mentions = _read_mentions(mentions_path)
    chapter_mentions = {s.admission_id: mentions.get(s.admission_id, []) for s in chapter_docs}
    n_top = min(config.n_top, max(1, sum(1 for v in chapter_mentions.values() for _ in v)))
    candidates = ent.top_prevalent(chapter_mentions, n_top)
    stop_list = frozenset(config.stop_list) if config.stop_list is not None else ent.DEFAULT_STOP_LIST
    cleaned = ent.clean_entity_list(candidates, stop_list, config.min_len)
    if not cleaned:
        raise ConfigError("no entities survived cleaning; widen n_top or the lexicon")

    raw_chapter = ent.doc_frequency_weights(cleaned, chapter_docs)
    raw_rest = ent.doc_frequency_weights(cleaned, rest_docs)
    debiased = ent.debias(raw_chapter, raw_rest)
    curated = ()
    inputs = [summaries_path, mentions_path]
    if config.curated_path:
        curated_path = _require_input(config.curated_path, "curated terms")
        curated = tuple(ent.load_lexicon(curated_path).phrases)
        inputs.append(curated_path)
    influence_config = ent.InfluenceConfig(
        curated_terms=frozenset(curated),
        injected_weight=config.injected_weight,
        double_margin=config.double_margin,
    )
    influenced = ent.influence(debiased, influence_config, raw_chapter, raw_rest)

    outputs = []
    for name, weight_set in (
        ("raw_chapter", raw_chapter), ("raw_rest", raw_rest),
        ("debiased", debiased), ("influenced", influenced),
    ):
        out = config.run_dir() / WEIGHT_FILES[name]
        ent.write_weight_set(weight_set, out)
        outputs.append(out)
    stats = {
        "candidates": len(candidates),
        "cleaned": len(cleaned),
        "debiased": len(debiased),
        "influenced": len(influenced),
    }
    return _record_stage(config, "weights", inputs, outputs, stats)


def _stage_categorize(config: PipelineConfig) -> dict:
    summaries_path = _require(config, "summaries.jsonl")
    weights_path = _require(config, WEIGHT_FILES["influenced"])
    summaries = sectioner.read_summaries(summaries_path)
    weights = ent.read_weight_set(weights_path)
    labels = summary_labels(summaries, config.label_spec())
    reports = [score_summary(s, weights) for s, _ in summaries]
    reports = classify_reports(reports, config.tau)
    out = config.run_dir() / "scores.jsonl"
    write_score_reports(reports, labels, out)
    n_chapter = sum(1 for r in reports if r.predicted == "chapter")
    stats = {"docs": len(reports), "predicted_chapter": n_chapter, "tau": config.tau}
    return _record_stage(config, "categorize", [summaries_path, weights_path], [out], stats)


def _stage_bands(config: PipelineConfig) -> dict:
    scores_path = _require(config, "scores.jsonl")
    reports, labels = read_score_reports(scores_path)
    bands = band_analysis(reports, labels, config.band_edges, config.tau, config.impurity_cutoff)
    out = config.run_dir() / "bands.jsonl"
    write_bands(bands, out)
    stats = {
        "bands": len(bands),
        "faulty": sum(1 for b in bands if b.faulty),
        "banded_docs": sum(b.total for b in bands),
    }
    return _record_stage(config, "bands", [scores_path], [out], stats)


def load_validated_labels(path) -> dict:
    """{doc_id: 0|1} from a review-service export file."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return {row["doc_id"]: int(row["label"]) for row in payload}


def _chapter_corpus(config: PipelineConfig, summaries):
    """Docs whose final chapter label is 1: reviewer-validated labels when an
    export file is configured, otherwise the diagnosis codes."""
    if config.validated_labels_path:
        validated = load_validated_labels(
            _require_input(config.validated_labels_path, "validated labels")
        )
        return [(s, codes) for s, codes in summaries if validated.get(s.admission_id) == 1]
    labels = summary_labels(summaries, config.label_spec())
    return [(s, codes) for s, codes in summaries if labels[s.admission_id] == 1]


def make_code_dataset(chapter_summaries, code: str, valid_fraction: float,
                      seed: int, rest_cap: int | None = None) -> Dataset:
    """One-vs-rest dataset for one code, within the chapter corpus, with a
    deterministic stratified train/valid split."""
    code = code.strip().upper()
    docs = []
    for summary, codes in chapter_summaries:
        label = int(any(truncate_code(c, len(code)) == code for c in codes))
        docs.append(LabeledDoc(doc_id=summary.admission_id, text=summary.text, label=label))
    rng = np.random.Generator(np.random.PCG64(seed))
    if rest_cap is not None:
        neg = [d for d in docs if d.label == 0]
        pos = [d for d in docs if d.label == 1]
        if len(neg) > rest_cap:
            keep = set(rng.choice(len(neg), size=rest_cap, replace=False).tolist())
            neg = [d for i, d in enumerate(neg) if i in keep]
        docs = sorted(pos + neg, key=lambda d: d.doc_id)
    train_docs, valid_docs = [], []
    for label in (0, 1):
        group = sorted((d for d in docs if d.label == label), key=lambda d: d.doc_id)
        order = rng.permutation(len(group))
        n_valid = int(len(group) * valid_fraction)
        chosen = set(order[:n_valid].tolist())
        for i, doc in enumerate(group):
            (valid_docs if i in chosen else train_docs).append(doc)
    train_docs.sort(key=lambda d: d.doc_id)
    valid_docs.sort(key=lambda d: d.doc_id)
    return Dataset(train=train_docs, valid=valid_docs)


def _stage_train(config: PipelineConfig) -> dict:
    summaries_path = _require(config, "summaries.jsonl")
    if not config.codes:
        raise ConfigError("models.codes is empty; nothing to train")
    summaries = sectioner.read_summaries(summaries_path)
    chapter_summaries = _chapter_corpus(config, summaries)
    if not chapter_summaries:
        raise ConfigError("chapter corpus is empty; cannot train per-code models")
    inputs = [summaries_path]
    if config.validated_labels_path:
        inputs.append(Path(config.validated_labels_path))
    outputs = []
    stats = {"codes": {}}
    for code in config.codes:
        dataset = make_code_dataset(
            chapter_summaries, code, config.valid_fraction, config.seed, config.rest_cap
        )
        code_dir = config.run_dir() / "models" / code
        code_dir.mkdir(parents=True, exist_ok=True)
        train_path = code_dir / "train.jsonl"
        valid_path = code_dir / "valid.jsonl"
        write_dataset(dataset.train, train_path)
        write_dataset(dataset.valid, valid_path)
        outputs.extend([train_path, valid_path])
        code_stats = {
            "train_pos": sum(d.label for d in dataset.train),
            "train": len(dataset.train),
            "valid": len(dataset.valid),
            "models": {},
        }
        for kind in config.model_kinds:
            try:
                model = train_model(dataset, config.model_config(kind))
            except ValueError as exc:
                raise ConfigError(f"cannot train {kind} for code {code}: {exc}")
            model_path = code_dir / f"{kind}.zip"
            model.save(model_path)
            outputs.append(model_path)
            code_stats["models"][kind] = {
                "final_train_loss": model.training_log[-1]["train_loss"],
                "final_train_acc": model.training_log[-1]["train_acc"],
            }
        stats["codes"][code] = code_stats
    return _record_stage(config, "train", inputs, outputs, stats)


def _flip(c: Confusion) -> Confusion:
    return Confusion(tp=c.tn, fp=c.fn, fn=c.fp, tn=c.tp)


def evaluate_model(model, docs) -> dict:
    """Confusion-derived metrics on labeled docs; micro/macro pool the
    positive class with its complement."""
    probs = model.predict_proba([d.text for d in docs])
    labels = [d.label for d in docs]
    conf = confusion(probs.tolist(), labels)
    p, r, f = prf1(conf)
    tpr, tnr = tpr_tnr(conf)
    micro, macro = micro_macro_f1({"positive": conf, "negative": _flip(conf)})
    return {
        "precision": p, "recall": r, "f1": f, "tpr": tpr, "tnr": tnr,
        "micro_f1": micro, "macro_f1": macro,
        "tp": conf.tp, "fp": conf.fp, "fn": conf.fn, "tn": conf.tn,
    }


def _stage_eval(config: PipelineConfig) -> dict:
    if not config.codes:
        raise ConfigError("models.codes is empty; nothing to evaluate")
    inputs = []
    rows = []
    for code in config.codes:
        code_dir = config.run_dir() / "models" / code
        valid_path = code_dir / "valid.jsonl"
        train_path = code_dir / "train.jsonl"
        for path in (train_path, valid_path):
            if not path.exists():
                raise MissingArtifactError(path, "train")
        docs = read_dataset(valid_path) or read_dataset(train_path)
        inputs.extend([train_path, valid_path])
        for kind in config.model_kinds:
            model_path = code_dir / f"{kind}.zip"
            if not model_path.exists():
                raise MissingArtifactError(model_path, "train")
            inputs.append(model_path)
            row = {"code": code, "kind": kind}
            row.update(evaluate_model(load_model(model_path), docs))
            rows.append(row)
    out = config.run_dir() / "metrics.jsonl"
    with open(out, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True))
            fh.write("\n")
    stats = {"models": len(rows)}
    return _record_stage(config, "eval", inputs, [out], stats)


def load_categorization_run(config: PipelineConfig) -> CategorizationRun:
    """scores + bands + band assignment, as one queryable object."""
    reports, labels = read_score_reports(_require(config, "scores.jsonl"))
    bands = read_bands(_require(config, "bands.jsonl"))
    reports = assign_bands(reports, bands)
    return CategorizationRun(
        reports={r.doc_id: r for r in reports}, labels=labels, bands=bands, tau=config.tau,
    )


def _format_table(header, rows) -> str:
    widths = [len(h) for h in header]
    rendered = [[str(c) for c in row] for row in rows]
    for row in rendered:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for row in rendered:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def export_report(config: PipelineConfig, kind: str) -> str:
    """Deterministic tabular text for one report kind."""
    if kind not in REPORT_KINDS:
        raise ConfigError(f"unknown report kind {kind!r}; kinds are: {', '.join(REPORT_KINDS)}")
    if kind == "thresholds":
        return _report_thresholds(config)
    if kind == "bands":
        return _report_bands(config)
    if kind == "metrics":
        return _report_metrics(config)
    return _report_interpretation(config)


def _report_thresholds(config: PipelineConfig) -> str:
    summaries = _load_summaries(config)
    labels = summary_labels(summaries, config.label_spec())
    rows = []
    for stage_name in ("raw_chapter", "debiased", "influenced"):
        weights = ent.read_weight_set(_require(config, WEIGHT_FILES[stage_name]))
        reports = [score_summary(s, weights) for s, _ in summaries]
        for row in sweep_thresholds(reports, labels, config.sweep_taus):
            rows.append([
                stage_name, f"{row.tau:g}",
                f"{row.chapter_rate:.2%}", f"{row.rest_leakage:.2%}",
            ])
    return _format_table(["weights", "tau", "chapter_rate", "rest_leakage"], rows)


def _report_bands(config: PipelineConfig) -> str:
    bands = read_bands(_require(config, "bands.jsonl"))
    rows = [
        [
            f"({b.lower:g}, {b.upper:g})", b.count_chapter, b.count_rest,
            f"{b.share:.2%}", f"{b.impurity:.2%}", b.orientation,
            "yes" if b.faulty else "no",
        ]
        for b in bands
    ]
    return _format_table(
        ["band", "count_1", "count_0", "share", "impurity", "orientation", "faulty"], rows
    )


def _report_metrics(config: PipelineConfig) -> str:
    path = _require(config, "metrics.jsonl")
    rows = []
    with open(path, encoding="utf-8") as fh:
        metrics_rows = [json.loads(line) for line in fh if line.strip()]
    by_kind = {}
    for m in metrics_rows:
        rows.append([
            m["code"], m["kind"], f"{m['micro_f1']:.2f}", f"{m['macro_f1']:.2f}",
            f"{m['tpr']:.2f}", f"{m['tnr']:.2f}",
        ])
        by_kind.setdefault(m["kind"], []).append(m)
    for kind, ms in sorted(by_kind.items()):
        rows.append([
            "average", kind,
            f"{sum(m['micro_f1'] for m in ms) / len(ms):.2f}",
            f"{sum(m['macro_f1'] for m in ms) / len(ms):.2f}",
            f"{sum(m['tpr'] for m in ms) / len(ms):.2f}",
            f"{sum(m['tnr'] for m in ms) / len(ms):.2f}",
        ])
    return _format_table(["code", "model", "micro_f1", "macro_f1", "tpr", "tnr"], rows)


def _report_interpretation(config: PipelineConfig) -> str:
    run = load_categorization_run(config)
    blocks = []
    queue_ids = [
        r.doc_id
        for r in sorted(run.reports.values(), key=lambda r: r.doc_id)
        if r.band is not None and run.bands[r.band].faulty
    ]
    for doc_id in queue_ids:
        report = interpret(doc_id, run)
        band = report.band
        matched = ", ".join(f"{e} ({w:g})" for e, w in report.matched) or "(none)"
        blocks.append(
            f"doc {doc_id}: SUM {report.sum:g}, band ({band.lower:g}, {band.upper:g}), "
            f"predicted {report.predicted}\n  matched: {matched}\n"
        )
    if not blocks:
        return "no documents in faulty bands\n"
    return "".join(blocks)
