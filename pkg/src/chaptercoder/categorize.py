"""Summed-weight categorization: score summaries against a weighted entity
set, classify by threshold, sweep thresholds, and carve the score axis into
bands whose impurity tells human coders where to look.

Sums are carried as integer cents and thresholds/edges as exact fractions,
so classification is never at the mercy of float rounding.  Both threshold
comparisons are strict; a sum exactly on the threshold goes to REST.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .entities import WeightedEntitySet, contains_phrase
from .sectioner import ShortSummary

CHAPTER = "chapter"
REST = "rest"

DEFAULT_IMPURITY_CUTOFF = 0.25


class DocNotFoundError(KeyError):
    pass


class MissingLabelError(ValueError):
    pass


def _frac(value) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(str(value))


@dataclass
class ScoreReport:
    doc_id: str
    matched: list[tuple[str, float]]  # unique entities with their weights
    sum_cents: int
    predicted: str | None = None
    band: int | None = None

    @property
    def sum(self) -> float:
        return self.sum_cents / 100


@dataclass(frozen=True)
class BandStat:
    index: int
    lower: float
    upper: float  # both edges exclusive
    count_chapter: int
    count_rest: int
    share: float
    impurity: float
    orientation: str  # "above" or "below" the operating threshold
    faulty: bool

    @property
    def total(self) -> int:
        return self.count_chapter + self.count_rest


@dataclass(frozen=True)
class InterpretationReport:
    doc_id: str
    matched: list[tuple[str, float]]
    sum: float
    predicted: str | None
    band: BandStat | None
    flagged_for_review: bool


@dataclass
class CategorizationRun:
    """Scored corpus plus the band analysis it was classified under."""

    reports: dict[str, ScoreReport]
    labels: dict[str, int]
    bands: list[BandStat]
    tau: float


def score_summary(summary: ShortSummary, weights: WeightedEntitySet) -> ScoreReport:
    """Sum the weights of every distinct weighted entity found in the summary."""
    matched = []
    total = 0
    for entity in sorted(weights.cents):
        if contains_phrase(summary.text, entity):
            matched.append((entity, weights.cents[entity] / 100))
            total += weights.cents[entity]
    return ScoreReport(doc_id=summary.admission_id, matched=matched, sum_cents=total)


def classify_threshold(report: ScoreReport, tau) -> str:
    """chapter iff sum > tau, rest iff sum < tau; a tie goes to rest."""
    tau_frac = _frac(tau)
    if tau_frac < 0:
        raise ValueError("tau must be >= 0")
    return CHAPTER if Fraction(report.sum_cents, 100) > tau_frac else REST


def classify_reports(reports: Iterable[ScoreReport], tau) -> list[ScoreReport]:
    return [replace(r, predicted=classify_threshold(r, tau)) for r in reports]


@dataclass(frozen=True)
class ThresholdRow:
    tau: float
    chapter_rate: float   # share of label-1 docs with sum > tau
    rest_leakage: float   # share of label-0 docs with sum > tau


def sweep_thresholds(
    reports: Sequence[ScoreReport],
    labels: Mapping[str, int],
    taus: Sequence,
) -> list[ThresholdRow]:
    """Per-threshold class rates.  The rest figure is leakage: the share of
    label-0 documents that land above the threshold."""
    for r in reports:
        if r.doc_id not in labels:
            raise MissingLabelError(f"no label for doc {r.doc_id!r}")
    pos = [r.sum_cents for r in reports if labels[r.doc_id] == 1]
    neg = [r.sum_cents for r in reports if labels[r.doc_id] == 0]
    rows = []
    for tau in taus:
        tau_frac = _frac(tau) * 100
        chapter_rate = (
            sum(1 for s in pos if s > tau_frac) / len(pos) if pos else 0.0
        )
        rest_leakage = (
            sum(1 for s in neg if s > tau_frac) / len(neg) if neg else 0.0
        )
        rows.append(ThresholdRow(float(tau), chapter_rate, rest_leakage))
    return rows


def band_stat_from_counts(
    index: int,
    lower,
    upper,
    count_chapter: int,
    count_rest: int,
    corpus_total: int,
    tau,
    impurity_cutoff: float = DEFAULT_IMPURITY_CUTOFF,
) -> BandStat:
    """Build one band's statistics from raw counts.

    Bands at or above the operating threshold expect chapter documents, so
    their impurity is the rest share; bands below expect rest documents and
    count chapter ones as impure.
    """
    total = count_chapter + count_rest
    above = _frac(lower) >= _frac(tau)
    wrong = count_rest if above else count_chapter
    impurity = wrong / total if total else 0.0
    share = total / corpus_total if corpus_total else 0.0
    return BandStat(
        index=index,
        lower=float(lower),
        upper=float(upper),
        count_chapter=count_chapter,
        count_rest=count_rest,
        share=share,
        impurity=impurity,
        orientation="above" if above else "below",
        faulty=total > 0 and impurity > impurity_cutoff,
    )


def band_analysis(
    reports: Sequence[ScoreReport],
    labels: Mapping[str, int],
    band_edges: Sequence,
    tau,
    impurity_cutoff: float = DEFAULT_IMPURITY_CUTOFF,
) -> list[BandStat]:
    """Split the score axis at the given edges and measure each open
    interval's label mix.  Sums exactly on an edge belong to no band."""
    edges = [_frac(e) for e in band_edges]
    for a, b in zip(edges, edges[1:]):
        if a >= b:
            raise ValueError(f"overlapping bands: edges must be strictly increasing, got {a} >= {b}")
    for r in reports:
        if r.doc_id not in labels:
            raise MissingLabelError(f"no label for doc {r.doc_id!r}")

    counts = [[0, 0] for _ in range(len(edges) - 1)]
    for r in reports:
        s = Fraction(r.sum_cents, 100)
        for i, (lo, hi) in enumerate(zip(edges, edges[1:])):
            if lo < s < hi:
                counts[i][labels[r.doc_id]] += 1
                break
    corpus_total = len(reports)
    return [
        band_stat_from_counts(
            i, lo, hi, c[1], c[0], corpus_total, tau, impurity_cutoff
        )
        for i, ((lo, hi), c) in enumerate(zip(zip(edges, edges[1:]), counts))
    ]


def assign_bands(reports: Iterable[ScoreReport], bands: Sequence[BandStat]) -> list[ScoreReport]:
    out = []
    for r in reports:
        s = Fraction(r.sum_cents, 100)
        band_idx = None
        for b in bands:
            if _frac(b.lower) < s < _frac(b.upper):
                band_idx = b.index
                break
        out.append(replace(r, band=band_idx))
    return out


def interpret(doc_id: str, run: CategorizationRun) -> InterpretationReport:
    """Everything a human coder needs about one document: matched entities,
    their weights, the sum, the band, and whether that band is flagged."""
    report = run.reports.get(doc_id)
    if report is None:
        raise DocNotFoundError(f"doc {doc_id!r} was not scored in this run")
    band = run.bands[report.band] if report.band is not None else None
    return InterpretationReport(
        doc_id=doc_id,
        matched=list(report.matched),
        sum=report.sum,
        predicted=report.predicted,
        band=band,
        flagged_for_review=bool(band and band.faulty),
    )


def write_score_reports(
    reports: Iterable[ScoreReport],
    labels: Mapping[str, int],
    path: str | Path,
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in reports:
            fh.write(json.dumps(
                {
                    "doc_id": r.doc_id,
                    "matched": [[e, w] for e, w in r.matched],
                    "sum": r.sum,
                    "predicted": r.predicted,
                    "band": r.band,
                    "label": labels.get(r.doc_id),
                },
                sort_keys=True,
            ))
            fh.write("\n")


def read_score_reports(path: str | Path) -> tuple[list[ScoreReport], dict[str, int]]:
    reports = []
    labels = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            reports.append(ScoreReport(
                doc_id=obj["doc_id"],
                matched=[(e, w) for e, w in obj["matched"]],
                sum_cents=_to_sum_cents(obj["sum"]),
                predicted=obj["predicted"],
                band=obj["band"],
            ))
            if obj.get("label") is not None:
                labels[obj["doc_id"]] = obj["label"]
    return reports, labels


def _to_sum_cents(value: float) -> int:
    frac = Fraction(str(value)) * 100
    if frac.denominator != 1:
        raise ValueError(f"score sum {value} is not on the hundredths grid")
    return int(frac)


def write_bands(bands: Iterable[BandStat], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for b in bands:
            fh.write(json.dumps(
                {
                    "index": b.index,
                    "lower": b.lower,
                    "upper": b.upper,
                    "count_chapter": b.count_chapter,
                    "count_rest": b.count_rest,
                    "share": b.share,
                    "impurity": b.impurity,
                    "orientation": b.orientation,
                    "faulty": b.faulty,
                },
                sort_keys=True,
            ))
            fh.write("\n")


def read_bands(path: str | Path) -> list[BandStat]:
    bands = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            bands.append(BandStat(**obj))
    return bands
