"""Weighted entity sets for one chapter: extract mentions, rank candidates
by document frequency, weight them, then de-bias against the rest of the
corpus and apply the influencing rules.

All weights live on a hundredths grid.  They are stored internally as
integer cents so that downstream sums and threshold comparisons stay exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .sectioner import ShortSummary, normalize_text

RAW = "raw"
DEBIASED = "debiased"
INFLUENCED = "influenced"

PROV_FREQUENCY = "frequency"
PROV_INJECTED = "injected"
PROV_DOUBLED = "doubled"

# Function words plus gazetteer noise that keeps floating to the top of
# prevalence rankings in clinical text.
DEFAULT_STOP_LIST = frozenset(
    """a an and are as at be but by for from had has have he her his in is it
    its no not of on or she that the their them they this to was were will
    with pain htn""".split()
)
DEFAULT_MIN_LEN = 2


class EntityListMismatchError(ValueError):
    """De-biasing needs both weight sets defined on the same entities."""


class UnknownDocIdError(ValueError):
    """An annotation import referenced documents that are not in the corpus."""


@dataclass(frozen=True)
class EntityMention:
    entity: str
    doc_id: str
    span: tuple[int, int] | None  # char offsets in the normalized text


@dataclass(frozen=True)
class InfluenceConfig:
    curated_terms: frozenset[str]
    injected_weight: float = 0.5
    double_margin: float = 0.1

    def __post_init__(self):
        terms = frozenset(normalize_text(t) for t in self.curated_terms)
        terms = frozenset(t for t in terms if t)
        if not terms:
            raise ValueError("curated_terms must be non-empty when influencing is enabled")
        object.__setattr__(self, "curated_terms", terms)

    @property
    def injected_cents(self) -> int:
        return _to_cents(self.injected_weight)

    @property
    def margin_cents(self) -> int:
        return _to_cents(self.double_margin)


def _to_cents(value: float | str) -> int:
    frac = Fraction(str(value)) * 100
    if frac.denominator != 1:
        raise ValueError(f"{value} is not representable in hundredths")
    return int(frac)


@dataclass(frozen=True)
class WeightedEntitySet:
    """entity -> weight mapping at one pipeline stage.

    ``cents`` is the exact integer representation (weight * 100).
    """

    cents: dict[str, int]
    stage: str
    provenance: dict[str, str]

    def __post_init__(self):
        if self.stage not in (RAW, DEBIASED, INFLUENCED):
            raise ValueError(f"unknown stage {self.stage!r}")
        for entity, c in self.cents.items():
            if not 0 <= c <= 200:
                raise ValueError(f"weight for {entity!r} out of range: {c / 100}")
            if self.stage == RAW and c > 100:
                raise ValueError(f"raw weight for {entity!r} exceeds 1: {c / 100}")
            if self.stage in (DEBIASED, INFLUENCED) and c <= 0:
                raise ValueError(f"{self.stage} weight for {entity!r} must be positive")
        if set(self.provenance) != set(self.cents):
            raise ValueError("provenance must cover exactly the weighted entities")

    @property
    def weights(self) -> dict[str, float]:
        return {e: c / 100 for e, c in self.cents.items()}

    def weight(self, entity: str) -> float:
        return self.cents[entity] / 100

    def entities(self) -> list[str]:
        return sorted(self.cents)

    def __len__(self) -> int:
        return len(self.cents)


@dataclass
class EntityLexicon:
    phrases: frozenset[str]
    source: str = "builtin"

    def __post_init__(self):
        normalized = frozenset(normalize_text(p) for p in self.phrases)
        self.phrases = frozenset(p for p in normalized if p)


def load_lexicon(path: str | Path) -> EntityLexicon:
    """One phrase per line; blank lines and '#' comments are ignored."""
    phrases = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            phrases.add(line)
    return EntityLexicon(frozenset(phrases), source="builtin")


def _token_starts(tokens: Sequence[str]) -> list[int]:
    starts = []
    pos = 0
    for tok in tokens:
        starts.append(pos)
        pos += len(tok) + 1
    return starts


class LexiconMatcher:
    """Token-boundary phrase matcher: longest match wins at each position and
    matches never overlap."""

    def __init__(self, lexicon: EntityLexicon):
        self.lexicon = lexicon
        self._by_first: dict[str, list[tuple[str, ...]]] = {}
        for phrase in lexicon.phrases:
            toks = tuple(phrase.split(" "))
            self._by_first.setdefault(toks[0], []).append(toks)
        for candidates in self._by_first.values():
            candidates.sort(key=lambda t: (-len(t), t))

    def mentions(self, summary: ShortSummary) -> list[EntityMention]:
        tokens = summary.text.split(" ") if summary.text else []
        starts = _token_starts(tokens)
        found = []
        i = 0
        n = len(tokens)
        while i < n:
            hit = None
            for cand in self._by_first.get(tokens[i], ()):
                if tuple(tokens[i:i + len(cand)]) == cand:
                    hit = cand
                    break
            if hit is None:
                i += 1
                continue
            end_tok = i + len(hit) - 1
            span = (starts[i], starts[end_tok] + len(tokens[end_tok]))
            found.append(EntityMention(" ".join(hit), summary.admission_id, span))
            i += len(hit)
        return found


class ImportedAnnotations:
    """Entity mentions produced by an external extractor, read from a
    line-delimited file of {doc_id, entities: [...]} records."""

    def __init__(self, entities_by_doc: Mapping[str, Sequence[str]]):
        self.entities_by_doc = {
            doc_id: [normalize_text(e) for e in ents if normalize_text(e)]
            for doc_id, ents in entities_by_doc.items()
        }

    @classmethod
    def load(cls, path: str | Path) -> "ImportedAnnotations":
        by_doc: dict[str, list[str]] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                by_doc.setdefault(str(obj["doc_id"]), []).extend(obj["entities"])
        return cls(by_doc)

    def validate_corpus_ids(self, corpus_ids: Iterable[str]) -> None:
        known = set(corpus_ids)
        unknown = sorted(set(self.entities_by_doc) - known)
        if unknown:
            raise UnknownDocIdError(
                f"annotations reference {len(unknown)} doc id(s) not in the corpus: "
                + ", ".join(unknown[:20])
            )

    def mentions(self, summary: ShortSummary) -> list[EntityMention]:
        out = []
        for entity in self.entities_by_doc.get(summary.admission_id, []):
            idx = _find_phrase(summary.text, entity)
            span = (idx, idx + len(entity)) if idx is not None else None
            out.append(EntityMention(entity, summary.admission_id, span))
        return out


def _find_phrase(text: str, phrase: str) -> int | None:
    """Offset of the first token-boundary occurrence of phrase, or None."""
    if not phrase:
        return None
    start = 0
    while True:
        idx = text.find(phrase, start)
        if idx == -1:
            return None
        before_ok = idx == 0 or text[idx - 1] == " "
        end = idx + len(phrase)
        after_ok = end == len(text) or text[end] == " "
        if before_ok and after_ok:
            return idx
        start = idx + 1


def extract_entities(summary: ShortSummary, extractor) -> list[EntityMention]:
    """Run one extractor (LexiconMatcher or ImportedAnnotations) over a summary."""
    return extractor.mentions(summary)


def contains_phrase(text: str, phrase: str) -> bool:
    return _find_phrase(text, phrase) is not None


def top_prevalent(
    mentions_by_doc: Mapping[str, Sequence[EntityMention]],
    n: int,
) -> list[str]:
    """Entities ranked by the number of distinct documents mentioning them,
    ties broken lexicographically; at most n returned."""
    if n < 1:
        raise ValueError("n must be >= 1")
    doc_counts: dict[str, int] = {}
    for mentions in mentions_by_doc.values():
        for entity in {m.entity for m in mentions}:
            doc_counts[entity] = doc_counts.get(entity, 0) + 1
    ranked = sorted(doc_counts, key=lambda e: (-doc_counts[e], e))
    return ranked[:n]


def clean_entity_list(
    entities: Sequence[str],
    stop_list: Iterable[str] = DEFAULT_STOP_LIST,
    min_len: int = DEFAULT_MIN_LEN,
) -> list[str]:
    stop = set(stop_list)
    return [e for e in entities if e not in stop and len(e) >= min_len]


def doc_frequency_weights(
    entities: Sequence[str],
    corpus: Sequence[ShortSummary],
) -> WeightedEntitySet:
    """weight(e) = share of corpus documents containing e, rounded half-up
    to two decimals."""
    if not corpus:
        raise ValueError("corpus must be non-empty")
    n_docs = len(corpus)
    cents = {}
    for entity in entities:
        df = sum(1 for doc in corpus if contains_phrase(doc.text, entity))
        # round half up on the hundredths grid
        cents[entity] = int(Fraction(df * 100, n_docs) + Fraction(1, 2))
    return WeightedEntitySet(
        cents=cents,
        stage=RAW,
        provenance={e: PROV_FREQUENCY for e in cents},
    )


def debias(set1: WeightedEntitySet, set2: WeightedEntitySet) -> WeightedEntitySet:
    """Keep only entities more frequent in the chapter corpus than outside it;
    the retained weight is the difference."""
    if set(set1.cents) != set(set2.cents):
        only1 = sorted(set(set1.cents) - set(set2.cents))
        only2 = sorted(set(set2.cents) - set(set1.cents))
        raise EntityListMismatchError(
            f"entity lists differ: only in set1 {only1[:10]}, only in set2 {only2[:10]}"
        )
    cents = {}
    for entity, c1 in set1.cents.items():
        delta = c1 - set2.cents[entity]
        if delta > 0:
            cents[entity] = delta
    return WeightedEntitySet(
        cents=cents,
        stage=DEBIASED,
        provenance={e: PROV_FREQUENCY for e in cents},
    )


def influence(
    debiased: WeightedEntitySet,
    config: InfluenceConfig,
    set1: WeightedEntitySet,
    set2: WeightedEntitySet,
) -> WeightedEntitySet:
    """Apply the two influencing rules to a de-biased set: inject curated
    terms at the fixed weight, and double entities whose chapter-vs-rest
    frequency difference clears the margin.  Injected terms are never
    doubled."""
    if debiased.stage != DEBIASED:
        raise ValueError(f"expected a debiased set, got stage {debiased.stage!r}")
    cents = {}
    provenance = {}
    for entity, c in debiased.cents.items():
        delta = set1.cents[entity] - set2.cents[entity]
        if delta > config.margin_cents:
            cents[entity] = c * 2
            provenance[entity] = PROV_DOUBLED
        else:
            cents[entity] = c
            provenance[entity] = debiased.provenance[entity]
    for term in sorted(config.curated_terms):
        if term not in cents:
            cents[term] = config.injected_cents
            provenance[term] = PROV_INJECTED
    return WeightedEntitySet(cents=cents, stage=INFLUENCED, provenance=provenance)


def write_weight_set(weights: WeightedEntitySet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entity in sorted(weights.cents):
            fh.write(json.dumps(
                {
                    "entity": entity,
                    "weight": weights.cents[entity] / 100,
                    "stage": weights.stage,
                    "provenance": weights.provenance[entity],
                },
                sort_keys=True,
            ))
            fh.write("\n")


def read_weight_set(path: str | Path) -> WeightedEntitySet:
    cents: dict[str, int] = {}
    provenance: dict[str, str] = {}
    stage = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            if stage is None:
                stage = obj["stage"]
            elif obj["stage"] != stage:
                raise ValueError(f"mixed stages in weight file: {stage} vs {obj['stage']}")
            cents[obj["entity"]] = _to_cents(obj["weight"])
            provenance[obj["entity"]] = obj["provenance"]
    if stage is None:
        raise ValueError(f"weight file {path} is empty")
    return WeightedEntitySet(cents=cents, stage=stage, provenance=provenance)
