"""Pull the four target sections out of a discharge note and squash them
into one normalized "short summary".

Section patterns are plain regular expressions applied to a lowercased,
whitespace-flattened copy of the note.  They are configuration data: the
defaults below can be replaced by a JSON pattern file.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

SECTION_ORDER = ("hpi", "pertinent_results", "hospital_course", "discharge_diagnosis")

DEFAULT_SECTION_PATTERNS: dict[str, str] = {
    "hpi": r" history of present illness (.*?) past medical history ",
    "pertinent_results": r" pertinent results (.*?) brief hospital ",
    "hospital_course": r" hospital course (.*?) discharge medication ",
    "discharge_diagnosis": r" discharge diagnosis (.*?) discharge ",
}

_WS = re.compile(r"\s+")
_NON_ALPHA = re.compile(r"[^a-z]")
_MULTI_SPACE = re.compile(r" {2,}")


@dataclass(frozen=True)
class SectionSet:
    hpi: str | None = None
    pertinent_results: str | None = None
    hospital_course: str | None = None
    discharge_diagnosis: str | None = None

    def complete(self) -> bool:
        return all(getattr(self, name) is not None for name in SECTION_ORDER)


@dataclass(frozen=True)
class ShortSummary:
    admission_id: str
    text: str
    # name -> (start, end) character offsets into `text`; zero-length spans
    # mark sections that normalized away entirely
    section_spans: dict[str, tuple[int, int]]


def load_section_patterns(path: str | Path) -> dict[str, str]:
    """Read a pattern file: a JSON object mapping the four section names to
    regular expressions.  Missing names fall back to the defaults."""
    with open(path, encoding="utf-8") as fh:
        loaded = json.load(fh)
    unknown = set(loaded) - set(SECTION_ORDER)
    if unknown:
        raise ValueError(f"unknown section name(s) in pattern file: {sorted(unknown)}")
    patterns = dict(DEFAULT_SECTION_PATTERNS)
    patterns.update(loaded)
    return patterns


def flatten_for_matching(raw_text: str) -> str:
    # The patterns carry literal surrounding spaces, so pad the ends too;
    # otherwise a header at position 0 could never match.
    return " " + _WS.sub(" ", raw_text.lower()).strip() + " "


def extract_sections(
    raw_text: str,
    patterns: dict[str, str] | None = None,
) -> SectionSet:
    """First, non-greedy match of each section pattern against the flattened
    note.  A missing header simply yields an absent field."""
    patterns = patterns or DEFAULT_SECTION_PATTERNS
    flattened = flatten_for_matching(raw_text)
    found: dict[str, str | None] = {}
    for name in SECTION_ORDER:
        m = re.search(patterns[name], flattened)
        captured = m.group(1) if m else None
        found[name] = captured if captured and captured.strip() else None
    return SectionSet(**found)


def normalize_text(text: str) -> str:
    """Lowercase, replace anything outside a-z with a space, collapse runs
    of spaces, and trim."""
    out = _NON_ALPHA.sub(" ", text.lower())
    return _MULTI_SPACE.sub(" ", out).strip()


def build_short_summary(admission_id: str, sections: SectionSet) -> ShortSummary | None:
    """Concatenate the four normalized sections, in fixed order, into one
    summary.  Returns None when any section is absent (the admission is
    excluded) or when every section normalizes to the empty string."""
    if not sections.complete():
        return None
    parts = [normalize_text(getattr(sections, name)) for name in SECTION_ORDER]
    pieces: list[str] = []
    spans: dict[str, tuple[int, int]] = {}
    pos = 0
    for name, part in zip(SECTION_ORDER, parts):
        if part and pieces:
            pos += 1  # joining space
        spans[name] = (pos, pos + len(part))
        if part:
            pieces.append(part)
            pos += len(part)
    text = " ".join(pieces)
    if not text:
        return None
    return ShortSummary(admission_id, text, spans)


def summarize_corpus(
    admissions,
    patterns: dict[str, str] | None = None,
) -> tuple[list[tuple[ShortSummary, tuple[str, ...]]], int]:
    """Run section extraction over admission records, keeping their codes.

    Returns (list of (summary, codes), number of excluded admissions).
    """
    out = []
    excluded = 0
    for rec in admissions:
        summary = build_short_summary(rec.admission_id, extract_sections(rec.text, patterns))
        if summary is None:
            excluded += 1
        else:
            out.append((summary, rec.codes))
    return out, excluded


def write_summaries(rows, path: str | Path) -> None:
    """Persist (summary, codes) pairs as line-delimited JSON."""
    with open(path, "w", encoding="utf-8") as fh:
        for summary, codes in rows:
            fh.write(json.dumps(
                {
                    "admission_id": summary.admission_id,
                    "short_summary": summary.text,
                    "codes": list(codes),
                    "section_spans": {k: list(v) for k, v in summary.section_spans.items()},
                },
                sort_keys=True,
            ))
            fh.write("\n")


def read_summaries(path: str | Path) -> list[tuple[ShortSummary, tuple[str, ...]]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            spans = {k: (v[0], v[1]) for k, v in obj["section_spans"].items()}
            rows.append(
                (
                    ShortSummary(obj["admission_id"], obj["short_summary"], spans),
                    tuple(obj["codes"]),
                )
            )
    return rows
