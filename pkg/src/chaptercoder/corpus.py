"""Load note and diagnosis tables, join them per admission, and label
admissions one-vs-rest from ICD-9 code prefixes.

Input files are comma-delimited with a header row; quoted multi-line text
fields are supported.  Codes are treated as opaque strings throughout so
that V/E codes never get mangled numerically.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

logger = logging.getLogger(__name__)

ICD9_CODE_RE = re.compile(r"[0-9VE][0-9]{1,4}$")

DEFAULT_NOTE_CATEGORY = "Discharge summary"


class MissingColumnError(ValueError):
    """A required column is absent from the input header."""


@dataclass(frozen=True)
class NoteRecord:
    admission_id: str
    category: str
    text: str


@dataclass(frozen=True)
class DiagnosisRow:
    admission_id: str
    icd9_code: str
    seq_num: int


@dataclass(frozen=True)
class AdmissionRecord:
    admission_id: str
    text: str
    codes: tuple[str, ...]


@dataclass(frozen=True)
class LabelSpec:
    """One-vs-rest target: admissions whose truncated codes hit any of
    ``target_prefixes`` are class 1."""

    target_prefixes: frozenset[str]
    prefix_len: int

    def __post_init__(self):
        if self.prefix_len not in (2, 3, 4, 5):
            raise ValueError(f"prefix_len must be one of 2..5, got {self.prefix_len}")
        prefixes = frozenset(p.strip().upper() for p in self.target_prefixes)
        if not prefixes:
            raise ValueError("target_prefixes must be non-empty")
        bad = sorted(p for p in prefixes if len(p) != self.prefix_len)
        if bad:
            raise ValueError(
                f"prefixes {bad} do not have length prefix_len={self.prefix_len}"
            )
        object.__setattr__(self, "target_prefixes", prefixes)


@dataclass
class NoteParseResult:
    records: list[NoteRecord] = field(default_factory=list)
    filtered: int = 0        # rows whose category did not match
    malformed: int = 0       # rows skipped as unparseable
    empty_text: int = 0      # kept, but flagged


@dataclass
class DiagnosisParseResult:
    rows: list[DiagnosisRow] = field(default_factory=list)
    skipped: int = 0


@dataclass
class MergeStats:
    notes_without_diagnoses: int = 0
    diagnoses_without_note: int = 0
    duplicate_notes: int = 0


def _open_rows(source: str | Path | IO[str]):
    if isinstance(source, (str, Path)):
        fh = open(source, newline="", encoding="utf-8")
        return csv.reader(fh), fh
    return csv.reader(source), None


def _header_index(header: list[str], wanted: Iterable[str]) -> dict[str, int]:
    lookup = {name.strip().lower(): i for i, name in enumerate(header)}
    idx = {}
    missing = []
    for name in wanted:
        key = name.lower()
        if key in lookup:
            idx[name] = lookup[key]
        else:
            missing.append(name)
    if missing:
        raise MissingColumnError(f"missing required column(s): {', '.join(missing)}")
    return idx


def parse_notes(
    source: str | Path | IO[str],
    category: str = DEFAULT_NOTE_CATEGORY,
) -> NoteParseResult:
    """Parse the note table, keeping only rows whose CATEGORY matches.

    Malformed rows are skipped and counted; empty TEXT is kept but counted
    so downstream stages can report it.
    """
    reader, fh = _open_rows(source)
    result = NoteParseResult()
    want_category = category.strip().lower()
    try:
        header = next(reader, None)
        if header is None:
            logger.warning("note input is empty (no header row)")
            return result
        idx = _header_index(header, ["HADM_ID", "CATEGORY", "TEXT"])
        n_rows = 0
        for row in reader:
            n_rows += 1
            if len(row) <= max(idx.values()):
                result.malformed += 1
                continue
            admission_id = row[idx["HADM_ID"]].strip()
            if not admission_id:
                result.malformed += 1
                continue
            row_category = row[idx["CATEGORY"]].strip()
            if row_category.lower() != want_category:
                result.filtered += 1
                continue
            text = row[idx["TEXT"]]
            if not text.strip():
                result.empty_text += 1
            result.records.append(NoteRecord(admission_id, row_category, text))
        if n_rows == 0:
            logger.warning("note input has a header but no data rows")
    finally:
        if fh is not None:
            fh.close()
    return result


def parse_diagnoses(source: str | Path | IO[str]) -> DiagnosisParseResult:
    """Parse the diagnosis table; rows with an invalid code or a
    non-numeric/non-positive sequence number are skipped and counted."""
    reader, fh = _open_rows(source)
    result = DiagnosisParseResult()
    try:
        header = next(reader, None)
        if header is None:
            logger.warning("diagnosis input is empty (no header row)")
            return result
        idx = _header_index(header, ["HADM_ID", "ICD9_CODE", "SEQ_NUM"])
        for row in reader:
            if len(row) <= max(idx.values()):
                result.skipped += 1
                continue
            admission_id = row[idx["HADM_ID"]].strip()
            code = row[idx["ICD9_CODE"]].strip().upper()
            seq_text = row[idx["SEQ_NUM"]].strip()
            if not admission_id or not ICD9_CODE_RE.fullmatch(code):
                result.skipped += 1
                continue
            try:
                seq = int(seq_text)
            except ValueError:
                result.skipped += 1
                continue
            if seq < 1:
                result.skipped += 1
                continue
            result.rows.append(DiagnosisRow(admission_id, code, seq))
    finally:
        if fh is not None:
            fh.close()
    return result


def merge_admissions(
    notes: Iterable[NoteRecord],
    diagnoses: Iterable[DiagnosisRow],
) -> tuple[list[AdmissionRecord], MergeStats]:
    """Inner-join notes and diagnoses on admission id.

    Admissions present on only one side are dropped and counted.  When one
    admission has several notes the longest text wins.  Codes are ordered by
    sequence number (ties by code text) and output is sorted by admission id.
    """
    stats = MergeStats()

    note_by_id: dict[str, NoteRecord] = {}
    for note in notes:
        prev = note_by_id.get(note.admission_id)
        if prev is None:
            note_by_id[note.admission_id] = note
        else:
            stats.duplicate_notes += 1
            if len(note.text) > len(prev.text):
                note_by_id[note.admission_id] = note

    codes_by_id: dict[str, list[DiagnosisRow]] = {}
    for row in diagnoses:
        codes_by_id.setdefault(row.admission_id, []).append(row)

    stats.notes_without_diagnoses = sum(
        1 for aid in note_by_id if aid not in codes_by_id
    )
    stats.diagnoses_without_note = sum(
        1 for aid in codes_by_id if aid not in note_by_id
    )

    records = []
    for aid in sorted(note_by_id):
        rows = codes_by_id.get(aid)
        if not rows:
            continue
        ordered = sorted(rows, key=lambda r: (r.seq_num, r.icd9_code))
        records.append(
            AdmissionRecord(aid, note_by_id[aid].text, tuple(r.icd9_code for r in ordered))
        )
    return records, stats


def truncate_code(code: str, prefix_len: int) -> str:
    """First ``prefix_len`` characters of a code; shorter codes come back whole."""
    if prefix_len not in (2, 3, 4, 5):
        raise ValueError(f"prefix_len must be one of 2..5, got {prefix_len}")
    if not code:
        raise ValueError("code must be non-empty")
    return code[:prefix_len]


def label_one_vs_rest(record: AdmissionRecord, spec: LabelSpec) -> int:
    """1 iff any truncated code of the admission is a target prefix."""
    truncated = {truncate_code(c, spec.prefix_len) for c in record.codes}
    return 1 if truncated & spec.target_prefixes else 0


def write_admissions(records: Iterable[AdmissionRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(
                {"admission_id": rec.admission_id, "text": rec.text, "codes": list(rec.codes)},
                sort_keys=True,
            ))
            fh.write("\n")


def read_admissions(path: str | Path) -> list[AdmissionRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            records.append(
                AdmissionRecord(obj["admission_id"], obj["text"], tuple(obj["codes"]))
            )
    return records
