"""Ingest note and diagnosis tables, merge them, and label one-vs-rest.

Runs against the small bundled synthetic corpus so the numbers printed
here are stable.
"""

import tempfile
from pathlib import Path

from chaptercoder import synthetic
from chaptercoder.corpus import (
    LabelSpec,
    label_one_vs_rest,
    merge_admissions,
    parse_diagnoses,
    parse_notes,
    truncate_code,
)

workdir = Path(tempfile.mkdtemp(prefix="chaptercoder-demo-"))
paths = synthetic.write_corpus(workdir)

# Parse the two CSV tables. Notes are filtered to discharge summaries;
# malformed rows are counted rather than raised.
notes = parse_notes(paths["notes"])
diagnoses = parse_diagnoses(paths["diagnoses"])
print(f"notes kept: {len(notes.records)} (filtered {notes.filtered}, "
      f"malformed {notes.malformed}, empty text {notes.empty_text})")
print(f"diagnosis rows: {len(diagnoses.rows)} (skipped {diagnoses.skipped})")

# Inner join on admission id. The longest note wins duplicates and codes
# come out ordered by sequence number.
records, stats = merge_admissions(notes.records, diagnoses.rows)
print(f"merged admissions: {len(records)}")
print(f"dropped: {stats.notes_without_diagnoses} notes without codes, "
      f"{stats.diagnoses_without_note} code groups without a note")

# One-vs-rest target: the blood-disease chapter covers codes 280-289, so
# a two-character truncation against prefix "28" decides the label.
spec = LabelSpec(frozenset({"28"}), prefix_len=2)
labels = {r.admission_id: label_one_vs_rest(r, spec) for r in records}
print(f"chapter admissions: {sum(labels.values())} of {len(labels)}")

sample = records[0]
truncated = [truncate_code(c, spec.prefix_len) for c in sample.codes]
print(f"\nadmission {sample.admission_id}: codes {list(sample.codes)}")
print(f"  truncated {truncated} -> label {labels[sample.admission_id]}")
