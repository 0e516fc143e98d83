"""Note/diagnosis CSV parsing, the admission merge, and one-vs-rest labeling."""

import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chaptercoder.corpus import (
    AdmissionRecord,
    DiagnosisRow,
    LabelSpec,
    MissingColumnError,
    NoteRecord,
    label_one_vs_rest,
    merge_admissions,
    parse_diagnoses,
    parse_notes,
    read_admissions,
    truncate_code,
    write_admissions,
)


def _notes_csv(rows):
    out = io.StringIO()
    out.write("ROW_ID,HADM_ID,CATEGORY,TEXT\n")
    for row in rows:
        quoted = '"' + row[3].replace('"', '""') + '"'
        out.write(",".join([row[0], row[1], row[2], quoted]) + "\n")
    out.seek(0)
    return out


def test_parse_notes_keeps_only_discharge_summaries():
    src = _notes_csv([
        ("1", "100", "Discharge summary", "note a"),
        ("2", "101", "Radiology", "xray"),
        ("3", "102", "discharge summary", "case-insensitive category"),
    ])
    result = parse_notes(src)
    assert [r.admission_id for r in result.records] == ["100", "102"]
    assert result.filtered == 1
    assert result.malformed == 0


def test_parse_notes_quoted_multiline_text():
    src = io.StringIO(
        "ROW_ID,HADM_ID,CATEGORY,TEXT\n"
        '1,100,Discharge summary,"line one\nline two, with comma\n""quoted"""\n'
        "2,101,Discharge summary,plain\n"
    )
    result = parse_notes(src)
    assert result.records[0].text == 'line one\nline two, with comma\n"quoted"'
    assert result.records[1].text == "plain"


def test_parse_notes_counts_malformed_and_empty():
    src = io.StringIO(
        "ROW_ID,HADM_ID,CATEGORY,TEXT\n"
        "1,100,Discharge summary,ok\n"
        "2,,Discharge summary,missing id\n"
        "3,101\n"
        '4,102,Discharge summary,"  "\n'
    )
    result = parse_notes(src)
    assert len(result.records) == 2
    assert result.malformed == 2
    assert result.empty_text == 1


def test_parse_notes_missing_column_is_an_error():
    src = io.StringIO("ROW_ID,HADM_ID,TEXT\n1,100,hello\n")
    with pytest.raises(MissingColumnError):
        parse_notes(src)


def test_parse_notes_empty_input():
    assert parse_notes(io.StringIO("")).records == []


def test_parse_diagnoses_skips_bad_rows():
    src = io.StringIO(
        "ROW_ID,HADM_ID,ICD9_CODE,SEQ_NUM\n"
        "1,100,2859,1\n"
        "2,100,v4581,2\n"
        "3,101,,1\n"
        "4,101,41401,x\n"
        "5,101,41401,0\n"
        "6,102,28.59,1\n"
    )
    result = parse_diagnoses(src)
    assert [(r.admission_id, r.icd9_code, r.seq_num) for r in result.rows] == [
        ("100", "2859", 1),
        ("100", "V4581", 2),
    ]
    assert result.skipped == 4


def test_merge_inner_join_and_stats():
    notes = [
        NoteRecord("100", "Discharge summary", "short"),
        NoteRecord("100", "Discharge summary", "a longer note body"),
        NoteRecord("101", "Discharge summary", "no codes"),
    ]
    diagnoses = [
        DiagnosisRow("100", "4019", 2),
        DiagnosisRow("100", "2859", 1),
        DiagnosisRow("102", "486", 1),
    ]
    records, stats = merge_admissions(notes, diagnoses)
    assert len(records) == 1
    assert records[0].admission_id == "100"
    # longest note wins, codes come back in sequence order
    assert records[0].text == "a longer note body"
    assert records[0].codes == ("2859", "4019")
    assert stats.duplicate_notes == 1
    assert stats.notes_without_diagnoses == 1
    assert stats.diagnoses_without_note == 1


def test_merge_output_sorted_by_admission_id():
    notes = [NoteRecord(i, "Discharge summary", "t") for i in ("102", "100", "101")]
    diagnoses = [DiagnosisRow(i, "4019", 1) for i in ("100", "101", "102")]
    records, _ = merge_admissions(notes, diagnoses)
    assert [r.admission_id for r in records] == ["100", "101", "102"]


def test_truncate_code_basics():
    assert truncate_code("25013", 2) == "25"
    assert truncate_code("V5867", 2) == "V5"
    assert truncate_code("28522", 3) == "285"
    assert truncate_code("486", 5) == "486"
    with pytest.raises(ValueError):
        truncate_code("2859", 6)
    with pytest.raises(ValueError):
        truncate_code("", 2)


@given(st.text(alphabet="0123456789VE", min_size=1, max_size=5),
       st.sampled_from([2, 3, 4, 5]))
def test_truncate_is_a_prefix(code, n):
    out = truncate_code(code, n)
    assert code.startswith(out)
    assert len(out) == min(len(code), n)


def test_label_spec_validation():
    with pytest.raises(ValueError):
        LabelSpec(target_prefixes=frozenset(), prefix_len=2)
    with pytest.raises(ValueError):
        LabelSpec(target_prefixes=frozenset({"285"}), prefix_len=2)
    spec = LabelSpec(target_prefixes=frozenset({"28", "v5"}), prefix_len=2)
    assert spec.target_prefixes == frozenset({"28", "V5"})


def test_label_one_vs_rest_small_cases():
    spec = LabelSpec(target_prefixes=frozenset({"28"}), prefix_len=2)
    assert label_one_vs_rest(AdmissionRecord("1", "", ("2859", "4019")), spec) == 1
    assert label_one_vs_rest(AdmissionRecord("2", "", ("4019",)), spec) == 0
    assert label_one_vs_rest(AdmissionRecord("3", "", ()), spec) == 0
    sub = LabelSpec(target_prefixes=frozenset({"285"}), prefix_len=3)
    assert label_one_vs_rest(AdmissionRecord("4", "", ("28522",)), sub) == 1
    assert label_one_vs_rest(AdmissionRecord("5", "", ("2800",)), sub) == 0


def test_labeling_fuzz_against_intersection_oracle():
    rng = np.random.default_rng(7)
    alphabet = list("0123456789VE")
    spec = LabelSpec(target_prefixes=frozenset({"28", "V5", "E8"}), prefix_len=2)
    for _ in range(500):
        n_codes = int(rng.integers(1, 8))
        codes = tuple(
            "".join(rng.choice(alphabet, size=int(rng.integers(2, 6))))
            for _ in range(n_codes)
        )
        expected = int(bool({c[:2] for c in codes} & {"28", "V5", "E8"}))
        assert label_one_vs_rest(AdmissionRecord("x", "", codes), spec) == expected


def test_admissions_round_trip(tmp_path):
    records = [
        AdmissionRecord("100", "text with\nnewline", ("2859", "4019")),
        AdmissionRecord("101", "", ()),
    ]
    path = tmp_path / "admissions.jsonl"
    write_admissions(records, path)
    assert read_admissions(path) == records
