"""Section extraction fixtures and text normalization properties."""

import json
import string

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chaptercoder.corpus import AdmissionRecord
from chaptercoder.sectioner import (
    DEFAULT_SECTION_PATTERNS,
    SECTION_ORDER,
    build_short_summary,
    extract_sections,
    flatten_for_matching,
    load_section_patterns,
    normalize_text,
    read_summaries,
    summarize_corpus,
    write_summaries,
)

# Twelve handcrafted notes. Expected captures were worked out by hand against
# the default patterns (which match on the lowercased, space-flattened text).
NOTE_FIXTURES = [
    (
        "History of Present Illness anemia and fatigue Past Medical History none "
        "Pertinent Results hct 21 Brief Hospital Course transfusion given "
        "Discharge Medication iron Discharge Diagnosis acute anemia Discharge Condition stable",
        {
            "hpi": "anemia and fatigue",
            "pertinent_results": "hct 21",
            "hospital_course": "transfusion given",
            "discharge_diagnosis": "acute anemia",
        },
    ),
    (
        "History of Present Illness\n\n  shortness of breath\nPast Medical History\n asthma\n"
        "Pertinent Results\n wbc elevated\nBrief Hospital Course\n improved on antibiotics\n"
        "Discharge Medication\n albuterol\nDischarge Diagnosis\n pneumonia\nDischarge Condition\n good",
        {
            "hpi": "shortness of breath",
            "pertinent_results": "wbc elevated",
            "hospital_course": "improved on antibiotics",
            "discharge_diagnosis": "pneumonia",
        },
    ),
    # non-greedy capture stops at the first terminator occurrence
    (
        "History of Present Illness melena for two days Past Medical History gi bleed "
        "Pertinent Results hct 19 Brief Hospital Course egd performed see discharge "
        "medication list Discharge Medication omeprazole Discharge Diagnosis gi bleed "
        "Discharge Condition stable",
        {
            "hpi": "melena for two days",
            "pertinent_results": "hct 19",
            "hospital_course": "egd performed see",
            "discharge_diagnosis": "gi bleed",
        },
    ),
    (
        "Admission Date 2112-3-4 History of Present Illness 78M w/ DOE & fatigue; EF 25%! "
        "Past Medical History CHF, CKD-3 Pertinent Results Na+ 139, K+ 4.2 (stable)! "
        "Brief Hospital Course diuresed; weight down 3kg Discharge Medication lasix 40mg "
        "Discharge Diagnosis acute on chronic CHF Discharge Condition improved",
        {
            "hpi": "78m w/ doe & fatigue; ef 25%!",
            "pertinent_results": "na+ 139, k+ 4.2 (stable)!",
            "hospital_course": "diuresed; weight down 3kg",
            "discharge_diagnosis": "acute on chronic chf",
        },
    ),
    # each of the four headers absent, one at a time
    (
        "Chief Complaint fatigue Past Medical History anemia Pertinent Results hct 20 "
        "Brief Hospital Course transfused two units Discharge Medication iron "
        "Discharge Diagnosis anemia Discharge Condition fair",
        {
            "hpi": None,
            "pertinent_results": "hct 20",
            "hospital_course": "transfused two units",
            "discharge_diagnosis": "anemia",
        },
    ),
    (
        "History of Present Illness dizziness Past Medical History none "
        "Brief Hospital Course observed Discharge Medication none "
        "Discharge Diagnosis dizziness Discharge Condition stable",
        {
            "hpi": "dizziness",
            "pertinent_results": None,
            "hospital_course": "observed",
            "discharge_diagnosis": "dizziness",
        },
    ),
    (
        "History of Present Illness weakness Past Medical History diabetes "
        "Pertinent Results glucose high Brief Hospital Stay uneventful "
        "Discharge Medication insulin Discharge Diagnosis hyperglycemia Discharge Condition good",
        {
            "hpi": "weakness",
            "pertinent_results": "glucose high",
            "hospital_course": None,
            "discharge_diagnosis": "hyperglycemia",
        },
    ),
    (
        "History of Present Illness cough Past Medical History copd "
        "Pertinent Results cxr clear Brief Hospital Course nebs given "
        "Discharge Medication prednisone Discharge Condition stable",
        {
            "hpi": "cough",
            "pertinent_results": "cxr clear",
            "hospital_course": "nebs given",
            "discharge_diagnosis": None,
        },
    ),
    # colons after headers break the literal space-delimited patterns
    (
        "History of Present Illness: fevers Past Medical History: none "
        "Pertinent Results: wbc 15 Brief Hospital Course: antibiotics "
        "Discharge Medication: augmentin Discharge Diagnosis: pneumonia Discharge Condition: stable",
        {
            "hpi": None,
            "pertinent_results": None,
            "hospital_course": None,
            "discharge_diagnosis": None,
        },
    ),
    # plural "medications" is not the singular terminator the pattern wants
    (
        "History of Present Illness nausea Past Medical History gerd "
        "Pertinent Results lipase normal Brief Hospital Course supportive care "
        "Discharge Medications zofran Discharge Diagnosis gastritis Discharge Condition improved",
        {
            "hpi": "nausea",
            "pertinent_results": "lipase normal",
            "hospital_course": None,
            "discharge_diagnosis": "gastritis",
        },
    ),
    # header immediately followed by its terminator captures nothing
    (
        "History of Present Illness Past Medical History anemia Pertinent Results hgb 7 "
        "Brief Hospital Course transfused Discharge Medication folate "
        "Discharge Diagnosis anemia Discharge Condition fair",
        {
            "hpi": None,
            "pertinent_results": "hgb 7",
            "hospital_course": "transfused",
            "discharge_diagnosis": "anemia",
        },
    ),
    # diagnosis at the very end of the note has no trailing terminator
    (
        "History of Present Illness ankle pain Past Medical History none "
        "Pertinent Results xray negative Brief Hospital Course ice and rest "
        "Discharge Medication ibuprofen Discharge Diagnosis ankle sprain",
        {
            "hpi": "ankle pain",
            "pertinent_results": "xray negative",
            "hospital_course": "ice and rest",
            "discharge_diagnosis": None,
        },
    ),
]


@pytest.mark.parametrize("raw,expected", NOTE_FIXTURES, ids=[f"note{i + 1}" for i in range(12)])
def test_extract_sections_fixtures(raw, expected):
    sections = extract_sections(raw)
    for name in SECTION_ORDER:
        assert getattr(sections, name) == expected[name], name


def test_fixture_coverage():
    # exactly one note per single-header-absent case, plus complete notes
    complete = [e for _, e in NOTE_FIXTURES if all(e[n] is not None for n in SECTION_ORDER)]
    assert len(complete) == 4
    for name in SECTION_ORDER:
        lacking_only = [
            e for _, e in NOTE_FIXTURES
            if e[name] is None and sum(v is None for v in e.values()) == 1
        ]
        assert lacking_only, name


def test_flatten_for_matching():
    assert flatten_for_matching("A  B\n\tC") == " a b c "
    assert flatten_for_matching("") == "  "


def test_normalize_text_examples():
    assert normalize_text("Na+ 139, K+ 4.2 (stable)!") == "na k stable"
    assert normalize_text("  HCT 21  ") == "hct"
    assert normalize_text("123 456") == ""


@given(st.text(max_size=200))
def test_normalize_text_idempotent(text):
    once = normalize_text(text)
    assert normalize_text(once) == once
    assert set(once) <= set(string.ascii_lowercase + " ")
    assert "  " not in once
    assert once == once.strip()


def test_normalize_text_idempotent_seeded_fuzz():
    rng = np.random.default_rng(11)
    alphabet = list(string.printable)
    for _ in range(1000):
        n = int(rng.integers(0, 80))
        text = "".join(rng.choice(alphabet, size=n))
        once = normalize_text(text)
        assert normalize_text(once) == once


def test_build_short_summary_concatenation_and_spans():
    sections = extract_sections(NOTE_FIXTURES[0][0])
    summary = build_short_summary("100", sections)
    assert summary.text == "anemia and fatigue hct transfusion given acute anemia"
    assert summary.section_spans == {
        "hpi": (0, 18),
        "pertinent_results": (19, 22),
        "hospital_course": (23, 40),
        "discharge_diagnosis": (41, 53),
    }
    for name, (lo, hi) in summary.section_spans.items():
        assert summary.text[lo:hi] == normalize_text(getattr(sections, name))


def test_build_short_summary_requires_all_four():
    for raw, expected in NOTE_FIXTURES:
        summary = build_short_summary("x", extract_sections(raw))
        if all(expected[n] is not None for n in SECTION_ORDER):
            assert summary is not None
        else:
            assert summary is None


def test_summarize_corpus_counts_exclusions():
    admissions = [
        AdmissionRecord(str(i), raw, ("2859",)) for i, (raw, _) in enumerate(NOTE_FIXTURES)
    ]
    summaries, excluded = summarize_corpus(admissions)
    assert len(summaries) == 4
    assert excluded == 8
    assert summaries[0][1] == ("2859",)


def test_load_section_patterns(tmp_path):
    path = tmp_path / "patterns.json"
    path.write_text(json.dumps({"hpi": r" complaint (.*?) history "}))
    patterns = load_section_patterns(path)
    assert patterns["hpi"] == r" complaint (.*?) history "
    for name in SECTION_ORDER[1:]:
        assert patterns[name] == DEFAULT_SECTION_PATTERNS[name]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nope": ".*"}))
    with pytest.raises(ValueError):
        load_section_patterns(bad)


def test_custom_patterns_change_extraction():
    patterns = dict(DEFAULT_SECTION_PATTERNS)
    patterns["hpi"] = r" chief complaint (.*?) past medical history "
    sections = extract_sections(NOTE_FIXTURES[4][0], patterns)
    assert sections.hpi == "fatigue"


def test_summaries_round_trip(tmp_path):
    admissions = [AdmissionRecord("7", NOTE_FIXTURES[0][0], ("2859", "4019"))]
    summaries, _ = summarize_corpus(admissions)
    path = tmp_path / "summaries.jsonl"
    write_summaries(summaries, path)
    assert read_summaries(path) == summaries
