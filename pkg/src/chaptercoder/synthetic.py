"""Deterministic synthetic fixtures.

Two generators:
  - a small admission corpus (notes + diagnoses CSV) that exercises every
    pipeline stage: category filtering, duplicate notes, join drops, bad
    diagnosis rows, incomplete sections, and a weight profile that makes
    de-biasing and influencing visibly change categorization
  - a separable token dataset (label 1 iff the token "marker" appears) for
    training-quality checks

The admission corpus is literal by design.  Entity placement fixes every
document frequency, so the expected weights are auditable by hand:

  entity            ch df/8  rest df/10  raw ch  raw rest  debiased  influenced
  anemia               8        1         100      10        90        180
  transfusion          6        1          75      10        65        130
  thrombocytopenia     4        0          50       0        50        100
  iron deficiency      4        0          50       0        50        100
  bleeding             4        4          50      40        10         10  (delta = margin, not doubled)
  fatigue              5        6          63      60         3          3
  hypertension         4        7          50      70         dropped
  renal failure        1        3          13      30         dropped
  pneumonia            1        3          13      30         dropped
  coagulopathy         curated term, injected at 0.50

Filler vocabulary avoids every lexicon phrase, so the counts above are exact.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .nn.models import LabeledDoc, ModelConfig

LEXICON_PHRASES = (
    "anemia",
    "bleeding",
    "chest pain",
    "fatigue",
    "hypertension",
    "iron deficiency",
    "pneumonia",
    "renal failure",
    "thrombocytopenia",
    "transfusion",
)

CURATED_TERMS = ("anemia", "coagulopathy")

NOTE_CATEGORY = "Discharge summary"


def _note(hpi, results, course, diagnosis, meds="home medications resumed without change"):
    return (
        "Admission Date: [**2101-1-12**]   Discharge Date: [**2101-1-19**]\n\n"
        "History of Present Illness\n"
        f"{hpi}\n"
        "Past Medical History\n"
        "reviewed and unchanged from prior records\n"
        "Pertinent Results\n"
        f"{results}\n"
        "Brief Hospital Course\n"
        f"{course}\n"
        "Discharge Medication\n"
        f"{meds}\n"
        "Discharge Diagnosis\n"
        f"{diagnosis}\n"
        "Discharge Condition\n"
        "stable, ambulating independently\n"
    )


# (admission_id, note_text, codes in seq order); codes starting 28 put the
# admission in the target chapter
_CHAPTER_DOCS = [
    ("100101",
     _note("elderly patient admitted with worsening fatigue and pallor over two weeks",
           "hematocrit 21.3, mcv 68, ferritin 4, smear with an iron-deficiency picture",
           "received one unit transfusion with appropriate bump, thrombocytopenia monitored serially",
           "acute blood loss anemia"),
     ["2859", "4019"]),
    ("100102",
     _note("progressive fatigue limiting daily activity, no melena reported",
           "hematocrit 24.5, platelets 88, \"repeat\" counts pending at discharge planning",
           "transfusion given on day two, thrombocytopenia improved, aspiration pneumonia treated with antibiotics",
           "anemia of chronic disease"),
     ["28522"]),
    ("100103",
     _note("longstanding hypertension, now with fatigue and lightheadedness on standing",
           "guaiac positive stool, iron deficiency confirmed by studies",
           "two unit transfusion, thrombocytopenia stable without intervention",
           "anemia due to blood loss"),
     ["2875", "25000"]),
    ("100104",
     _note("poorly controlled hypertension and new fatigue with exertion",
           "iron deficiency indices, reticulocyte count inappropriately low",
           "cross matched and given transfusion, mild thrombocytopenia followed",
           "anemia, unspecified"),
     ["2869", "V4581"]),
    ("100105",
     _note("hypertension on two agents, presenting with fatigue and dark stools",
           "iron deficiency profile with ferritin 6 and low saturation",
           "lower gastrointestinal bleeding localized, transfusion support provided",
           "acute posthemorrhagic anemia"),
     ["28800"]),
    ("100106",
     _note("known hypertension, referred for recurrent epistaxis",
           "serial counts trending down overnight, type and screen active",
           "mucosal bleeding controlled, transfusion once, course complicated by transient renal failure",
           "anemia secondary to blood loss"),
     ["2899", "41401"]),
    ("100107",
     _note("transferred from rehabilitation for oozing at procedure sites",
           "inr 2.8 without warfarin, fibrinogen low on repeat checks",
           "diffuse bleeding in the setting of coagulopathy, vitamin k given",
           "anemia with abnormal coagulation"),
     ["2851"]),
    ("100108",
     _note("presented after a fall at home, bruising noted by family",
           "ct imaging without acute findings, counts mildly reduced",
           "minor bleeding from superficial laceration, observed overnight",
           "anemia, mild"),
     ["2800", "E8782"]),
]

_REST_DOCS = [
    ("100201",
     _note("hypertension history, admitted for elective joint replacement, reports fatigue",
           "postoperative labs acceptable, drains removed on schedule",
           "single transfusion after the procedure, physical therapy progressed",
           "osteoarthritis, status post arthroplasty"),
     ["4019", "5849"]),
    ("100202",
     _note("diabetes follow up, fatigue attributed to poor sleep, hypertension noted",
           "glucose trending high overnight, lipid panel unremarkable",
           "insulin adjusted, minor bleeding at lancet access site resolved",
           "diabetes mellitus with chronic anemia, stable"),
     ["25000"]),
    ("100203",
     _note("exertional symptoms during cardiac rehabilitation, fatigue for one month",
           "stress testing completed without arrhythmia",
           "small bleeding from catheter site, pressure dressing applied",
           "coronary artery disease"),
     ["41401"]),
    ("100204",
     _note("dysuria and flank discomfort, fatigue for several days",
           "urine culture positive, imaging without obstruction",
           "iv antibiotics narrowed by sensitivities, oozing bleeding at iv site noted once",
           "urinary tract infection"),
     ["5990"]),
    ("100205",
     _note("productive cough and fevers at home, fatigue prominent",
           "chest film with right lower lobe consolidation",
           "bleeding gums after brushing noted by nursing, vitamin c encouraged",
           "community acquired lobar infection"),
     ["486"]),
    ("100206",
     _note("dyspnea on exertion, orthopnea, fatigue, hypertension on one agent",
           "echocardiogram with reduced ejection fraction",
           "diuresis effective, creatinine bumped consistent with renal failure, resolved",
           "congestive heart failure exacerbation"),
     ["4280"]),
    ("100207",
     _note("hypertension urgency in clinic, headaches for three days",
           "chemistry panel with creatinine 2.1 from baseline 1.0",
           "blood pressure controlled, renal failure workup unrevealing, pneumonia ruled out",
           "hypertensive urgency"),
     ["5849", "4019"]),
    ("100208",
     _note("cough and pleuritic chest pain, hypertension history",
           "infiltrate on imaging consistent with pneumonia",
           "antibiotics for pneumonia, renal failure avoided with gentle fluids",
           "lobar pneumonia"),
     ["486"]),
    ("100209",
     _note("chest pain at rest, diabetic, hypertension on three agents",
           "serial troponins negative, pneumonia considered and excluded",
           "medical management optimized, stress imaging arranged as outpatient",
           "atypical chest pain"),
     ["25000", "4280"]),
    ("100210",
     _note("recurrent chest pain with exertion, hypertension",
           "catheterization with stable disease, no new lesions",
           "medications titrated, ambulating without symptoms",
           "stable angina"),
     ["41401"]),
]

# each omits exactly the section named in the comment
_INCOMPLETE_DOCS = [
    ("100301",  # no history-of-present-illness header
     ("Admission Date: [**2101-2-2**]\n\n"
      "Past Medical History\nextensive, reviewed\n"
      "Pertinent Results\nhematocrit 23, iron deficiency indices\n"
      "Brief Hospital Course\ntransfusion provided, anemia addressed\n"
      "Discharge Medication\nresumed home list\n"
      "Discharge Diagnosis\nanemia\n"
      "Discharge Condition\nstable\n"),
     ["2859"]),
    ("100302",  # no pertinent-results section
     ("History of Present Illness\nfatigue and pallor\n"
      "Past Medical History\nnone\n"
      "Brief Hospital Course\ntransfusion overnight, counts followed\n"
      "Discharge Medication\nnone new\n"
      "Discharge Diagnosis\nanemia\n"
      "Discharge Condition\nstable\n"),
     ["28522"]),
    ("100303",  # hospital course never terminated: no discharge-medication header
     ("History of Present Illness\nhypertension follow up\n"
      "Past Medical History\nhypertension\n"
      "Pertinent Results\nlabs stable\n"
      "Brief Hospital Course\nuneventful observation\n"
      "Discharge Diagnosis\nhypertension\n"
      "Discharge Condition\nstable\n"),
     ["4019"]),
    ("100304",  # no discharge-diagnosis section
     ("History of Present Illness\ncough and fevers\n"
      "Past Medical History\nasthma\n"
      "Pertinent Results\ninfiltrate on film\n"
      "Brief Hospital Course\nantibiotics for pneumonia\n"
      "Discharge Medication\nantibiotic course to finish\n"
      "Discharge Condition\nstable\n"),
     ["486"]),
]

_EMPTY_TEXT_DOC = ("100401", "", ["4019"])
_NOTE_WITHOUT_DIAGNOSES = ("100402", _note(
    "observation after minor vehicle accident",
    "imaging unremarkable",
    "monitored overnight without events",
    "contusion"))
_DIAGNOSES_WITHOUT_NOTE = ("100403", ["2859"])

CHAPTER_IDS = tuple(doc_id for doc_id, _, _ in _CHAPTER_DOCS)
REST_IDS = tuple(doc_id for doc_id, _, _ in _REST_DOCS)
SUMMARY_COUNT = len(_CHAPTER_DOCS) + len(_REST_DOCS)


def note_rows():
    """(admission_id, category, text) rows including the filtered, duplicate,
    and unmergeable cases."""
    rows = []
    for doc_id, text, _ in _CHAPTER_DOCS + _REST_DOCS:
        rows.append((doc_id, NOTE_CATEGORY, text))
    for doc_id, text, _ in _INCOMPLETE_DOCS:
        rows.append((doc_id, NOTE_CATEGORY, text))
    rows.append((_EMPTY_TEXT_DOC[0], NOTE_CATEGORY, _EMPTY_TEXT_DOC[1]))
    rows.append((_NOTE_WITHOUT_DIAGNOSES[0], NOTE_CATEGORY, _NOTE_WITHOUT_DIAGNOSES[1]))
    # duplicate, shorter note for an admission that already has one
    rows.append(("100101", NOTE_CATEGORY, "History of Present Illness\nshort duplicate\n"))
    # wrong category, filtered at parse time
    rows.append(("100201", "Radiology", "portable chest film, lines in standard position"))
    return rows


def diagnosis_rows():
    """(admission_id, icd9_code, seq_num) rows including two malformed ones."""
    rows = []
    for doc_id, _, codes in _CHAPTER_DOCS + _REST_DOCS + _INCOMPLETE_DOCS:
        for seq, code in enumerate(codes, start=1):
            rows.append((doc_id, code, str(seq)))
    doc_id, _, codes = _EMPTY_TEXT_DOC
    for seq, code in enumerate(codes, start=1):
        rows.append((doc_id, code, str(seq)))
    for seq, code in enumerate(_DIAGNOSES_WITHOUT_NOTE[1], start=1):
        rows.append((_DIAGNOSES_WITHOUT_NOTE[0], code, str(seq)))
    rows.append(("100202", "", "3"))        # empty code, skipped
    rows.append(("100203", "41401", "x"))   # non-numeric seq, skipped
    return rows


def write_corpus(dir_path):
    """Write notes.csv, diagnoses.csv, lexicon.txt, and curated.txt;
    returns their paths as a dict."""
    out = Path(dir_path)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "notes": out / "notes.csv",
        "diagnoses": out / "diagnoses.csv",
        "lexicon": out / "lexicon.txt",
        "curated": out / "curated.txt",
    }
    with open(paths["notes"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ROW_ID", "HADM_ID", "CATEGORY", "TEXT"])
        for i, (doc_id, category, text) in enumerate(note_rows(), start=1):
            writer.writerow([i, doc_id, category, text])
    with open(paths["diagnoses"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ROW_ID", "HADM_ID", "ICD9_CODE", "SEQ_NUM"])
        for i, (doc_id, code, seq) in enumerate(diagnosis_rows(), start=1):
            writer.writerow([i, doc_id, code, seq])
    paths["lexicon"].write_text("".join(f"{p}\n" for p in LEXICON_PHRASES), encoding="utf-8")
    paths["curated"].write_text("".join(f"{t}\n" for t in CURATED_TERMS), encoding="utf-8")
    return paths


_FILLER = ("alpha", "beta", "gamma", "delta", "epsilonx", "zeta", "eta", "theta", "iota", "kappa")


def separable_docs(n_docs=200, seed=0):
    """Token documents where label 1 holds iff the token "marker" appears."""
    rng = np.random.Generator(np.random.PCG64(seed))
    docs = []
    for i in range(n_docs):
        label = i % 2
        tokens = [str(t) for t in rng.choice(_FILLER, size=12)]
        if label:
            tokens.insert(int(rng.integers(0, len(tokens) + 1)), "marker")
        docs.append(LabeledDoc(doc_id=f"doc{i:03d}", text=" ".join(tokens), label=label))
    return docs


def separable_config(kind, seed=0, epochs=5):
    """Desk-scale training configuration that reliably fits separable_docs."""
    return ModelConfig(
        kind=kind, max_len=16, embed_dim=24, hidden_dim=16, heads=4, ffn_dim=32,
        dropout=0.2, batch_size=8, learning_rate=5e-3, epochs=epochs, seed=seed,
    )
