"""Pull four narrative sections out of a discharge note and build the
short summary used everywhere downstream."""

from chaptercoder.sectioner import (
    SECTION_ORDER,
    build_short_summary,
    extract_sections,
    normalize_text,
)

NOTE = """Admission Date: 2141-03-02
History of Present Illness
78 year old with fatigue, melena and a hematocrit of 19.
Past Medical History
iron deficiency anemia, CKD stage III
Pertinent Results
HCT 19.2 -> 24.1 after transfusion; EGD with oozing ulcer
Brief Hospital Course
Transfused 2 units, PPI started, hematocrit stable at discharge.
Discharge Medication
omeprazole 40mg daily
Discharge Diagnosis
acute blood loss anemia
Discharge Condition
stable
"""

# Headers are matched on a lowercased, whitespace-flattened copy of the
# note, so line breaks and casing never matter.
sections = extract_sections(NOTE)
for name in SECTION_ORDER:
    print(f"{name:21s} {getattr(sections, name)!r}")

# The short summary is the four sections normalized (letters and single
# spaces only) and concatenated in a fixed order.
summary = build_short_summary("100001", sections)
print(f"\nsummary text: {summary.text!r}")
print(f"section spans: {summary.section_spans}")

# Admissions missing any one of the four sections are excluded outright;
# a note whose results section never appears yields no summary.
partial = extract_sections(NOTE.replace("Pertinent Results", "Labs"))
print(f"\nwithout a results header: {build_short_summary('x', partial)}")

print(f"\nnormalize_text('HCT 19.2 -> 24.1 (stable)!') = "
      f"{normalize_text('HCT 19.2 -> 24.1 (stable)!')!r}")
