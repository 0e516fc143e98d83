"""From entity mentions to a weighted categorizer: document-frequency
weights, de-biasing against the rest corpus, and influencing."""

import tempfile
from pathlib import Path

from chaptercoder import synthetic
from chaptercoder.corpus import LabelSpec, merge_admissions, parse_diagnoses, parse_notes
from chaptercoder.entities import (
    InfluenceConfig,
    LexiconMatcher,
    clean_entity_list,
    debias,
    doc_frequency_weights,
    influence,
    load_lexicon,
    top_prevalent,
)
from chaptercoder.pipeline import summary_labels
from chaptercoder.sectioner import summarize_corpus

workdir = Path(tempfile.mkdtemp(prefix="chaptercoder-demo-"))
paths = synthetic.write_corpus(workdir)

notes = parse_notes(paths["notes"])
diagnoses = parse_diagnoses(paths["diagnoses"])
records, _ = merge_admissions(notes.records, diagnoses.rows)
summaries, _ = summarize_corpus(records)
labels = summary_labels(summaries, LabelSpec(frozenset({"28"}), 2))
chapter_docs = [s for s, _ in summaries if labels[s.admission_id] == 1]
rest_docs = [s for s, _ in summaries if labels[s.admission_id] == 0]
print(f"{len(chapter_docs)} chapter docs, {len(rest_docs)} rest docs")

# A lexicon matcher stands in for the external extractor here: longest
# match wins and matches never overlap.
matcher = LexiconMatcher(load_lexicon(paths["lexicon"]))
mentions = {s.admission_id: matcher.mentions(s) for s in chapter_docs}
candidates = top_prevalent(mentions, 10)
cleaned = clean_entity_list(candidates)
print(f"top prevalent entities: {candidates}")

# Raw weight = share of documents mentioning the entity, held as integer
# cents so every later comparison is exact.
raw_chapter = doc_frequency_weights(cleaned, chapter_docs)
raw_rest = doc_frequency_weights(cleaned, rest_docs)
print("\nentity weights by stage:")
print(f"{'entity':18s} {'chapter':>8s} {'rest':>6s} {'debiased':>9s} {'influenced':>11s}")

# De-bias drops anything not genuinely more frequent inside the chapter;
# influence injects curated terms at 0.5 and doubles strong survivors.
debiased = debias(raw_chapter, raw_rest)
config = InfluenceConfig(frozenset({"anemia", "coagulopathy"}))
influenced = influence(debiased, config, raw_chapter, raw_rest)
for entity in sorted(set(raw_chapter.cents) | set(influenced.cents)):
    cells = (
        raw_chapter.weights.get(entity, ""),
        raw_rest.weights.get(entity, ""),
        debiased.weights.get(entity, ""),
        influenced.weights.get(entity, ""),
    )
    print(f"{entity:18s} {cells[0]!s:>8s} {cells[1]!s:>6s} "
          f"{cells[2]!s:>9s} {cells[3]!s:>11s}")

print(f"\nsizes: raw {len(raw_chapter)}, debiased {len(debiased)}, "
      f"influenced {len(influenced)}")
print("provenance of influenced entities:")
for entity in influenced.entities():
    print(f"  {entity:18s} {influenced.provenance[entity]}")
