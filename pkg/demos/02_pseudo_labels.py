"""Weakly label transcript sentences by their similarity to the reference summaries."""

from __future__ import annotations

from aspectsum.dataset import build_aspectsent
from aspectsum.embedding import EmbeddingBackendSpec
from aspectsum.labeling import LabelerConfig, label_corpus, label_meeting
from aspectsum.synthetic import make_synthetic_corpus

backend = EmbeddingBackendSpec("hash-bow-test", dim=64)
records = make_synthetic_corpus(6, seed=0)
rec = records[0]

print("decisions reference:", rec.summary("decisions"))
rows = label_meeting(rec, LabelerConfig(alpha=0.46), backend)
for sent, vec in rows[:12]:
    flags = "".join(str(vec.labels[a]) for a in vec.labels)
    print(f"{flags}  sim(decisions)={vec.similarities['decisions']:+.2f}  {sent.text}")

# the threshold trades recall for precision
for alpha in (0.4, 0.46, 0.5):
    labeled = label_corpus(records, LabelerConfig(alpha=alpha), backend)
    _, stats = build_aspectsent(labeled, records)
    print(f"\nalpha={alpha}")
    print(stats.render())

# whole-summary granularity compares against the entire reference at once
whole = label_corpus(records, LabelerConfig(alpha=0.46, summary_granularity="whole-summary"), backend)
print("\npositives with whole-summary units:", sum(sum(r.labels.values()) for r in whole))
