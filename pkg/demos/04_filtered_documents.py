"""Turn sentence predictions into one special-token-prefixed document per aspect."""

from __future__ import annotations

import numpy as np

from aspectsum.embedding import EmbeddingBackendSpec
from aspectsum.selection import OracleFilterConfig, SentencePrediction, build_inference_docs, oracle_filter
from aspectsum.synthetic import make_synthetic_corpus

rec = make_synthetic_corpus(1, seed=7)[0]
aspects = ("abstract", "problems", "actions", "decisions")

# stand-in classifier output: a few confident sentences, the rest uncertain
rng = np.random.default_rng(0)
preds = [
    SentencePrediction(rec.meeting_id, s.idx, {a: float(rng.random()) for a in aspects}, {a: int(rng.random() < 0.1) for a in aspects})
    for s in rec.sentences
]
for doc in build_inference_docs([rec], {rec.meeting_id: preds}, aspects, fallback_k=3):
    note = " (fallback: top 3 by probability)" if doc.fallback_used else ""
    print(f"{doc.aspect}: sentences {list(doc.selected)}{note}")
    print("   ", doc.text[:120], "...")

# the oracle keeps whatever resembles the reference summary itself
print()
for alpha in (0.4, 0.46, 0.5):
    docs = oracle_filter(rec, OracleFilterConfig(alpha, EmbeddingBackendSpec()), aspects)
    print(f"oracle alpha={alpha}:", {a: len(d.selected) for a, d in docs.items()})
