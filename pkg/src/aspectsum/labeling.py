"""Similarity-based pseudo labels for transcript sentences.

A sentence gets label 1 for an aspect when it is semantically close to that
aspect's reference summary and both sides are long enough to be informative:

    Sim_i > alpha  and  len(sentence) > min_sent_tokens  and  len(unit) > min_summary_tokens

``unit`` is either a single summary sentence (``per-summary-sentence``, where
Sim_i is the best match over summary sentences that pass the length gate) or
the whole summary (``whole-summary``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .corpus import DEFAULT_ASPECTS, MeetingRecord, Sentence, count_tokens
from .embedding import EmbeddingBackendSpec, EmbeddingCache, cosine_matrix, embed_matrix
from .errors import ValidationError

GRANULARITIES = ("per-summary-sentence", "whole-summary")
NO_SUMMARY = -1.0

_SUMMARY_SPLIT = re.compile(r"(?<=[.!?])\s+")


def split_summary(text: str) -> list[str]:
    """Split clean summary prose on sentence-final punctuation + whitespace."""
    return [p.strip() for p in _SUMMARY_SPLIT.split(text.strip()) if p.strip()]


@dataclass(frozen=True)
class LabelerConfig:
    alpha: float = 0.46
    min_sent_tokens: int = 4
    min_summary_tokens: int = 6
    summary_granularity: str = "per-summary-sentence"
    aggregation: str = "max"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.summary_granularity not in GRANULARITIES:
            raise ValidationError(f"unknown summary_granularity {self.summary_granularity!r}")
        if self.aggregation != "max":
            raise ValidationError(f"unsupported aggregation {self.aggregation!r}")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "min_sent_tokens": self.min_sent_tokens,
            "min_summary_tokens": self.min_summary_tokens,
            "summary_granularity": self.summary_granularity,
            "aggregation": self.aggregation,
        }

    @classmethod
    def from_dict(cls, d) -> "LabelerConfig":
        return cls(**d)


@dataclass(frozen=True)
class AspectLabelVector:
    labels: Mapping[str, int]
    similarities: Mapping[str, float] = field(default_factory=dict)

    def is_irrelevant(self) -> bool:
        return not any(self.labels.values())


@dataclass(frozen=True)
class LabeledSentence:
    """One row of the pseudo-label output (``labels/{meeting_id}.jsonl``)."""

    meeting_id: str
    sent_idx: int
    labels: Mapping[str, int]
    similarities: Mapping[str, float]

    def to_dict(self) -> dict:
        return {
            "meeting_id": self.meeting_id,
            "sent_idx": self.sent_idx,
            "labels": dict(self.labels),
            "similarities": dict(self.similarities),
        }

    @classmethod
    def from_dict(cls, d) -> "LabeledSentence":
        return cls(d["meeting_id"], int(d["sent_idx"]), dict(d["labels"]), dict(d["similarities"]))


def summary_units(text: Optional[str], granularity: str) -> list[str]:
    if text is None or not text.strip():
        return []
    if granularity == "whole-summary":
        return [text.strip()]
    return split_summary(text)


def _label_rows(
    sentences: Sequence[Sentence],
    summaries: Mapping[str, Optional[str]],
    aspects: Sequence[str],
    cfg: LabelerConfig,
    backend: EmbeddingBackendSpec,
    cache: Optional[EmbeddingCache],
) -> list[AspectLabelVector]:
    units = {a: summary_units(summaries.get(a), cfg.summary_granularity) for a in aspects}
    if not any(units.values()):
        raise ValidationError("no aspect has a reference summary")
    sent_vecs = embed_matrix([s.text for s in sentences], backend, cache)
    sent_ok = np.array([s.token_len > cfg.min_sent_tokens for s in sentences])

    sims: dict[str, np.ndarray] = {}
    for a in aspects:
        eligible = [u for u in units[a] if count_tokens(u) > cfg.min_summary_tokens]
        if not units[a] or not eligible:
            sims[a] = np.full(len(sentences), NO_SUMMARY)
            continue
        unit_vecs = embed_matrix(eligible, backend, cache)
        sims[a] = cosine_matrix(sent_vecs, unit_vecs).max(axis=1)

    out = []
    for i in range(len(sentences)):
        labels = {}
        for a in aspects:
            labels[a] = int(bool(sent_ok[i]) and sims[a][i] > cfg.alpha)
        out.append(AspectLabelVector(labels, {a: float(sims[a][i]) for a in aspects}))
    return out


def label_sentence(
    sent: Sentence,
    summaries: Mapping[str, Optional[str]],
    cfg: LabelerConfig,
    backend: EmbeddingBackendSpec,
    aspects: Sequence[str] = DEFAULT_ASPECTS,
    cache: Optional[EmbeddingCache] = None,
) -> AspectLabelVector:
    """Pseudo-label one sentence against per-aspect reference summaries.

    Aspects without a summary, or whose summary units are all too short to
    pass the length gate, get label 0 and similarity ``-1.0``.
    """
    return _label_rows([sent], summaries, aspects, cfg, backend, cache)[0]


def label_meeting(
    record: MeetingRecord,
    cfg: LabelerConfig,
    backend: EmbeddingBackendSpec,
    aspects: Sequence[str] = DEFAULT_ASPECTS,
    cache: Optional[EmbeddingCache] = None,
) -> list[tuple[Sentence, AspectLabelVector]]:
    summaries = {a: record.summary(a) for a in aspects}
    vectors = _label_rows(record.sentences, summaries, aspects, cfg, backend, cache)
    return list(zip(record.sentences, vectors))


def label_corpus(
    records: Sequence[MeetingRecord],
    cfg: LabelerConfig,
    backend: EmbeddingBackendSpec,
    aspects: Sequence[str] = DEFAULT_ASPECTS,
    cache: Optional[EmbeddingCache] = None,
) -> list[LabeledSentence]:
    rows = []
    for rec in records:
        for sent, vec in label_meeting(rec, cfg, backend, aspects, cache):
            rows.append(LabeledSentence(rec.meeting_id, sent.idx, dict(vec.labels), dict(vec.similarities)))
    return rows
