"""Per-aspect sentence selection and summarization-input assembly.

For each (meeting, aspect) the sentences predicted relevant to the aspect are
merged in transcript order and prefixed with that aspect's special token.
Training targets carry the same prefix, so one summarizer can serve every
aspect and each meeting contributes one training pair per available summary.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .corpus import DEFAULT_ASPECTS, MeetingRecord
from .embedding import EmbeddingBackendSpec, EmbeddingCache, cosine_matrix, embed_matrix
from .errors import ConfigurationError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_FALLBACK_K = 10


def special_token(aspect: str) -> str:
    return f"<asp:{aspect}>"


@dataclass(frozen=True)
class SentencePrediction:
    """Classifier output for one sentence (``preds/{meeting_id}.jsonl`` row)."""

    meeting_id: str
    sent_idx: int
    probs: Mapping[str, float]
    labels: Mapping[str, int]

    def to_dict(self) -> dict:
        return {"meeting_id": self.meeting_id, "sent_idx": self.sent_idx, "probs": dict(self.probs), "labels": dict(self.labels)}

    @classmethod
    def from_dict(cls, d) -> "SentencePrediction":
        return cls(d["meeting_id"], int(d["sent_idx"]), dict(d["probs"]), dict(d["labels"]))


@dataclass(frozen=True)
class AspectFilteredDoc:
    meeting_id: str
    aspect: str
    special_token: str
    selected: tuple[int, ...]
    text: str
    fallback_used: bool = False
    target_summary: Optional[str] = None
    empty_selection: bool = False
    split: Optional[str] = None

    @property
    def body(self) -> str:
        """The merged sentences without the leading special token."""
        return self.text[len(self.special_token) :].strip()

    def to_dict(self) -> dict:
        return {
            "meeting_id": self.meeting_id,
            "aspect": self.aspect,
            "special_token": self.special_token,
            "selected": list(self.selected),
            "text": self.text,
            "fallback_used": self.fallback_used,
            "target_summary": self.target_summary,
            "empty_selection": self.empty_selection,
            "split": self.split,
        }

    @classmethod
    def from_dict(cls, d) -> "AspectFilteredDoc":
        return cls(
            d["meeting_id"],
            d["aspect"],
            d["special_token"],
            tuple(d["selected"]),
            d["text"],
            bool(d.get("fallback_used", False)),
            d.get("target_summary"),
            bool(d.get("empty_selection", False)),
            d.get("split"),
        )


def assemble_doc(record: MeetingRecord, aspect: str, selected: Iterable[int], **flags) -> AspectFilteredDoc:
    selected = tuple(sorted(set(int(i) for i in selected)))
    tok = special_token(aspect)
    text = " ".join([tok, *(record.sentences[i].text for i in selected)])
    target = record.summary(aspect)
    return AspectFilteredDoc(
        record.meeting_id,
        aspect,
        tok,
        selected,
        text,
        target_summary=None if target is None else f"{tok} {target}",
        empty_selection=not selected,
        split=record.split,
        **flags,
    )


def _pred_table(record: MeetingRecord, preds) -> list:
    """Normalize predictions for one meeting to a list indexed by sent_idx."""
    if isinstance(preds, Mapping) and record.meeting_id in preds:
        preds = preds[record.meeting_id]
    preds = list(preds)
    if len(preds) != len(record.sentences):
        raise ValidationError(
            f"meeting {record.meeting_id!r}: {len(preds)} predictions for {len(record.sentences)} sentences"
        )
    out = []
    for p in preds:
        if isinstance(p, SentencePrediction):
            out.append((p.probs, p.labels))
        else:  # (AspectProbabilities, AspectLabelVector) pairs from predict_labels
            probs, labels = p
            out.append((probs.probs, labels.labels))
    return out


def select_for_aspect(
    record: MeetingRecord,
    preds,
    aspect: str,
    fallback_k: int = DEFAULT_FALLBACK_K,
    candidates: Optional[set[int]] = None,
) -> AspectFilteredDoc:
    """Merge the sentences labeled for ``aspect``; fall back to the top-k by probability.

    ``candidates`` optionally restricts which sentence indices may be used.
    """
    table = _pred_table(record, preds)
    if table and aspect not in table[0][1]:
        raise ConfigurationError(f"no predictions for aspect {aspect!r}")
    pool = range(len(table)) if candidates is None else sorted(i for i in candidates if 0 <= i < len(table))
    chosen = [i for i in pool if table[i][1][aspect] == 1]
    if chosen:
        return assemble_doc(record, aspect, chosen)
    ranked = sorted(pool, key=lambda i: (-table[i][0][aspect], i))
    return assemble_doc(record, aspect, ranked[:fallback_k], fallback_used=True)


def build_summarization_dataset(
    records: Sequence[MeetingRecord],
    preds: Mapping,
    aspect_set: Sequence[str] = DEFAULT_ASPECTS,
    fallback_k: int = DEFAULT_FALLBACK_K,
    candidates: Optional[Mapping[str, set[int]]] = None,
) -> list[AspectFilteredDoc]:
    """One target-bearing doc per (meeting, aspect) with a reference summary."""
    docs = []
    for rec in records:
        pool = None if candidates is None else candidates.get(rec.meeting_id, set())
        for aspect in rec.aspects_present(aspect_set):
            docs.append(select_for_aspect(rec, preds[rec.meeting_id], aspect, fallback_k, pool))
    return docs


def build_inference_docs(
    records: Sequence[MeetingRecord],
    preds: Mapping,
    aspect_set: Sequence[str] = DEFAULT_ASPECTS,
    fallback_k: int = DEFAULT_FALLBACK_K,
    candidates: Optional[Mapping[str, set[int]]] = None,
) -> list[AspectFilteredDoc]:
    """All m docs per meeting, whether or not a reference exists."""
    docs = []
    for rec in records:
        pool = None if candidates is None else candidates.get(rec.meeting_id, set())
        for aspect in aspect_set:
            docs.append(select_for_aspect(rec, preds[rec.meeting_id], aspect, fallback_k, pool))
    return docs


@dataclass(frozen=True)
class OracleFilterConfig:
    alpha: float = 0.46
    backend: EmbeddingBackendSpec = EmbeddingBackendSpec()
    granularity: str = "whole-summary"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.granularity != "whole-summary":
            raise ValidationError("oracle filtering always compares against the whole summary")

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "backend": self.backend.to_dict(), "granularity": self.granularity}

    @classmethod
    def from_dict(cls, d) -> "OracleFilterConfig":
        d = dict(d)
        if isinstance(d.get("backend"), Mapping):
            d["backend"] = EmbeddingBackendSpec.from_dict(d["backend"])
        return cls(**d)


def oracle_similarities(
    record: MeetingRecord,
    backend: EmbeddingBackendSpec,
    aspects: Sequence[str] = DEFAULT_ASPECTS,
    cache: Optional[EmbeddingCache] = None,
) -> dict[str, np.ndarray]:
    """Cosine of every sentence against each available whole reference summary."""
    present = record.aspects_present(aspects)
    if not present:
        return {}
    sents = embed_matrix([s.text for s in record.sentences], backend, cache)
    summ = embed_matrix([record.summary(a) for a in present], backend, cache)
    sims = cosine_matrix(sents, summ)
    return {a: sims[:, j] for j, a in enumerate(present)}


def oracle_filter(
    record: MeetingRecord,
    cfg: OracleFilterConfig,
    aspects: Sequence[str] = DEFAULT_ASPECTS,
    cache: Optional[EmbeddingCache] = None,
) -> dict[str, AspectFilteredDoc]:
    """Keep sentences whose similarity to the aspect's reference exceeds alpha.

    No fallback: an empty selection yields an empty doc with
    ``empty_selection=True``.
    """
    for a in aspects:
        if record.summary(a) is None:
            logger.warning("oracle filter: %s has no %r summary; skipping", record.meeting_id, a)
    sims = oracle_similarities(record, cfg.backend, aspects, cache)
    docs = {}
    for a, col in sims.items():
        doc = assemble_doc(record, a, np.flatnonzero(col > cfg.alpha))
        if doc.empty_selection:
            logger.warning("oracle filter kept nothing for %s/%s at alpha=%g", record.meeting_id, a, cfg.alpha)
        docs[a] = doc
    return docs
