"""File-level pipeline stages.

Each function reads upstream artifacts from disk and writes its own output
directory, so stages can be run one at a time from the command line or
chained by :mod:`aspectsum.pipeline`.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional, Sequence

from .classifier import ClassifierConfig, ClassifierModel, predict_labels, score_classifier, train_classifier
from .corpus import DEFAULT_ASPECTS, MeetingRecord, ingest_corpus, load_corpus, write_corpus
from .dataset import FilterStrategy, apply_filter_strategy, build_aspectsent, read_aspectsent, write_aspectsent
from .embedding import EmbeddingBackendSpec, EmbeddingCache
from .errors import IntegrityError, ValidationError
from .jsonio import read_jsonl, write_json, write_jsonl
from .labeling import LabeledSentence, LabelerConfig, label_meeting
from .rouge import evaluate_run
from .selection import (
    AspectFilteredDoc,
    OracleFilterConfig,
    SentencePrediction,
    build_inference_docs,
    build_summarization_dataset,
    oracle_filter,
)
from .summarizer import GeneratedSummary, SummarizerConfig, SummarizerModel, generate, train_summarizer

logger = logging.getLogger(__name__)


def ingest(source, fmt, splits, out_dir, aspects=DEFAULT_ASPECTS, default_split=None):
    records = ingest_corpus(source, fmt, splits, aspects, default_split)
    return write_corpus(records, out_dir, aspects)


def pseudolabel(corpus_dir, cfg: LabelerConfig, backend: EmbeddingBackendSpec, out_dir, aspects=DEFAULT_ASPECTS, cache_dir=None):
    cache = EmbeddingCache(cache_dir)
    out_dir = Path(out_dir)
    n = 0
    for rec in load_corpus(corpus_dir, aspects):
        rows = [
            LabeledSentence(rec.meeting_id, s.idx, dict(v.labels), dict(v.similarities)).to_dict()
            for s, v in label_meeting(rec, cfg, backend, aspects, cache)
        ]
        n += write_jsonl(out_dir / f"{rec.meeting_id}.jsonl", rows)
    return n


def read_labels(labels_dir) -> list[LabeledSentence]:
    rows = []
    for f in sorted(Path(labels_dir).glob("*.jsonl")):
        rows.extend(LabeledSentence.from_dict(d) for d in read_jsonl(f))
    return rows


def build_dataset(labels_dir, corpus_dir, strategy: FilterStrategy, out_dir, aspects=DEFAULT_ASPECTS):
    records = load_corpus(corpus_dir, aspects)
    examples, full_stats = build_aspectsent(read_labels(labels_dir), records, aspects)
    kept = apply_filter_strategy(examples, strategy)
    stats = write_aspectsent(kept, out_dir, aspects)
    write_json(Path(out_dir) / "stats_unfiltered.json", full_stats.to_dict())
    write_json(Path(out_dir) / "strategy.json", strategy.to_dict())
    return full_stats, stats


def train_clf(data_dir, cfg: ClassifierConfig, out_dir, cache_dir=None):
    train = read_aspectsent(data_dir, "train")
    val = read_aspectsent(data_dir, "val")
    return train_classifier(train, val, cfg, out_dir, EmbeddingCache(cache_dir))


def restrict_sets(data_dir) -> dict[str, set[int]]:
    """Sentence indices per meeting that survive in an AspectSent directory."""
    out: dict[str, set[int]] = {}
    for split in ("train", "val", "test"):
        for ex in read_aspectsent(data_dir, split):
            out.setdefault(ex.meeting_id, set()).add(ex.sent_idx)
    return out


def predict(model_dir, corpus_dir, threshold, out_dir, aspects=DEFAULT_ASPECTS, cache_dir=None):
    model = ClassifierModel.load(model_dir, EmbeddingCache(cache_dir))
    out_dir = Path(out_dir)
    n = 0
    for rec in load_corpus(corpus_dir, aspects):
        preds = predict_labels(model, rec.sentences, threshold, aspects)
        rows = [
            SentencePrediction(rec.meeting_id, s.idx, p.probs, lv.labels).to_dict()
            for s, (p, lv) in zip(rec.sentences, preds)
        ]
        n += write_jsonl(out_dir / f"{rec.meeting_id}.jsonl", rows)
    return n


def read_preds(preds_dir) -> dict[str, list[SentencePrediction]]:
    out: dict[str, list[SentencePrediction]] = {}
    for f in sorted(Path(preds_dir).glob("*.jsonl")):
        rows = [SentencePrediction.from_dict(d) for d in read_jsonl(f)]
        rows.sort(key=lambda p: p.sent_idx)
        if rows:
            out[rows[0].meeting_id] = rows
    return out


def select(corpus_dir, preds_dir, out_dir, aspects=DEFAULT_ASPECTS, fallback_k=10, restrict_dir=None):
    """Write ``{train,val}.jsonl`` (docs with targets) and ``test.jsonl`` (all m docs)."""
    records = load_corpus(corpus_dir, aspects)
    preds = read_preds(preds_dir)
    missing = [r.meeting_id for r in records if r.meeting_id not in preds]
    if missing:
        raise IntegrityError(f"no predictions for meetings {missing[:5]}")
    candidates = restrict_sets(restrict_dir) if restrict_dir is not None else None
    out_dir = Path(out_dir)
    counts = {}
    for split in ("train", "val"):
        recs = [r for r in records if r.split == split]
        docs = build_summarization_dataset(recs, preds, aspects, fallback_k, candidates)
        counts[split] = write_jsonl(out_dir / f"{split}.jsonl", (d.to_dict() for d in docs))
    recs = [r for r in records if r.split == "test"]
    docs = build_inference_docs(recs, preds, aspects, fallback_k, candidates)
    counts["test"] = write_jsonl(out_dir / "test.jsonl", (d.to_dict() for d in docs))
    return counts


def oracle(corpus_dir, cfg: OracleFilterConfig, out_dir, aspects=DEFAULT_ASPECTS, cache_dir=None):
    records = load_corpus(corpus_dir, aspects)
    cache = EmbeddingCache(cache_dir)
    out_dir = Path(out_dir)
    counts = {}
    for split in ("train", "val", "test"):
        docs = []
        for rec in (r for r in records if r.split == split):
            docs.extend(oracle_filter(rec, cfg, aspects, cache).values())
        counts[split] = write_jsonl(out_dir / f"{split}.jsonl", (d.to_dict() for d in docs))
    return counts


def read_docs(path) -> list[AspectFilteredDoc]:
    path = Path(path)
    if not path.exists():
        return []
    return [AspectFilteredDoc.from_dict(d) for d in read_jsonl(path)]


def train_sum(data_dir, cfg: SummarizerConfig, out_dir, aspects: Optional[Sequence[str]] = None):
    train = read_docs(Path(data_dir) / "train.jsonl")
    val = read_docs(Path(data_dir) / "val.jsonl")
    if aspects is not None:
        train = [d for d in train if d.aspect in aspects]
        val = [d for d in val if d.aspect in aspects]
    return train_summarizer(train, val, cfg, out_dir)


def summarize(model_dir, docs_path, out_dir, cfg: Optional[SummarizerConfig] = None, aspects: Optional[Sequence[str]] = None):
    model = SummarizerModel.load(model_dir)
    docs = read_docs(docs_path)
    if aspects is not None:
        docs = [d for d in docs if d.aspect in aspects]
    run = generate(model, docs, cfg)
    out_dir = Path(out_dir)
    write_jsonl(out_dir / "summaries.jsonl", (s.to_dict() for s in run.summaries))
    write_json(out_dir / "failures.json", run.failures)
    return run


def read_summaries(path) -> list[GeneratedSummary]:
    path = Path(path)
    files = [path] if path.is_file() else sorted(path.glob("*.jsonl"))
    return [GeneratedSummary.from_dict(d) for f in files for d in read_jsonl(f)]


def evaluate(summaries_path, corpus_dir, out_path, aspects=DEFAULT_ASPECTS, name="run", records: Optional[list[MeetingRecord]] = None):
    records = records if records is not None else load_corpus(corpus_dir, aspects)
    table = evaluate_run(read_summaries(summaries_path), records, aspects, name)
    out_path = Path(out_path)
    write_json(out_path, table.to_dict())
    out_path.with_suffix(".txt").write_text(table.render(aspects) + "\n", encoding="utf-8")
    return table


def classifier_report(data_dir, preds_dir, out_path, aspects=DEFAULT_ASPECTS, split="test"):
    """Score predictions against the pseudo labels of one AspectSent split."""
    gold = read_aspectsent(data_dir, split)
    preds = read_preds(preds_dir)
    pred_rows = []
    for ex in gold:
        rows = preds.get(ex.meeting_id)
        if rows is None or ex.sent_idx >= len(rows):
            raise IntegrityError(f"no prediction for {ex.meeting_id}#{ex.sent_idx}")
        pred_rows.append(rows[ex.sent_idx].labels)
    if not gold:
        raise ValidationError(f"AspectSent split {split!r} is empty")
    report = score_classifier(pred_rows, [ex.labels for ex in gold], aspects)
    write_json(out_path, report.to_dict())
    Path(out_path).with_suffix(".txt").write_text(report.render() + "\n", encoding="utf-8")
    return report


def evaluate_many(summary_dirs, corpus_dir, out_path, aspects=DEFAULT_ASPECTS, name="run"):
    records = load_corpus(corpus_dir, aspects)
    summaries = [s for d in summary_dirs for s in read_summaries(d)]
    table = evaluate_run(summaries, records, aspects, name)
    out_path = Path(out_path)
    write_json(out_path, table.to_dict())
    out_path.with_suffix(".txt").write_text(table.render(aspects) + "\n", encoding="utf-8")
    return table
