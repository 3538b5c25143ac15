"""Acceptance gate: one test per criterion, each reporting a single pass/fail line.

Criterion 8 needs the real AMI/ICSI corpora and model backends.  It runs only
when ``ASPECTSUM_AMI_CONFIG`` (a pipeline config JSON for AMI) and optionally
``ASPECTSUM_ICSI_SOURCE`` are set; otherwise it is reported as not run.
"""

from __future__ import annotations

import json
import os
import random
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from aspectsum.classifier import ClassifierConfig, ClassifierModel, predict_labels, probs_to_labels, score_classifier, train_classifier
from aspectsum.corpus import Sentence, corpus_stats, ingest_corpus, make_record
from aspectsum.dataset import AspectSentExample, FilterStrategy, apply_filter_strategy
from aspectsum.embedding import EmbeddingBackendSpec, EmbeddingCache
from aspectsum.jsonio import read_jsonl
from aspectsum.labeling import LabelerConfig, label_meeting, label_sentence
from aspectsum.pipeline import PipelineConfig, run_ablation, run_pipeline
from aspectsum.rouge import lcs_length, rouge_score
from aspectsum.selection import (
    OracleFilterConfig,
    SentencePrediction,
    build_inference_docs,
    build_summarization_dataset,
    oracle_filter,
    special_token,
)
from aspectsum.synthetic import make_synthetic_corpus

from conftest import ACCEPTANCE_RESULTS, dump_source
from oracles import brute_force_labels, lcs_enumerate
from rouge_cases import HAND_CASES
from test_classifier import CONFUSION_FIXTURES, TOY_CFG
from toy import ASPECTS as TOY_ASPECTS
from toy import toy_examples

ASPECTS = ("abstract", "problems", "actions", "decisions")
HASHBOW = EmbeddingBackendSpec("hash-bow-test", dim=64, normalization="unit-l2")
SWEEP = (0.4, 0.46, 0.5)


@contextmanager
def criterion(num: int, title: str, limit_s: float | None = None):
    t0 = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - t0
        if limit_s is not None:
            assert elapsed < limit_s, f"took {elapsed:.2f}s, limit {limit_s}s"
    except pytest.skip.Exception as exc:
        line = f"criterion {num}: NOT RUN  {title} ({exc})"
        ACCEPTANCE_RESULTS[num] = line
        print(line)
        raise
    except BaseException as exc:
        line = f"criterion {num}: FAIL  {title} ({type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''})"
        ACCEPTANCE_RESULTS[num] = line
        print(line)
        raise
    line = f"criterion {num}: PASS  {title} [{time.perf_counter() - t0:.2f}s]"
    ACCEPTANCE_RESULTS[num] = line
    print(line)


# ---------------------------------------------------------------------------


def test_criterion_1_rouge_oracle_suite():
    with criterion(1, "ROUGE hand-computed pairs and LCS enumeration", limit_s=5.0):
        assert len(HAND_CASES) >= 10
        for cand, ref, want in HAND_CASES:
            s = rouge_score(cand, ref)
            for m, triple in want.items():
                got = (getattr(s, f"{m}_p"), getattr(s, f"{m}_r"), getattr(s, f"{m}_f"))
                assert all(abs(g - w) <= 1e-6 for g, w in zip(got, triple)), (cand, ref, m, got, triple)
        rng = random.Random(2024)
        for _ in range(200):
            a = [rng.choice("abcde") for _ in range(rng.randint(0, 8))]
            b = [rng.choice("abcde") for _ in range(rng.randint(0, 8))]
            assert lcs_length(a, b) == lcs_enumerate(a, b), (a, b)


def test_criterion_2_algorithm1_oracle_equivalence():
    with criterion(2, "pseudo labels equal the brute-force oracle (50 meetings x 2 granularities x 3 alphas)", limit_s=30.0):
        rng = np.random.default_rng(99)
        meetings = []
        for i in range(50):
            missing = [a for a in ASPECTS if rng.random() < 0.15]
            if len(missing) == len(ASPECTS):
                missing = missing[1:]
            meetings += make_synthetic_corpus(1, seed=int(rng.integers(1 << 30)), sentences=(1, 50), missing={0: missing})
        assert all(len(m.sentences) <= 50 for m in meetings)
        cache = EmbeddingCache()
        positives = 0
        for rec in meetings:
            for gran in ("per-summary-sentence", "whole-summary"):
                for alpha in SWEEP:
                    cfg = LabelerConfig(alpha=alpha, summary_granularity=gran)
                    got = [v.labels for _, v in label_meeting(rec, cfg, HASHBOW, ASPECTS, cache)]
                    want = brute_force_labels(rec, ASPECTS, alpha, gran)
                    assert got == want, (rec.meeting_id, gran, alpha)
                    positives += sum(sum(r.values()) for r in got)
        assert positives > 0


_PROP_CACHE = EmbeddingCache()
_WORDS = ["remote", "button", "agreed", "cost", "issue", "prepare", "design", "team", "we", "the", "curved", "battery"]
_sentence = st.lists(st.sampled_from(_WORDS), min_size=1, max_size=12).map(" ".join)
_CASES = {"alpha": 0, "gate": 0, "threshold": 0}
_PROP = settings(max_examples=1000, deadline=None, suppress_health_check=list(HealthCheck), database=None)


@_PROP
@given(
    sents=st.lists(_sentence, min_size=1, max_size=6),
    summary=st.lists(_sentence, min_size=1, max_size=3),
    alphas=st.tuples(st.floats(0.01, 0.98), st.floats(0.01, 0.98)),
    gran=st.sampled_from(["per-summary-sentence", "whole-summary"]),
)
def _alpha_monotonicity(sents, summary, alphas, gran):
    _CASES["alpha"] += 1
    lo, hi = sorted(alphas)
    rec = make_record("p", sents, {"problems": ". ".join(summary) + "."})
    low = label_meeting(rec, LabelerConfig(alpha=lo, summary_granularity=gran), HASHBOW, ("problems",), _PROP_CACHE)
    high = label_meeting(rec, LabelerConfig(alpha=hi, summary_granularity=gran), HASHBOW, ("problems",), _PROP_CACHE)
    for (_, a), (_, b) in zip(low, high):
        assert b.labels["problems"] <= a.labels["problems"]


@_PROP
@given(
    short=st.lists(st.sampled_from(_WORDS), min_size=0, max_size=4).map(" ".join),
    extra=st.lists(_sentence, max_size=2),
    alpha=st.floats(0.01, 0.98),
)
def _gate_dominance(short, extra, alpha):
    _CASES["gate"] += 1
    # the summary contains the short sentence verbatim, padded past the unit gate
    unit = f"{short} remote remote remote remote remote remote remote".strip()
    summaries = {a: ". ".join([unit, *extra]) + "." for a in ASPECTS}
    vec = label_sentence(Sentence("g", 0, short), summaries, LabelerConfig(alpha=alpha), HASHBOW, ASPECTS, _PROP_CACHE)
    assert all(v == 0 for v in vec.labels.values())


@_PROP
@given(
    probs=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=4),
    t=st.tuples(st.floats(0.001, 0.999), st.floats(0.001, 0.999)),
    seed=st.integers(0, 2**16),
)
def _threshold_monotonicity(probs, t, seed):
    _CASES["threshold"] += 1
    lo, hi = sorted(t)
    p = dict(zip(ASPECTS, probs))
    _, a = probs_to_labels(p, lo)
    _, b = probs_to_labels(p, hi)
    assert all(b.labels[k] <= a.labels[k] for k in p)
    assert all(a.labels[k] == int(p[k] > lo) for k in p)
    # the same law through a model's predictions
    rng = np.random.default_rng(seed)
    cfg = ClassifierConfig(aspects=TOY_ASPECTS, encoder_dim=16)
    model = ClassifierModel(cfg, rng.normal(size=(16, 2)), rng.normal(size=2), _PROP_CACHE)
    (pl, la), = predict_labels(model, ["issue agreed remote"], lo)
    (_, lb), = predict_labels(model, ["issue agreed remote"], hi)
    assert all(0.0 <= v <= 1.0 for v in pl.probs.values())
    assert all(lb.labels[k] <= la.labels[k] for k in TOY_ASPECTS)


def test_criterion_3_threshold_and_gate_properties():
    with criterion(3, "alpha monotonicity, length-gate dominance, threshold monotonicity (1,000 cases each)"):
        _alpha_monotonicity()
        _gate_dominance()
        _threshold_monotonicity()
        assert min(_CASES.values()) >= 1000, _CASES


def test_criterion_4_filtering_contracts():
    with criterion(4, "filtering-strategy contracts incl. down-sampling to exactly 3367"):
        rng = np.random.default_rng(4)
        rows = []
        for i in range(6000):
            split = "train" if i < 5000 else ("val" if i < 5500 else "test")
            labels = {a: int(rng.random() < 0.04) for a in ASPECTS}
            rows.append(AspectSentExample(f"m{i // 50}", i % 50, f"s{i}", labels, split))
        irrelevant_train = sum(r.irrelevant and r.split == "train" for r in rows)
        assert irrelevant_train > 3367

        ft = apply_filter_strategy(rows, FilterStrategy("filtertrain"))
        assert not any(r.irrelevant and r.split == "train" for r in ft)
        assert [r for r in rows if r.split != "train"] == [r for r in ft if r.split != "train"]

        ds = FilterStrategy("down-sampling", downsample_irrelevant_to=3367, seed=11)
        out = apply_filter_strategy(rows, ds)
        assert sum(r.irrelevant and r.split == "train" for r in out) == 3367
        assert out == apply_filter_strategy(rows, ds)
        assert [r for r in rows if not r.irrelevant or r.split != "train"] == [
            r for r in out if not r.irrelevant or r.split != "train"
        ]
        other = apply_filter_strategy(rows, FilterStrategy("down-sampling", downsample_irrelevant_to=3367, seed=12))
        assert other != out

        assert apply_filter_strategy(rows, FilterStrategy("nofiltering")) == rows
        orc = apply_filter_strategy(rows, FilterStrategy("oracle-filter-all"))
        assert not any(r.irrelevant for r in orc)
        assert {r.split for r in orc} == {"train", "val", "test"}
        assert [r for r in rows if not r.irrelevant] == orc


def test_criterion_5_stage2_contracts():
    with criterion(5, "stage-2 order, token prefix, augmentation count, oracle alpha-sweep monotonicity"):
        rng = np.random.default_rng(5)
        recs = make_synthetic_corpus(12, seed=5, missing={3: ["actions"], 7: ["abstract", "decisions"]})
        preds = {
            r.meeting_id: [
                SentencePrediction(r.meeting_id, s.idx, {a: float(rng.random()) for a in ASPECTS}, {a: int(rng.random() < 0.15) for a in ASPECTS})
                for s in r.sentences
            ]
            for r in recs
        }
        train = build_summarization_dataset(recs, preds, ASPECTS)
        assert len(train) == sum(len(r.aspects_present(ASPECTS)) for r in recs) == 12 * 4 - 3
        full = [r for r in recs if len(r.aspects_present(ASPECTS)) == 4]
        for r in full:
            assert sum(d.meeting_id == r.meeting_id for d in train) == 4
        tokens = {special_token(a) for a in ASPECTS}
        assert len(tokens) == 4
        for d in train + build_inference_docs(recs, preds, ASPECTS):
            assert list(d.selected) == sorted(set(d.selected))
            assert d.text.split()[0] == special_token(d.aspect)
            assert d.target_summary is None or d.target_summary.split()[0] == special_token(d.aspect)

        cache = EmbeddingCache()
        kept = {}
        for alpha in SWEEP:
            for r in recs:
                for a, doc in oracle_filter(r, OracleFilterConfig(alpha, HASHBOW), ASPECTS, cache).items():
                    assert list(doc.selected) == sorted(doc.selected)
                    kept[(alpha, r.meeting_id, a)] = set(doc.selected)
        for (alpha, mid, a), s in kept.items():
            if alpha == 0.4:
                assert kept[(0.46, mid, a)] <= s
                assert kept[(0.5, mid, a)] <= kept[(0.46, mid, a)]
        assert sum(len(s) for (alpha, _, _), s in kept.items() if alpha == 0.4) > sum(
            len(s) for (alpha, _, _), s in kept.items() if alpha == 0.5
        )


def test_criterion_6_end_to_end_smoke(tmp_path):
    with criterion(6, "6-meeting synthetic run_pipeline: 4 summaries per test meeting, valid manifest, identical rerun", limit_s=60.0):
        recs = make_synthetic_corpus(6, seed=0)
        src = dump_source(recs, tmp_path / "raw")
        cfg = PipelineConfig.from_dict({"source": str(src), "output_root": str(tmp_path / "run")})
        m1 = run_pipeline(cfg)
        assert m1.status == "complete" and m1.verify_lineage()
        manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
        assert manifest["status"] == "complete" and len(manifest["stages"]) == 9
        summaries = list(read_jsonl(tmp_path / "run" / "summaries" / "summaries.jsonl"))
        test_ids = [r.meeting_id for r in recs if r.split == "test"]
        assert test_ids
        for mid in test_ids:
            assert sorted(s["aspect"] for s in summaries if s["meeting_id"] == mid) == sorted(ASPECTS)
        m2 = run_pipeline(cfg)
        assert m2.executed == [] and m2.digests() == m1.digests()


def test_criterion_7_classifier_desk_scale():
    with criterion(7, "toy classifier val micro-F1 >= 0.9; 5 confusion fixtures exact"):
        _, log = train_classifier(toy_examples(20, 0, "train"), toy_examples(12, 1, "val"), TOY_CFG, cache=EmbeddingCache())
        assert log.best_val_micro_f1 >= 0.9, log.best_val_micro_f1
        assert len(CONFUSION_FIXTURES) == 5
        for pred, gold, aspect, p, r, f in CONFUSION_FIXTURES:
            s = score_classifier(pred, gold, ("a", "b")).per_aspect[aspect]
            assert (s.precision, s.recall) == (p, r)
            assert abs(s.f1 - f) < 1e-12


# published AspectSent figures, reported (not asserted) in criterion 8
REFERENCE_ASPECTSENT_TOTALS = {"train": 56408, "val": 11703, "test": 13761}
REFERENCE_TRAIN_COLUMNS = {"abstract": 942, "problems": 1605, "actions": 419, "decisions": 2225, "irrelevant": 51217}


def test_criterion_8_conditional_reproduction(tmp_path):
    with criterion(8, "real-corpus split counts, AspectSent report, ablation row structure"):
        ami_cfg = os.environ.get("ASPECTSUM_AMI_CONFIG")
        if not ami_cfg:
            pytest.skip("ASPECTSUM_AMI_CONFIG not set; AMI/ICSI corpora and real backends not configured")
        cfg = PipelineConfig.load(ami_cfg)
        recs = ingest_corpus(cfg.source, cfg.format, cfg.splits, cfg.aspects, cfg.default_split)
        assert corpus_stats(recs, cfg.aspects).counts == {"train": 100, "val": 21, "test": 21}
        icsi = os.environ.get("ASPECTSUM_ICSI_SOURCE")
        if icsi:
            fmt = os.environ.get("ASPECTSUM_ICSI_FORMAT", "icsi-json")
            irecs = ingest_corpus(icsi, fmt, None, cfg.aspects, default_split="test")
            assert corpus_stats(irecs, cfg.aspects).counts == {"test": 61}
        report = run_ablation(cfg)
        assert list(report.rows) == ["oracle", "filtertrain-0.5", "filtertrain-0.3", "nofiltering", "down-sampling"]
        header = report.render().splitlines()[0]
        assert all(a.capitalize() in header for a in cfg.aspects)
        stats = json.loads((Path(cfg.output_root) / "nofiltering" / "aspectsent" / "stats_unfiltered.json").read_text())
        print("AspectSent totals (ours vs reference):")
        for split, ref in REFERENCE_ASPECTSENT_TOTALS.items():
            print(f"  {split}: {stats['total'].get(split, 0)} vs {ref}")
        train_cols = {**stats["positives"].get("train", {}), "irrelevant": stats["irrelevant"].get("train", 0)}
        for col, ref in REFERENCE_TRAIN_COLUMNS.items():
            print(f"  train {col}: {train_cols.get(col, 0)} vs {ref}")
        print(f"  deviations reflect alpha={cfg.labeler.alpha} and granularity={cfg.labeler.summary_granularity}")
