"""Command line entry point: ``aspectsum <subcommand> ...``.

Exit codes: 0 success, 1 validation/configuration error, 2 stage failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import stages
from .classifier import ClassifierConfig
from .corpus import DEFAULT_ASPECTS, FORMATS, corpus_stats, load_corpus
from .dataset import ABLATION_STRATEGIES, STRATEGY_KINDS, FilterStrategy, read_aspectsent, compute_stats
from .embedding import EmbeddingBackendSpec
from .errors import AspectSumError, BackendError, ConfigurationError, IntegrityError, ParseError, StageError, ValidationError
from .jsonio import read_json, write_json
from .labeling import GRANULARITIES, LabelerConfig
from .pipeline import PipelineConfig, run_ablation, run_oracle, run_pipeline
from .selection import OracleFilterConfig
from .summarizer import SummarizerConfig

logger = logging.getLogger("aspectsum")


def _aspects(value: str):
    if value in (None, "all"):
        return DEFAULT_ASPECTS
    return tuple(a.strip() for a in value.split(",") if a.strip())


def _backend(args) -> EmbeddingBackendSpec:
    return EmbeddingBackendSpec(args.backend, args.dim, args.normalization)


def _add_backend(p, default="hash-bow-test"):
    p.add_argument("--backend", default=default, help="embedding backend id")
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--normalization", default="unit-l2", choices=("none", "unit-l2"))
    p.add_argument("--cache", default=None, help="embedding cache directory")


def _load_cfg(path, cls, **overrides):
    d = read_json(path) if path else {}
    d.update({k: v for k, v in overrides.items() if v is not None})
    return cls.from_dict(d)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_ingest(args):
    m = stages.ingest(args.source, args.format, args.splits, args.out, _aspects(args.aspects), args.default_split)
    print(json.dumps(m.to_dict(), indent=2))


def cmd_stats(args):
    aspects = _aspects(args.aspects)
    if args.corpus:
        print(json.dumps(corpus_stats(load_corpus(args.corpus, aspects), aspects).to_dict(), indent=2))
    if args.data:
        examples = [ex for s in ("train", "val", "test") for ex in read_aspectsent(args.data, s)]
        print(compute_stats(examples, aspects).render())


def cmd_pseudolabel(args):
    cfg = LabelerConfig(args.alpha, args.min_sent_tokens, args.min_summary_tokens, args.granularity)
    n = stages.pseudolabel(args.corpus, cfg, _backend(args), args.out, _aspects(args.aspects), args.cache)
    print(f"labeled {n} sentences -> {args.out}")


def cmd_build_dataset(args):
    strategy = FilterStrategy(
        args.strategy,
        args.predict_threshold,
        args.downsample_to if args.strategy == "down-sampling" else None,
        args.seed,
    )
    full, kept = stages.build_dataset(args.labels, args.corpus, strategy, args.out, _aspects(args.aspects))
    print(full.render())
    print(f"after {strategy.label}:")
    print(kept.render())


def cmd_train_classifier(args):
    cfg = _load_cfg(args.config, ClassifierConfig, aspects=_aspects(args.aspects) if args.aspects else None, seed=args.seed)
    model, log = stages.train_clf(args.data, cfg, args.out, args.cache)
    print(f"best epoch {log.best_epoch}, val micro-F1 {log.best_val_micro_f1:.4f} -> {args.out}")


def cmd_predict(args):
    n = stages.predict(args.model, args.corpus, args.threshold, args.out, _aspects(args.aspects), args.cache)
    print(f"predicted {n} sentences -> {args.out}")


def cmd_select(args):
    counts = stages.select(args.corpus, args.preds, args.out, _aspects(args.aspects), args.fallback_k, args.restrict)
    print(json.dumps(counts))


def cmd_oracle_filter(args):
    cfg = OracleFilterConfig(args.alpha, _backend(args))
    counts = stages.oracle(args.corpus, cfg, args.out, _aspects(args.aspects), args.cache)
    print(json.dumps(counts))


def cmd_train_summarizer(args):
    cfg = _load_cfg(args.config, SummarizerConfig, backend_id=args.summarizer_backend, seed=args.seed)
    _, log = stages.train_sum(args.data, cfg, args.out)
    print(f"best epoch {log.best_epoch} -> {args.out}")


def cmd_summarize(args):
    from .summarizer import SummarizerModel

    cfg = SummarizerModel.load(args.model).cfg
    if args.beam_size is not None:
        cfg = replace(cfg, beam_size=args.beam_size)
    run = stages.summarize(args.model, args.docs, args.out, cfg)
    print(f"{len(run.summaries)} summaries, {len(run.failures)} failures -> {args.out}")
    if run.failures:
        raise StageError("summarize", f"{len(run.failures)} documents failed")


def cmd_evaluate(args):
    table = stages.evaluate(args.summaries, args.corpus, args.out, _aspects(args.aspects), args.name)
    print(table.render(_aspects(args.aspects)))


def _pipeline_cfg(args) -> PipelineConfig:
    d = read_json(args.config) if args.config else {}
    if args.source:
        d["source"] = args.source
    if args.format:
        d["format"] = args.format
    if args.splits:
        d["splits"] = args.splits
    if args.out:
        d["output_root"] = args.out
    if args.seed is not None:
        d["seed"] = args.seed
    if args.alpha is not None:
        d.setdefault("labeler", {})["alpha"] = args.alpha
    if args.strategy:
        d.setdefault("strategy", {})["kind"] = args.strategy
    if args.predict_threshold is not None:
        d.setdefault("strategy", {})["predict_threshold"] = args.predict_threshold
    if args.summarizer_backend:
        d.setdefault("summarizer", {})["backend_id"] = args.summarizer_backend
    return PipelineConfig.from_dict(d)


def cmd_run(args):
    m = run_pipeline(_pipeline_cfg(args))
    print(f"run {m.run_id}: {m.status}; executed {m.executed or 'nothing (all stages up to date)'}")
    report = Path(_pipeline_cfg(args).output_root) / "evaluation" / "report.txt"
    if report.exists():
        print(report.read_text(encoding="utf-8"))


def cmd_ablate(args):
    cfg = _pipeline_cfg(args)
    strategies = ABLATION_STRATEGIES
    if args.strategies:
        wanted = args.strategies.split(",")
        strategies = tuple(s for s in ABLATION_STRATEGIES if s.label in wanted)
        if len(strategies) != len(wanted):
            raise ConfigurationError(f"unknown strategy in {wanted}; choose from {[s.label for s in ABLATION_STRATEGIES]}")
    report = run_ablation(cfg, strategies)
    print(report.render())
    if report.errors:
        raise StageError("ablate", f"{len(report.errors)} rows failed")


def cmd_oracle(args):
    cfg = _pipeline_cfg(args)
    if cfg.oracle is None:
        cfg = replace(cfg, oracle=OracleFilterConfig(args.alpha or cfg.labeler.alpha, cfg.embedding))
    print(run_oracle(cfg, separate_models=not args.single_model).render(cfg.aspects))


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aspectsum", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize a raw corpus export")
    p.add_argument("--source", required=True)
    p.add_argument("--format", default="ami-json", choices=FORMATS)
    p.add_argument("--splits", default=None, help="JSON split assignment")
    p.add_argument("--default-split", default=None, choices=("train", "val", "test"))
    p.add_argument("--aspects", default="all")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="corpus and AspectSent statistics")
    p.add_argument("--corpus")
    p.add_argument("--data")
    p.add_argument("--aspects", default="all")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("pseudolabel", help="similarity-based sentence labels")
    p.add_argument("--corpus", required=True)
    p.add_argument("--alpha", type=float, default=0.46)
    p.add_argument("--min-sent-tokens", type=int, default=4)
    p.add_argument("--min-summary-tokens", type=int, default=6)
    p.add_argument("--granularity", default="per-summary-sentence", choices=GRANULARITIES)
    p.add_argument("--aspects", default="all")
    p.add_argument("--out", required=True)
    _add_backend(p)
    p.set_defaults(func=cmd_pseudolabel)

    p = sub.add_parser("build-dataset", help="assemble AspectSent and apply a filtering strategy")
    p.add_argument("--labels", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--strategy", default="filtertrain", choices=STRATEGY_KINDS)
    p.add_argument("--predict-threshold", type=float, default=0.5)
    p.add_argument("--downsample-to", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--aspects", default="all")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("train-classifier", help="train the aspect relevance classifier")
    p.add_argument("--data", required=True)
    p.add_argument("--config", default=None, help="ClassifierConfig JSON")
    p.add_argument("--aspects", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--cache", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_classifier)

    p = sub.add_parser("predict", help="predict aspect labels for every sentence")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--aspects", default="all")
    p.add_argument("--cache", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("select", help="build aspect-filtered documents")
    p.add_argument("--corpus", required=True)
    p.add_argument("--preds", required=True)
    p.add_argument("--aspects", default="all")
    p.add_argument("--fallback-k", type=int, default=10)
    p.add_argument("--restrict", default=None, help="AspectSent dir limiting candidate sentences")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("oracle-filter", help="filter transcripts with the reference summaries")
    p.add_argument("--corpus", required=True)
    p.add_argument("--alpha", type=float, default=0.46)
    p.add_argument("--aspects", default="all")
    p.add_argument("--out", required=True)
    _add_backend(p)
    p.set_defaults(func=cmd_oracle_filter)

    p = sub.add_parser("train-summarizer", help="train the shared summarizer")
    p.add_argument("--data", required=True)
    p.add_argument("--config", default=None, help="SummarizerConfig JSON")
    p.add_argument("--summarizer-backend", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_summarizer)

    p = sub.add_parser("summarize", help="generate one summary per document")
    p.add_argument("--model", required=True)
    p.add_argument("--docs", required=True)
    p.add_argument("--beam-size", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("evaluate", help="ROUGE F1 per aspect")
    p.add_argument("--summaries", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--aspects", default="all")
    p.add_argument("--name", default="run")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    for name, func, help_ in (
        ("run", cmd_run, "full pipeline from one config"),
        ("ablate", cmd_ablate, "one run per filtering strategy"),
        ("oracle", cmd_oracle, "oracle-filtered upper bound"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", default=None, help="PipelineConfig JSON")
        p.add_argument("--source", default=None)
        p.add_argument("--format", default=None, choices=FORMATS)
        p.add_argument("--splits", default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--strategy", default=None, choices=STRATEGY_KINDS)
        p.add_argument("--predict-threshold", type=float, default=None)
        p.add_argument("--summarizer-backend", default=None)
        if name == "ablate":
            p.add_argument("--strategies", default=None, help="comma-separated row labels")
        if name == "oracle":
            p.add_argument("--single-model", action="store_true")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ValidationError, ConfigurationError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (StageError, BackendError, IntegrityError, AspectSumError) as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
