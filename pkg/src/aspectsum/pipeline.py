"""End-to-end orchestration, ablation sweeps and run bookkeeping.

Stage graph::

    ingest -> pseudolabel -> build-dataset -> train-classifier -> predict
           -> select -> train-summarizer -> summarize -> evaluate

Every stage writes one output directory and a stamp file next to it
(``.<dir>.stamp.json``) holding the digests of its inputs, a hash of its
parameters and the digest of its output.  A stage whose stamp still matches
is skipped, which makes runs resumable and reruns free.
"""

from __future__ import annotations

import hashlib
import json
import logging
import shutil
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

from . import __version__, stages
from .classifier import ClassifierConfig
from .corpus import DEFAULT_ASPECTS, FORMATS
from .dataset import ABLATION_STRATEGIES, FilterStrategy
from .embedding import EmbeddingBackendSpec
from .errors import AspectSumError, ConfigurationError, StageError, ValidationError
from .jsonio import digest_path, read_json, write_json
from .labeling import LabelerConfig
from .rouge import ResultTable, render_tables
from .selection import OracleFilterConfig
from .summarizer import SummarizerConfig

logger = logging.getLogger(__name__)


def derive_seed(seed: int, stage: str) -> int:
    return int(hashlib.sha256(f"{seed}:{stage}".encode()).hexdigest()[:8], 16)


@dataclass(frozen=True)
class PipelineConfig:
    source: str
    output_root: str
    format: str = "ami-json"
    splits: object = None
    default_split: Optional[str] = None
    aspects: tuple[str, ...] = DEFAULT_ASPECTS
    embedding: EmbeddingBackendSpec = EmbeddingBackendSpec()
    labeler: LabelerConfig = LabelerConfig()
    strategy: FilterStrategy = FilterStrategy()
    classifier: ClassifierConfig = ClassifierConfig()
    summarizer: SummarizerConfig = SummarizerConfig()
    oracle: Optional[OracleFilterConfig] = None
    fallback_k: int = 10
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "aspects", tuple(self.aspects))
        if self.format not in FORMATS:
            raise ConfigurationError(f"unknown corpus format {self.format!r}")
        if tuple(self.classifier.aspects) != self.aspects:
            raise ConfigurationError(
                f"classifier aspects {self.classifier.aspects} differ from pipeline aspects {self.aspects}"
            )
        if self.fallback_k < 1:
            raise ValidationError("fallback_k must be >= 1")

    def to_dict(self) -> dict:
        return {
            "source": str(self.source),
            "output_root": str(self.output_root),
            "format": self.format,
            "splits": self.splits,
            "default_split": self.default_split,
            "aspects": list(self.aspects),
            "embedding": self.embedding.to_dict(),
            "labeler": self.labeler.to_dict(),
            "strategy": self.strategy.to_dict(),
            "classifier": self.classifier.to_dict(),
            "summarizer": self.summarizer.to_dict(),
            "oracle": None if self.oracle is None else self.oracle.to_dict(),
            "fallback_k": self.fallback_k,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d) -> "PipelineConfig":
        """Build from plain JSON; nested sections may be partial."""
        d = dict(d)
        try:
            aspects = tuple(d.get("aspects", DEFAULT_ASPECTS))
            clf = dict(d.get("classifier") or {})
            clf.setdefault("aspects", aspects)
            oracle = d.get("oracle")
            return cls(
                source=d["source"],
                output_root=d["output_root"],
                format=d.get("format", "ami-json"),
                splits=d.get("splits"),
                default_split=d.get("default_split"),
                aspects=aspects,
                embedding=EmbeddingBackendSpec.from_dict(d.get("embedding") or {}),
                labeler=LabelerConfig.from_dict(d.get("labeler") or {}),
                strategy=FilterStrategy.from_dict(d.get("strategy") or {}),
                classifier=ClassifierConfig.from_dict(clf),
                summarizer=SummarizerConfig.from_dict(d.get("summarizer") or {}),
                oracle=None if oracle is None else OracleFilterConfig.from_dict(oracle),
                fallback_k=d.get("fallback_k", 10),
                seed=d.get("seed", 0),
            )
        except KeyError as exc:
            raise ConfigurationError(f"missing config field {exc}") from exc
        except TypeError as exc:
            raise ConfigurationError(f"bad config: {exc}") from exc

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        return cls.from_dict(read_json(path))

    @property
    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("output_root")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    def seeded(self) -> "PipelineConfig":
        """Copy with every stage seed derived from the global seed."""
        return replace(
            self,
            strategy=replace(self.strategy, seed=derive_seed(self.seed, "build-dataset")),
            classifier=replace(self.classifier, seed=derive_seed(self.seed, "train-classifier")),
            summarizer=replace(self.summarizer, seed=derive_seed(self.seed, "train-summarizer")),
        )


@dataclass
class RunManifest:
    run_id: str
    config_hash: str
    tool_version: str = __version__
    status: str = "running"
    failed_stage: Optional[str] = None
    error: Optional[str] = None
    stages: dict = field(default_factory=dict)
    executed: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "config_hash": self.config_hash,
            "tool_version": self.tool_version,
            "status": self.status,
            "failed_stage": self.failed_stage,
            "error": self.error,
            "stages": self.stages,
            "executed": self.executed,
        }

    def digests(self) -> dict[str, str]:
        return {name: s["output_digest"] for name, s in self.stages.items() if "output_digest" in s}

    def verify_lineage(self) -> bool:
        """Every recorded input digest must equal the output digest of the stage that produced it."""
        produced = {s["output_path"]: s["output_digest"] for s in self.stages.values() if "output_digest" in s}
        for s in self.stages.values():
            for path, dig in s.get("input_paths", {}).items():
                if path in produced and produced[path] != dig:
                    return False
        return True


class _Runner:
    def __init__(self, manifest: RunManifest):
        self.manifest = manifest

    def stage(self, name: str, out: Path, inputs: dict[str, Path], params: dict, fn: Callable[[], object]):
        out = Path(out)
        stamp = out.parent / f".{out.name}.stamp.json"
        in_digests = {k: digest_path(p) for k, p in inputs.items()}
        params_hash = hashlib.sha256(json.dumps(params, sort_keys=True, default=str).encode()).hexdigest()
        record = {
            "inputs": in_digests,
            "input_paths": {str(Path(p).resolve()): in_digests[k] for k, p in inputs.items()},
            "params_hash": params_hash,
            "output_path": str(out.resolve()),
        }
        if stamp.exists() and out.exists():
            old = read_json(stamp)
            if (
                old.get("inputs") == in_digests
                and old.get("params_hash") == params_hash
                and old.get("output_digest") == digest_path(out)
            ):
                self.manifest.stages[name] = {**record, "output_digest": old["output_digest"], "seconds": 0.0, "skipped": True}
                return
        if out.exists():
            shutil.rmtree(out) if out.is_dir() else out.unlink()
        out.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        try:
            fn()
        except Exception as exc:
            self.manifest.status = "failed"
            self.manifest.failed_stage = name
            self.manifest.error = f"{type(exc).__name__}: {exc}"
            raise StageError(name, exc) from exc
        digest = digest_path(out)
        write_json(stamp, {"inputs": in_digests, "params_hash": params_hash, "output_digest": digest})
        self.manifest.stages[name] = {
            **record,
            "output_digest": digest,
            "seconds": round(time.perf_counter() - t0, 4),
            "skipped": False,
        }
        self.manifest.executed.append(name)


def _shared_stages(cfg: PipelineConfig, runner: _Runner, shared: Path, cache: Path):
    corpus, labels = shared / "corpus", shared / "labels"
    src = {"source": Path(cfg.source)}
    if isinstance(cfg.splits, (str, Path)):
        src["splits"] = Path(cfg.splits)
    runner.stage(
        "ingest",
        corpus,
        src,
        {"format": cfg.format, "splits": cfg.splits, "default_split": cfg.default_split, "aspects": cfg.aspects},
        lambda: stages.ingest(cfg.source, cfg.format, cfg.splits, corpus, cfg.aspects, cfg.default_split),
    )
    runner.stage(
        "pseudolabel",
        labels,
        {"corpus": corpus},
        {"labeler": cfg.labeler.to_dict(), "embedding": cfg.embedding.to_dict(), "aspects": cfg.aspects},
        lambda: stages.pseudolabel(corpus, cfg.labeler, cfg.embedding, labels, cfg.aspects, cache),
    )
    return corpus, labels


def _strategy_stages(cfg: PipelineConfig, runner: _Runner, corpus: Path, labels: Path, root: Path, cache: Path) -> ResultTable:
    data, model, preds = root / "aspectsent", root / "classifier", root / "preds"
    filtered, summodel, summaries, evaluation = root / "filtered", root / "summarizer", root / "summaries", root / "evaluation"
    a = cfg.aspects
    runner.stage(
        "build-dataset",
        data,
        {"labels": labels, "corpus": corpus},
        {"strategy": cfg.strategy.to_dict(), "aspects": a},
        lambda: stages.build_dataset(labels, corpus, cfg.strategy, data, a),
    )
    runner.stage(
        "train-classifier",
        model,
        {"data": data},
        {"classifier": cfg.classifier.to_dict()},
        lambda: stages.train_clf(data, cfg.classifier, model, cache),
    )
    runner.stage(
        "predict",
        preds,
        {"model": model, "corpus": corpus},
        {"threshold": cfg.strategy.predict_threshold, "aspects": a},
        lambda: stages.predict(model, corpus, cfg.strategy.predict_threshold, preds, a, cache),
    )
    restrict = data if cfg.strategy.kind == "oracle-filter-all" else None
    runner.stage(
        "select",
        filtered,
        {"corpus": corpus, "preds": preds, **({"restrict": data} if restrict else {})},
        {"aspects": a, "fallback_k": cfg.fallback_k, "restrict": restrict is not None},
        lambda: stages.select(corpus, preds, filtered, a, cfg.fallback_k, restrict),
    )
    runner.stage(
        "train-summarizer",
        summodel,
        {"data": filtered},
        {"summarizer": cfg.summarizer.to_dict()},
        lambda: stages.train_sum(filtered, cfg.summarizer, summodel),
    )
    runner.stage(
        "summarize",
        summaries,
        {"model": summodel, "docs": filtered},
        {"summarizer": cfg.summarizer.to_dict()},
        lambda: stages.summarize(summodel, filtered / "test.jsonl", summaries),
    )

    def _evaluate():
        stages.evaluate(summaries, corpus, evaluation / "report.json", a, cfg.strategy.label)
        if stages.read_aspectsent(data, "test"):
            stages.classifier_report(data, preds, evaluation / "classifier_report.json", a)

    runner.stage("evaluate", evaluation, {"summaries": summaries, "corpus": corpus, "preds": preds}, {"aspects": a, "name": cfg.strategy.label}, _evaluate)
    return load_result_table(evaluation / "report.json")


def load_result_table(path) -> ResultTable:
    d = read_json(path)
    return ResultTable(d["cells"], d["counts"], d.get("coverage", {}), d.get("name", "run"))


def _begin(cfg: PipelineConfig, root: Path) -> RunManifest:
    try:
        root.mkdir(parents=True, exist_ok=True)
        probe = root / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigurationError(f"output root {root} is not writable: {exc}") from exc
    return RunManifest(run_id=cfg.config_hash[:12], config_hash=cfg.config_hash)


def _finish(manifest: RunManifest, path: Path) -> None:
    write_json(path, manifest.to_dict())


def run_pipeline(cfg: PipelineConfig) -> RunManifest:
    """Run every stage (skipping those already complete) and write ``manifest.json``.

    A failing stage raises :class:`StageError`; the manifest is still written
    and names the failed stage (also available as ``exc.manifest``).
    """
    cfg = cfg.seeded()
    root = Path(cfg.output_root)
    manifest = _begin(cfg, root)
    runner = _Runner(manifest)
    cache = root / "cache"
    try:
        corpus, labels = _shared_stages(cfg, runner, root, cache)
        _strategy_stages(cfg, runner, corpus, labels, root, cache)
        manifest.status = "complete"
    except StageError as exc:
        exc.manifest = manifest
        raise
    finally:
        _finish(manifest, root / "manifest.json")
    return manifest


@dataclass
class AblationReport:
    rows: dict[str, Optional[ResultTable]]
    errors: dict[str, str]
    manifests: dict[str, RunManifest]
    aspects: tuple[str, ...] = DEFAULT_ASPECTS

    def render(self) -> str:
        return render_tables(list(self.rows.values()), self.aspects, names=list(self.rows))

    def to_dict(self) -> dict:
        return {
            "rows": {k: (None if v is None else v.to_dict()) for k, v in self.rows.items()},
            "errors": self.errors,
        }


def run_ablation(cfg: PipelineConfig, strategies: Sequence[FilterStrategy] = ABLATION_STRATEGIES) -> AblationReport:
    """One run per strategy over shared ingestion and pseudo labels."""
    root = Path(cfg.output_root)
    base = cfg.seeded()
    shared_manifest = _begin(base, root)
    cache = root / "cache"
    runner = _Runner(shared_manifest)
    try:
        corpus, labels = _shared_stages(base, runner, root / "shared", cache)
    finally:
        _finish(shared_manifest, root / "shared" / "manifest.json")
    rows, errors, manifests = {}, {}, {}
    for strategy in strategies:
        label = strategy.label
        scfg = replace(cfg, strategy=strategy, output_root=str(root / label)).seeded()
        sroot = Path(scfg.output_root)
        m = _begin(scfg, sroot)
        m.stages.update(shared_manifest.stages)
        try:
            rows[label] = _strategy_stages(scfg, _Runner(m), corpus, labels, sroot, cache)
            m.status = "complete"
        except StageError as exc:
            logger.error("ablation row %s failed: %s", label, exc)
            rows[label], errors[label] = None, str(exc)
        finally:
            _finish(m, sroot / "manifest.json")
        manifests[label] = m
    report = AblationReport(rows, errors, manifests, cfg.aspects)
    write_json(root / "ablation.json", report.to_dict())
    (root / "ablation.txt").write_text(report.render() + "\n", encoding="utf-8")
    return report


def run_oracle(cfg: PipelineConfig, separate_models: bool = True) -> ResultTable:
    """Oracle upper bound: filter every split with the references themselves.

    With ``separate_models`` one summarizer is trained per aspect; otherwise
    one summarizer serves all aspects.
    """
    if cfg.oracle is None:
        raise ConfigurationError("run_oracle needs an 'oracle' section in the config")
    cfg = cfg.seeded()
    root = Path(cfg.output_root)
    manifest = _begin(cfg, root)
    runner = _Runner(manifest)
    cache = root / "cache"
    tag = f"oracle-{cfg.oracle.alpha:g}" + ("" if separate_models else "-single")
    oroot = root / tag
    try:
        corpus, _ = _shared_stages(cfg, runner, root, cache)
        filtered = oroot / "filtered"
        runner.stage(
            "oracle-filter",
            filtered,
            {"corpus": corpus},
            {"oracle": cfg.oracle.to_dict(), "aspects": cfg.aspects},
            lambda: stages.oracle(corpus, cfg.oracle, filtered, cfg.aspects, cache),
        )
        groups = [(a,) for a in cfg.aspects] if separate_models else [tuple(cfg.aspects)]
        outs = []
        for group in groups:
            name = "-".join(group) if separate_models else "all"
            model, out = oroot / f"summarizer-{name}", oroot / "summaries" / name
            runner.stage(
                f"train-summarizer[{name}]",
                model,
                {"data": filtered},
                {"summarizer": cfg.summarizer.to_dict(), "aspects": group},
                lambda group=group, model=model: stages.train_sum(filtered, cfg.summarizer, model, group),
            )
            runner.stage(
                f"summarize[{name}]",
                out,
                {"model": model, "docs": filtered},
                {"aspects": group},
                lambda group=group, model=model, out=out: stages.summarize(model, filtered / "test.jsonl", out, None, group),
            )
            outs.append(out)
        evaluation = oroot / "evaluation"
        runner.stage(
            "evaluate",
            evaluation,
            {"summaries": oroot / "summaries", "corpus": corpus},
            {"aspects": cfg.aspects, "name": tag},
            lambda: stages.evaluate_many(outs, corpus, evaluation / "report.json", cfg.aspects, tag),
        )
        manifest.status = "complete"
    except StageError as exc:
        exc.manifest = manifest
        raise
    finally:
        _finish(manifest, oroot / "manifest.json")
    return load_result_table(evaluation / "report.json")


__all__ = [
    "AblationReport",
    "AspectSumError",
    "PipelineConfig",
    "RunManifest",
    "derive_seed",
    "run_ablation",
    "run_oracle",
    "run_pipeline",
]
