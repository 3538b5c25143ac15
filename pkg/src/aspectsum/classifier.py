"""Multi-label aspect relevance classifier.

encoder features -> dropout -> linear layer -> sigmoid, trained with binary
cross entropy over the multi-hot targets.  The encoder is any embedding
backend; it is kept frozen, so only the linear head is learned here.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .corpus import DEFAULT_ASPECTS, Sentence
from .dataset import AspectSentExample
from .embedding import EmbeddingBackendSpec, EmbeddingCache, embed_matrix
from .errors import ConfigurationError, ValidationError
from .jsonio import read_json, write_json
from .labeling import AspectLabelVector
from .optim import Adam

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClassifierConfig:
    aspects: tuple[str, ...] = DEFAULT_ASPECTS
    encoder_backend_id: str = "bow-test"
    encoder_dim: int = 256
    encoder_normalization: str = "none"
    max_input_tokens: int = 128
    dropout_rate: float = 0.1
    predict_threshold: float = 0.5
    max_epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 1e-2
    weight_decay: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "aspects", tuple(self.aspects))
        if not self.aspects:
            raise ValidationError("classifier needs at least one aspect")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValidationError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")
        if not 0.0 < self.predict_threshold < 1.0:
            raise ValidationError(f"predict_threshold must lie in (0, 1), got {self.predict_threshold}")
        if self.max_epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValidationError("max_epochs, batch_size and learning_rate must be positive")

    @property
    def num_aspects(self) -> int:
        return len(self.aspects)

    @property
    def encoder(self) -> EmbeddingBackendSpec:
        return EmbeddingBackendSpec(self.encoder_backend_id, self.encoder_dim, self.encoder_normalization)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["aspects"] = list(self.aspects)
        return d

    @classmethod
    def from_dict(cls, d) -> "ClassifierConfig":
        d = dict(d)
        d.pop("num_aspects", None)
        return cls(**d)


@dataclass(frozen=True)
class AspectProbabilities:
    probs: Mapping[str, float]


@dataclass
class AspectScore:
    precision: float
    recall: float
    f1: float
    support: int
    tp: int = 0
    fp: int = 0
    fn: int = 0


@dataclass
class ClassifierReport:
    per_aspect: dict[str, AspectScore]
    micro: AspectScore

    def to_dict(self) -> dict:
        return {"per_aspect": {a: asdict(s) for a, s in self.per_aspect.items()}, "micro": asdict(self.micro)}

    def render(self) -> str:
        lines = [f"{'':<10}{'Precision':>10}{'Recall':>8}{'F1':>8}{'Support':>9}"]
        for a, s in [*self.per_aspect.items(), ("micro", self.micro)]:
            lines.append(f"{a.capitalize():<10}{s.precision:>10.3f}{s.recall:>8.3f}{s.f1:>8.3f}{s.support:>9d}")
        return "\n".join(lines)


@dataclass
class TrainingLog:
    epochs: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_val_micro_f1: float = -1.0
    warnings: list[str] = field(default_factory=list)

    @property
    def checkpoint_train_losses(self) -> list[float]:
        return [e["train_loss"] for e in self.epochs if e.get("selected")]

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# numerics
# ---------------------------------------------------------------------------


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def binary_cross_entropy(probs, targets, eps: float = 1e-12) -> float:
    """Mean element-wise BCE of probabilities against 0/1 targets."""
    p = np.clip(np.asarray(probs, dtype=np.float64), eps, 1 - eps)
    y = np.asarray(targets, dtype=np.float64)
    return float(np.mean(-(y * np.log(p) + (1 - y) * np.log1p(-p))))


def bce_with_logits(logits, targets) -> float:
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    return float(np.mean(np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z)))))


def _truncate(text: str, limit: int) -> str:
    toks = text.split()
    return text if len(toks) <= limit else " ".join(toks[:limit])


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------


class ClassifierModel:
    def __init__(self, cfg: ClassifierConfig, weight: np.ndarray, bias: np.ndarray, cache: Optional[EmbeddingCache] = None):
        self.cfg = cfg
        self.weight = weight
        self.bias = bias
        self.cache = cache if cache is not None else EmbeddingCache()

    @property
    def aspects(self) -> tuple[str, ...]:
        return self.cfg.aspects

    def features(self, texts: Sequence[str]) -> np.ndarray:
        texts = [_truncate(t, self.cfg.max_input_tokens) for t in texts]
        return embed_matrix(texts, self.cfg.encoder, self.cache)

    def logits(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weight + self.bias

    def predict_proba(self, texts: Sequence[str]) -> np.ndarray:
        if len(texts) == 0:
            return np.zeros((0, self.cfg.num_aspects))
        return sigmoid(self.logits(self.features(texts)))

    def save(self, out_dir) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_json(out_dir / "config.json", {"kind": "linear-sigmoid", "config": self.cfg.to_dict()})
        np.save(out_dir / "weight.npy", self.weight)
        np.save(out_dir / "bias.npy", self.bias)
        return out_dir

    @classmethod
    def load(cls, model_dir, cache: Optional[EmbeddingCache] = None) -> "ClassifierModel":
        model_dir = Path(model_dir)
        meta = read_json(model_dir / "config.json")
        cfg = ClassifierConfig.from_dict(meta["config"])
        weight = np.load(model_dir / "weight.npy")
        bias = np.load(model_dir / "bias.npy")
        if weight.shape != (cfg.encoder_dim, cfg.num_aspects) or bias.shape != (cfg.num_aspects,):
            raise ConfigurationError(f"weights in {model_dir} do not match the stored config")
        return cls(cfg, weight, bias, cache)


def _targets(examples: Sequence[AspectSentExample], aspects) -> np.ndarray:
    y = np.zeros((len(examples), len(aspects)))
    for i, ex in enumerate(examples):
        missing = [a for a in aspects if a not in ex.labels]
        if missing:
            raise ValidationError(f"example {ex.meeting_id}#{ex.sent_idx} lacks labels for {missing}")
        y[i] = [ex.labels[a] for a in aspects]
    return y


def _micro_f1(pred: np.ndarray, gold: np.ndarray) -> float:
    tp = float(np.sum((pred == 1) & (gold == 1)))
    fp = float(np.sum((pred == 1) & (gold == 0)))
    fn = float(np.sum((pred == 0) & (gold == 1)))
    return _f1(_ratio(tp, tp + fp), _ratio(tp, tp + fn))


def _ratio(a, b):
    return a / b if b > 0 else 0.0


def _f1(p, r):
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def train_classifier(
    train: Sequence[AspectSentExample],
    val: Sequence[AspectSentExample],
    cfg: ClassifierConfig,
    out_dir=None,
    cache: Optional[EmbeddingCache] = None,
) -> tuple[ClassifierModel, TrainingLog]:
    """Fit the linear head with Adam on mean BCE; keep the best val micro-F1 epoch."""
    if not train:
        raise ValidationError("training set is empty")
    if not val:
        raise ValidationError("validation set is empty")
    log = TrainingLog()
    y_train = _targets(train, cfg.aspects)
    y_val = _targets(val, cfg.aspects)
    if np.all(y_train == y_train[0:1]):
        msg = "degenerate training set: every example has the same label vector"
        logger.warning(msg)
        log.warnings.append(msg)

    model = ClassifierModel(cfg, np.zeros((cfg.encoder_dim, cfg.num_aspects)), np.zeros(cfg.num_aspects), cache)
    x_train = model.features([ex.text for ex in train])
    x_val = model.features([ex.text for ex in val])

    rng = np.random.default_rng(cfg.seed)
    params = {
        "weight": rng.normal(0.0, 0.01, size=(cfg.encoder_dim, cfg.num_aspects)),
        "bias": np.zeros(cfg.num_aspects),
    }
    opt = Adam(params, lr=cfg.learning_rate)
    best = (params["weight"].copy(), params["bias"].copy())
    keep = 1.0 - cfg.dropout_rate
    n = len(train)

    for epoch in range(cfg.max_epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb, yb = x_train[idx], y_train[idx]
            if cfg.dropout_rate > 0:
                xb = xb * (rng.random(xb.shape) < keep) / keep
            z = xb @ params["weight"] + params["bias"]
            g = (sigmoid(z) - yb) / yb.size
            grads = {"weight": xb.T @ g + cfg.weight_decay * params["weight"], "bias": g.sum(axis=0)}
            opt.step(grads)

        train_loss = bce_with_logits(x_train @ params["weight"] + params["bias"], y_train)
        val_logits = x_val @ params["weight"] + params["bias"]
        val_loss = bce_with_logits(val_logits, y_val)
        val_f1 = _micro_f1((sigmoid(val_logits) > cfg.predict_threshold).astype(int), y_val)
        selected = bool(val_f1 > log.best_val_micro_f1)
        if selected:
            log.best_val_micro_f1 = val_f1
            log.best_epoch = epoch
            best = (params["weight"].copy(), params["bias"].copy())
        log.epochs.append(
            {"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss, "val_micro_f1": val_f1, "selected": selected}
        )
        logger.debug("epoch %d train_loss=%.4f val_loss=%.4f val_f1=%.4f", epoch, train_loss, val_loss, val_f1)

    model.weight, model.bias = best
    if out_dir is not None:
        model.save(out_dir)
        write_json(Path(out_dir) / "training_log.json", log.to_dict())
    return model, log


def predict_labels(
    model: ClassifierModel,
    sentences: Sequence,
    threshold: float = 0.5,
    aspects: Optional[Sequence[str]] = None,
) -> list[tuple[AspectProbabilities, AspectLabelVector]]:
    """Probabilities plus strict-threshold labels (label 1 iff prob > threshold)."""
    if not 0.0 < threshold < 1.0:
        raise ValidationError(f"threshold must lie in (0, 1), got {threshold}")
    if aspects is not None and tuple(aspects) != model.aspects:
        raise ConfigurationError(f"model predicts {model.aspects}, pipeline expects {tuple(aspects)}")
    texts = [s.text if isinstance(s, Sentence) else s for s in sentences]
    probs = model.predict_proba(texts)
    return [probs_to_labels({a: float(p) for a, p in zip(model.aspects, row)}, threshold) for row in probs]


def probs_to_labels(probs: Mapping[str, float], threshold: float) -> tuple[AspectProbabilities, AspectLabelVector]:
    return AspectProbabilities(dict(probs)), AspectLabelVector({a: int(p > threshold) for a, p in probs.items()})


def _as_labels(x) -> Mapping[str, int]:
    return x.labels if hasattr(x, "labels") else x


def score_classifier(pred: Sequence, gold: Sequence, aspects: Sequence[str] = DEFAULT_ASPECTS) -> ClassifierReport:
    """Per-aspect precision/recall/F1/support from confusion counts."""
    if len(pred) != len(gold):
        raise ValidationError(f"misaligned predictions ({len(pred)}) and gold labels ({len(gold)})")
    per = {}
    TP = FP = FN = 0
    for a in aspects:
        tp = fp = fn = 0
        for p, g in zip(pred, gold):
            pv, gv = int(_as_labels(p).get(a, 0)), int(_as_labels(g).get(a, 0))
            tp += pv and gv
            fp += pv and not gv
            fn += gv and not pv
        prec, rec = _ratio(tp, tp + fp), _ratio(tp, tp + fn)
        per[a] = AspectScore(prec, rec, _f1(prec, rec), tp + fn, tp, fp, fn)
        TP, FP, FN = TP + tp, FP + fp, FN + fn
    mp, mr = _ratio(TP, TP + FP), _ratio(TP, TP + FN)
    return ClassifierReport(per, AspectScore(mp, mr, _f1(mp, mr), TP + FN, TP, FP, FN))
