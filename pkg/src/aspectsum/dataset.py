"""AspectSent: the pseudo-labeled sentence classification dataset."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .corpus import DEFAULT_ASPECTS, SPLITS, MeetingRecord
from .errors import IntegrityError, ValidationError
from .jsonio import read_jsonl, write_json, write_jsonl
from .labeling import LabeledSentence

logger = logging.getLogger(__name__)

STRATEGY_KINDS = ("filtertrain", "nofiltering", "down-sampling", "oracle-filter-all")
DEFAULT_DOWNSAMPLE_TARGET = 3367


@dataclass(frozen=True)
class AspectSentExample:
    meeting_id: str
    sent_idx: int
    text: str
    labels: Mapping[str, int]
    split: str

    @property
    def irrelevant(self) -> bool:
        return not any(self.labels.values())

    def to_dict(self) -> dict:
        return {
            "meeting_id": self.meeting_id,
            "sent_idx": self.sent_idx,
            "text": self.text,
            "labels": dict(self.labels),
            "split": self.split,
        }

    @classmethod
    def from_dict(cls, d) -> "AspectSentExample":
        return cls(d["meeting_id"], int(d["sent_idx"]), d["text"], dict(d["labels"]), d["split"])


@dataclass(frozen=True)
class FilterStrategy:
    kind: str = "filtertrain"
    predict_threshold: float = 0.5
    downsample_irrelevant_to: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValidationError(f"unknown filter strategy {self.kind!r}")
        if not 0.0 < self.predict_threshold < 1.0:
            raise ValidationError(f"predict_threshold must lie in (0, 1), got {self.predict_threshold}")
        if self.kind == "down-sampling":
            if self.downsample_irrelevant_to is None:
                object.__setattr__(self, "downsample_irrelevant_to", DEFAULT_DOWNSAMPLE_TARGET)
            if self.downsample_irrelevant_to <= 0:
                raise ValidationError("downsample_irrelevant_to must be positive")
        elif self.downsample_irrelevant_to is not None:
            raise ValidationError("downsample_irrelevant_to is only meaningful for down-sampling")

    @property
    def label(self) -> str:
        """Row name used in ablation reports."""
        if self.kind == "filtertrain":
            return f"filtertrain-{self.predict_threshold:g}"
        if self.kind == "oracle-filter-all":
            return "oracle"
        return self.kind

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "predict_threshold": self.predict_threshold,
            "downsample_irrelevant_to": self.downsample_irrelevant_to,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d) -> "FilterStrategy":
        return cls(**d)


# the five rows of the ablation table, in report order
ABLATION_STRATEGIES = (
    FilterStrategy("oracle-filter-all"),
    FilterStrategy("filtertrain", 0.5),
    FilterStrategy("filtertrain", 0.3),
    FilterStrategy("nofiltering"),
    FilterStrategy("down-sampling"),
)


@dataclass
class AspectSentStats:
    aspects: tuple[str, ...]
    positives: dict[str, dict[str, int]] = field(default_factory=dict)
    irrelevant: dict[str, int] = field(default_factory=dict)
    total: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "aspects": list(self.aspects),
            "positives": self.positives,
            "irrelevant": self.irrelevant,
            "total": self.total,
        }

    def render(self) -> str:
        """Text table with one row per split plus a Total row."""
        cols = ["Total", *[a.capitalize() for a in self.aspects], "Irrelevant"]
        rows = []
        for split in [*self.total, "total"]:
            if split == "total":
                tot = sum(self.total.values())
                pos = [sum(self.positives[s][a] for s in self.positives) for a in self.aspects]
                irr = sum(self.irrelevant.values())
                name = "Total"
            else:
                tot, irr, name = self.total[split], self.irrelevant[split], split.capitalize()
                pos = [self.positives[split][a] for a in self.aspects]
            rows.append([name, *[f"{v:,}" for v in (tot, *pos, irr)]])
        widths = [max(len(r[i]) for r in rows + [["", *cols]]) for i in range(len(cols) + 1)]
        lines = ["  ".join(c.rjust(w) for c, w in zip(["", *cols], widths))]
        lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows]
        return "\n".join(lines)


def compute_stats(examples: Iterable[AspectSentExample], aspects: Sequence[str] = DEFAULT_ASPECTS) -> AspectSentStats:
    stats = AspectSentStats(tuple(aspects))
    for ex in examples:
        stats.total[ex.split] = stats.total.get(ex.split, 0) + 1
        pos = stats.positives.setdefault(ex.split, {a: 0 for a in aspects})
        stats.irrelevant.setdefault(ex.split, 0)
        if ex.irrelevant:
            stats.irrelevant[ex.split] += 1
        for a in aspects:
            pos[a] += int(ex.labels.get(a, 0))
    order = [s for s in SPLITS if s in stats.total]
    stats.total = {s: stats.total[s] for s in order}
    stats.positives = {s: stats.positives[s] for s in order}
    stats.irrelevant = {s: stats.irrelevant[s] for s in order}
    return stats


def build_aspectsent(
    labeled: Iterable[LabeledSentence],
    records: Sequence[MeetingRecord],
    aspects: Sequence[str] = DEFAULT_ASPECTS,
) -> tuple[list[AspectSentExample], AspectSentStats]:
    """Join pseudo labels with transcript text; one example per sentence.

    Every sentence of every record must be labeled exactly once, and every
    label must point at an existing sentence.
    """
    by_id = {r.meeting_id: r for r in records}
    table: dict[tuple[str, int], LabeledSentence] = {}
    for row in labeled:
        rec = by_id.get(row.meeting_id)
        if rec is None or not 0 <= row.sent_idx < len(rec.sentences):
            raise IntegrityError(f"orphan labeled sentence {row.meeting_id!r}#{row.sent_idx}")
        key = (row.meeting_id, row.sent_idx)
        if key in table:
            raise IntegrityError(f"sentence {row.meeting_id!r}#{row.sent_idx} labeled twice")
        table[key] = row

    examples = []
    for rec in records:
        for sent in rec.sentences:
            row = table.get((rec.meeting_id, sent.idx))
            if row is None:
                raise IntegrityError(f"sentence {rec.meeting_id!r}#{sent.idx} has no pseudo label")
            labels = {a: int(row.labels.get(a, 0)) for a in aspects}
            examples.append(AspectSentExample(rec.meeting_id, sent.idx, sent.text, labels, rec.split))
    return examples, compute_stats(examples, aspects)


def apply_filter_strategy(examples: Sequence[AspectSentExample], strategy: FilterStrategy) -> list[AspectSentExample]:
    """Select which examples survive; never alters an example."""
    if strategy.kind == "nofiltering":
        return list(examples)
    if strategy.kind == "filtertrain":
        return [ex for ex in examples if not (ex.split == "train" and ex.irrelevant)]
    if strategy.kind == "oracle-filter-all":
        return [ex for ex in examples if not ex.irrelevant]

    target = strategy.downsample_irrelevant_to
    pool = [i for i, ex in enumerate(examples) if ex.split == "train" and ex.irrelevant]
    if target >= len(pool):
        if target > len(pool):
            logger.warning("down-sampling target %d exceeds %d irrelevant train examples; keeping all", target, len(pool))
        return list(examples)
    rng = np.random.default_rng(strategy.seed)
    keep = set(int(i) for i in rng.choice(np.asarray(pool), size=target, replace=False))
    drop = set(pool) - keep
    return [ex for i, ex in enumerate(examples) if i not in drop]


def write_aspectsent(examples: Sequence[AspectSentExample], out_dir, aspects: Sequence[str] = DEFAULT_ASPECTS) -> AspectSentStats:
    """Write ``{train,val,test}.jsonl`` and ``stats.json``."""
    out_dir = Path(out_dir)
    for split in SPLITS:
        write_jsonl(out_dir / f"{split}.jsonl", (ex.to_dict() for ex in examples if ex.split == split))
    stats = compute_stats(examples, aspects)
    write_json(out_dir / "stats.json", stats.to_dict())
    return stats


def read_aspectsent(data_dir, split: str) -> list[AspectSentExample]:
    path = Path(data_dir) / f"{split}.jsonl"
    if not path.exists():
        return []
    return [AspectSentExample.from_dict(d) for d in read_jsonl(path)]
