"""ROUGE-1/2/L F1 and per-aspect result tables.

Tokenization: lowercase, split on runs of non-alphanumeric characters; no
stemming and no stopword removal.  ROUGE-N uses clipped n-gram counts and
ROUGE-L a single LCS over the full token sequences.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .corpus import DEFAULT_ASPECTS, MeetingRecord
from .errors import ValidationError

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    if len(b) > len(a):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def _prf(match: int, cand_total: int, ref_total: int) -> tuple[float, float, float]:
    p = match / cand_total if cand_total else 0.0
    r = match / ref_total if ref_total else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


@dataclass(frozen=True)
class RougeScore:
    r1_p: float
    r1_r: float
    r1_f: float
    r2_p: float
    r2_r: float
    r2_f: float
    rl_p: float
    rl_r: float
    rl_f: float

    def to_dict(self) -> dict:
        return asdict(self)


def rouge_score(candidate: str, reference: str) -> RougeScore:
    ref = tokenize(reference)
    if not ref:
        raise ValidationError("reference is empty after tokenization")
    cand = tokenize(candidate)
    values = []
    for n in (1, 2):
        c, r = ngrams(cand, n), ngrams(ref, n)
        match = sum((c & r).values())
        values += _prf(match, sum(c.values()), sum(r.values()))
    values += _prf(lcs_length(cand, ref), len(cand), len(ref))
    return RougeScore(*values)


METRICS = ("r1_f", "r2_f", "rl_f")
METRIC_LABELS = {"r1_f": "R-1", "r2_f": "R-2", "rl_f": "R-L"}


@dataclass
class ResultTable:
    """Mean F1 per aspect and metric, as percentages."""

    cells: dict[str, dict[str, float]]
    counts: dict[str, int]
    coverage: dict = field(default_factory=dict)
    name: str = "run"

    def cell(self, aspect: str, metric: str) -> Optional[float]:
        return self.cells.get(aspect, {}).get(metric)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "cells": {a: {m: round(v, 2) for m, v in row.items()} for a, row in self.cells.items()},
            "counts": self.counts,
            "coverage": self.coverage,
        }

    def render(self, aspects: Sequence[str] = DEFAULT_ASPECTS) -> str:
        return render_tables([self], aspects)


def render_tables(tables: Sequence[Optional[ResultTable]], aspects: Sequence[str] = DEFAULT_ASPECTS, names: Optional[Sequence[str]] = None) -> str:
    """Aligned text table: one row per run, R-1/R-2/R-L under each aspect.

    A ``None`` entry renders as a failed row.
    """
    names = list(names) if names is not None else [t.name if t else "?" for t in tables]
    w = max([len("Models"), *map(len, names)])
    group = 3 * 7
    head1 = " " * w + " |" + "|".join(a.capitalize().center(group) for a in aspects)
    head2 = "Models".ljust(w) + " |" + "|".join("".join(METRIC_LABELS[m].rjust(7) for m in METRICS) for _ in aspects)
    lines = [head1, head2, "-" * len(head2)]
    for name, t in zip(names, tables):
        if t is None:
            lines.append(name.ljust(w) + " |" + "FAILED".center(group * len(aspects) + len(aspects) - 1))
            continue
        parts = []
        for a in aspects:
            parts.append("".join((f"{t.cell(a, m):7.2f}" if t.cell(a, m) is not None else "      -") for m in METRICS))
        lines.append(name.ljust(w) + " |" + "|".join(parts))
    return "\n".join(lines)


def _summary_fields(s):
    if isinstance(s, Mapping):
        return s["meeting_id"], s["aspect"], s["text"]
    return s.meeting_id, s.aspect, s.text


def evaluate_run(
    summaries: Iterable,
    references,
    aspects: Sequence[str] = DEFAULT_ASPECTS,
    name: str = "run",
) -> ResultTable:
    """Average ROUGE F1 per aspect over pairs that have a reference.

    ``references`` is a list of MeetingRecords or a ``{(meeting_id, aspect): text}``
    mapping.  Summaries without a reference are excluded and counted in
    ``coverage['unreferenced']``.
    """
    if not isinstance(references, Mapping):
        references = {
            (r.meeting_id, a): r.summary(a) for r in references for a in aspects if r.summary(a) is not None
        }
    sums = {a: {m: 0.0 for m in METRICS} for a in aspects}
    counts = {a: 0 for a in aspects}
    unreferenced = []
    for s in summaries:
        mid, aspect, text = _summary_fields(s)
        ref = references.get((mid, aspect))
        if ref is None or aspect not in sums:
            unreferenced.append(f"{mid}/{aspect}")
            continue
        score = rouge_score(text, ref)
        counts[aspect] += 1
        for m in METRICS:
            sums[aspect][m] += getattr(score, m)
    cells = {a: {m: 100.0 * sums[a][m] / counts[a] for m in METRICS} for a in aspects if counts[a]}
    coverage = {"scored": sum(counts.values()), "unreferenced": len(unreferenced), "unreferenced_pairs": unreferenced}
    return ResultTable(cells, counts, coverage, name)
