"""Independent reference implementations used as test oracles.

These are deliberately naive: pure Python loops, no numpy matrix helpers and
no code shared with the package beyond the raw embedding backend itself.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter

from aspectsum.embedding import hash_bow_embed


def py_cosine(a, b) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    return max(-1.0, min(1.0, dot / (na * nb)))


def py_vec(text: str, dim: int = 64, seed: int = 0) -> list[float]:
    return [float(v) for v in hash_bow_embed([text], dim, seed)[0]]


def py_split_summary(text: str) -> list[str]:
    """Character scan: break after . ! ? when followed by whitespace."""
    out, cur, i = [], "", 0
    while i < len(text):
        ch = text[i]
        cur += ch
        if ch in ".!?" and i + 1 < len(text) and text[i + 1].isspace():
            while i + 1 < len(text) and text[i + 1].isspace():
                i += 1
            out.append(cur.strip())
            cur = ""
        i += 1
    if cur.strip():
        out.append(cur.strip())
    return [s for s in out if s]


def brute_force_labels(record, aspects, alpha, granularity, min_sent=4, min_unit=6):
    """Enumerate every (sentence, summary unit) pair and apply the gates literally.

    Returns a list of {aspect: 0/1} dicts in sentence order.
    """
    rows = []
    for sent in record.sentences:
        sv = py_vec(sent.text)
        labels = {}
        for a in aspects:
            text = record.summaries.get(a)
            units = []
            if text is not None and text.strip():
                units = [text.strip()] if granularity == "whole-summary" else py_split_summary(text)
            hit = 0
            for u in units:
                if (
                    py_cosine(sv, py_vec(u)) > alpha
                    and len(sent.text.split()) > min_sent
                    and len(u.split()) > min_unit
                ):
                    hit = 1
            labels[a] = hit
        rows.append(labels)
    return rows


def brute_force_oracle_kept(record, aspect, alpha):
    text = record.summaries.get(aspect)
    if text is None or not text.strip():
        return None
    uv = py_vec(text.strip())
    return [s.idx for s in record.sentences if py_cosine(py_vec(s.text), uv) > alpha]


def lcs_enumerate(a, b) -> int:
    """Longest common subsequence by enumerating every subsequence of the shorter input."""
    short, other = (a, b) if len(a) <= len(b) else (b, a)

    def is_subseq(sub, seq):
        it = iter(seq)
        return all(tok in it for tok in sub)

    for k in range(len(short), 0, -1):
        for combo in itertools.combinations(range(len(short)), k):
            if is_subseq([short[i] for i in combo], other):
                return k
    return 0


def py_rouge_n(cand, ref, n):
    c = Counter(tuple(cand[i : i + n]) for i in range(len(cand) - n + 1))
    r = Counter(tuple(ref[i : i + n]) for i in range(len(ref) - n + 1))
    hit = sum(min(v, r[k]) for k, v in c.items())
    p = hit / sum(c.values()) if c else 0.0
    rr = hit / sum(r.values()) if r else 0.0
    return p, rr, (2 * p * rr / (p + rr) if p + rr else 0.0)
