"""Linearly separable two-aspect toy set for the sentence classifier."""

from __future__ import annotations

import numpy as np

from aspectsum.dataset import AspectSentExample

FILLER = ["the", "remote", "design", "team", "colour", "meeting", "today", "button", "screen", "case"]
KEYWORDS = {"problems": "issue", "decisions": "agreed"}
ASPECTS = tuple(KEYWORDS)


def toy_examples(n: int, seed: int, split: str) -> list[AspectSentExample]:
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        words = list(rng.choice(FILLER, size=6))
        labels = {}
        for j, (aspect, kw) in enumerate(KEYWORDS.items()):
            # cycle through all four label combinations
            on = bool((i >> j) & 1)
            labels[aspect] = int(on)
            if on:
                words.insert(int(rng.integers(0, len(words) + 1)), kw)
        out.append(AspectSentExample(f"toy-{split}", i, " ".join(words), labels, split))
    return out


def hand_rule(text: str) -> dict[str, int]:
    """The separating linear rule: keyword count > 0."""
    toks = text.split()
    return {a: int(toks.count(kw) > 0) for a, kw in KEYWORDS.items()}
