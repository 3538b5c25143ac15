"""Synthetic meetings for offline tests and demos.

Each meeting mixes short back-channel turns, off-topic chatter, and
aspect-bearing sentences built from aspect-specific vocabulary; its reference
summaries reuse words from the aspect-bearing sentences, so similarity-based
labeling has real signal to find.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .corpus import DEFAULT_ASPECTS, MeetingRecord, make_record

ASPECT_VOCAB = {
    "abstract": ["project", "manager", "presented", "overview", "meeting", "team", "discussed", "agenda", "goals"],
    "problems": ["problem", "issue", "whether", "unclear", "cost", "risk", "difficult", "concern", "question"],
    "actions": ["will", "prepare", "prototype", "send", "report", "next", "task", "assigned", "follow"],
    "decisions": ["decided", "agreed", "final", "choose", "remote", "rubber", "buttons", "curved", "battery"],
}
OBJECTS = ["remote", "case", "screen", "wheel", "chip", "colour", "logo", "speaker", "button", "display", "material", "shape"]
CHATTER = ["lunch", "weather", "coffee", "traffic", "weekend", "football", "printer", "holiday", "parking", "email"]
BACKCHANNEL = ["Mm-hmm .", "Yeah .", "Okay .", "Uh um right .", "So yeah .", "Mm ."]


def _aspect_sentence(rng, aspect, obj):
    words = list(rng.choice(ASPECT_VOCAB[aspect], size=int(rng.integers(4, 8)), replace=True))
    words.insert(int(rng.integers(0, len(words) + 1)), obj)
    return " ".join(["we", *words, "."])


def _chatter(rng):
    words = list(rng.choice(CHATTER, size=int(rng.integers(4, 9)), replace=True))
    return " ".join(["and", *words, "then", "."])


def make_synthetic_meeting(
    meeting_id: str,
    rng: np.random.Generator,
    n_sentences: int = 30,
    aspects: Sequence[str] = DEFAULT_ASPECTS,
    missing: Sequence[str] = (),
    split: str = "train",
) -> MeetingRecord:
    objs = list(rng.choice(OBJECTS, size=3, replace=False))
    texts, per_aspect = [], {a: [] for a in aspects}
    for _ in range(n_sentences):
        u = rng.random()
        if u < 0.25:
            texts.append(str(rng.choice(BACKCHANNEL)))
        elif u < 0.55:
            texts.append(_chatter(rng))
        else:
            a = aspects[int(rng.integers(0, len(aspects)))]
            s = _aspect_sentence(rng, a, str(rng.choice(objs)))
            per_aspect[a].append(s)
            texts.append(s)
    summaries = {}
    for a in aspects:
        if a in missing:
            continue
        source = per_aspect[a] or [_aspect_sentence(rng, a, objs[0])]
        picked = [source[int(i)] for i in rng.choice(len(source), size=min(2, len(source)), replace=False)]
        sents = []
        for s in picked:
            words = [w for w in s.split() if w not in (".", "we")]
            sents.append("The team " + " ".join(words) + ".")
        summaries[a] = " ".join(sents)
    return make_record(meeting_id, texts, summaries, split)


def make_synthetic_corpus(
    n_meetings: int = 6,
    seed: int = 0,
    splits: Optional[Sequence[str]] = None,
    sentences: tuple[int, int] = (20, 40),
    aspects: Sequence[str] = DEFAULT_ASPECTS,
    missing: Optional[dict[int, Sequence[str]]] = None,
) -> list[MeetingRecord]:
    """``n_meetings`` meetings; default split pattern is 4:1:1 train/val/test."""
    rng = np.random.default_rng(seed)
    if splits is None:
        pattern = ["train", "train", "train", "train", "val", "test"]
        splits = [pattern[i % len(pattern)] for i in range(n_meetings)]
    missing = missing or {}
    return [
        make_synthetic_meeting(
            f"syn{i:03d}",
            rng,
            int(rng.integers(sentences[0], sentences[1] + 1)),
            aspects,
            missing.get(i, ()),
            splits[i],
        )
        for i in range(n_meetings)
    ]
