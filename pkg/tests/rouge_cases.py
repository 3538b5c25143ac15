"""Hand-computed ROUGE F-scores as (candidate, reference, {metric: (P, R, F)})."""

from __future__ import annotations

T = 2 / 3

HAND_CASES = [
    # unigrams the,cat of 3 vs 2; bigram "the cat" of 2 vs 1; LCS 2
    ("the cat sat", "the cat", {"r1": (T, 1.0, 0.8), "r2": (0.5, 1.0, T), "rl": (T, 1.0, 0.8)}),
    ("a b c", "a b c", {"r1": (1.0, 1.0, 1.0), "r2": (1.0, 1.0, 1.0), "rl": (1.0, 1.0, 1.0)}),
    ("a b", "c d", {"r1": (0.0, 0.0, 0.0), "r2": (0.0, 0.0, 0.0), "rl": (0.0, 0.0, 0.0)}),
    # clipping: "the" counted once; F = 2(1/3)(1/2)/(5/6) = 0.4
    ("the the the", "the cat", {"r1": (1 / 3, 0.5, 0.4), "r2": (0.0, 0.0, 0.0), "rl": (1 / 3, 0.5, 0.4)}),
    # all unigrams match, no bigram does, LCS "a b d" = 3
    ("a b c d", "a c b d", {"r1": (1.0, 1.0, 1.0), "r2": (0.0, 0.0, 0.0), "rl": (0.75, 0.75, 0.75)}),
    # case and punctuation are ignored
    ("The Cat, sat!", "the cat sat", {"r1": (1.0, 1.0, 1.0), "r2": (1.0, 1.0, 1.0), "rl": (1.0, 1.0, 1.0)}),
    ("", "x y", {"r1": (0.0, 0.0, 0.0), "r2": (0.0, 0.0, 0.0), "rl": (0.0, 0.0, 0.0)}),
    # reference has no bigrams at all
    ("x y z", "x", {"r1": (1 / 3, 1.0, 0.5), "r2": (0.0, 0.0, 0.0), "rl": (1 / 3, 1.0, 0.5)}),
    # bigrams ab:2 ba:1 vs ba:2 ab:1 -> 2 clipped matches of 3; LCS "bab" = 3
    ("a b a b", "b a b a", {"r1": (1.0, 1.0, 1.0), "r2": (T, T, T), "rl": (0.75, 0.75, 0.75)}),
    (
        "police killed the gunman",
        "police kill the gunman",
        {"r1": (0.75, 0.75, 0.75), "r2": (1 / 3, 1 / 3, 1 / 3), "rl": (0.75, 0.75, 0.75)},
    ),
    ("w1 w2 w3 w4 w5", "w1 w3 w5", {"r1": (0.6, 1.0, 0.75), "r2": (0.0, 0.0, 0.0), "rl": (0.6, 1.0, 0.75)}),
    # a:min(2,1) + b:min(1,2) = 2; bigram "a b" shared; LCS "a b" = 2
    ("a a b", "a b b", {"r1": (T, T, T), "r2": (0.5, 0.5, 0.5), "rl": (T, T, T)}),
]
