from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from aspectsum.embedding import (
    EmbeddingBackendSpec,
    EmbeddingCache,
    EmbeddingVector,
    cosine_matrix,
    cosine_similarity,
    embed_batch,
    embed_matrix,
    register_backend,
)
from aspectsum.errors import BackendError, DegenerateVectorError, ValidationError


def test_equal_inputs_equal_vectors(hashbow):
    a, b = embed_batch(["a", "a"], hashbow, EmbeddingCache())
    assert a == b


def test_shape_contract(hashbow):
    vecs = embed_batch(["one", "two words", "three small words"], hashbow, EmbeddingCache())
    assert len(vecs) == 3
    assert all(v.dim == 64 and v.backend_id == "hash-bow-test" for v in vecs)
    assert all(math.isclose(float(np.linalg.norm(v.values)), 1.0) for v in vecs)


def test_cache_cleared_between_calls(tmp_path, hashbow):
    cache = EmbeddingCache(tmp_path / "cache")
    first = embed_batch(["the remote is curved"], hashbow, cache)[0]
    cache.clear()
    second = embed_batch(["the remote is curved"], hashbow, cache)[0]
    assert np.array_equal(first.values, second.values)


def test_cache_file_and_reload(tmp_path, hashbow):
    cache = EmbeddingCache(tmp_path / "cache")
    fresh = embed_matrix(["alpha beta", "gamma"], hashbow, cache)
    files = list((tmp_path / "cache").glob("*.jsonl"))
    assert [f.name for f in files] == ["hash-bow-test-d64.jsonl"]
    assert len(files[0].read_text().splitlines()) == 2
    reloaded = embed_matrix(["gamma", "alpha beta"], hashbow, EmbeddingCache(tmp_path / "cache"))
    assert np.array_equal(reloaded, fresh[::-1])
    # a repeated call appends nothing
    embed_matrix(["alpha beta"], hashbow, cache)
    assert len(files[0].read_text().splitlines()) == 2


def test_backend_unavailable():
    with pytest.raises(BackendError):
        embed_batch(["x"], EmbeddingBackendSpec("no-such-backend"), EmbeddingCache())


def test_cached_text_survives_missing_backend(hashbow):
    cache = EmbeddingCache()
    embed_batch(["x y"], hashbow, cache)
    cache._mem["nope-d64"] = cache._mem[hashbow.cache_key]
    out = embed_batch(["x y"], EmbeddingBackendSpec("nope"), cache)
    assert out[0].dim == 64


def test_empty_list_rejected(hashbow):
    with pytest.raises(ValidationError):
        embed_batch([], hashbow)


def test_empty_string_embeds(hashbow):
    (v,) = embed_batch([""], hashbow, EmbeddingCache())
    assert np.linalg.norm(v.values) > 0


def test_backend_shape_checked():
    register_backend("bad-shape-test", lambda texts, spec: np.zeros((len(texts), 3)))
    with pytest.raises(BackendError):
        embed_batch(["a"], EmbeddingBackendSpec("bad-shape-test", dim=4), EmbeddingCache())


def test_command_backend(tmp_path):
    script = tmp_path / "emb.py"
    script.write_text("import json,sys; t=json.load(sys.stdin); print(json.dumps([[len(x), 1.0] for x in t]))")
    spec = EmbeddingBackendSpec(f"cmd:python3 {script}", dim=2, normalization="none")
    vecs = embed_matrix(["ab", "abcd"], spec, EmbeddingCache())
    assert vecs.tolist() == [[2.0, 1.0], [4.0, 1.0]]


def test_cosine_examples():
    v = np.array([0.3, -1.2, 2.0])
    assert cosine_similarity(v, v) == pytest.approx(1.0)
    assert cosine_similarity([1, 0], [0, 1]) == 0.0
    assert cosine_similarity([1, 2, 3], [4, 5, 6]) == pytest.approx(0.974631846, abs=1e-9)
    assert cosine_similarity([1, 2, 3], [4, 5, 6]) == pytest.approx(32 / (math.sqrt(14) * math.sqrt(77)), abs=1e-12)


def test_cosine_errors():
    with pytest.raises(ValidationError):
        cosine_similarity([1, 2], [1, 2, 3])
    with pytest.raises(DegenerateVectorError):
        cosine_similarity([0, 0], [1, 2])
    with pytest.raises(ValidationError):
        EmbeddingVector(np.array([1.0, np.nan]), "x")


def test_cosine_matrix_matches_pairwise():
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=(4, 5)), rng.normal(size=(3, 5))
    m = cosine_matrix(a, b)
    for i in range(4):
        for j in range(3):
            assert m[i, j] == pytest.approx(cosine_similarity(a[i], b[j]), abs=1e-12)


vec = st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=3)


@settings(max_examples=200)
@given(vec, vec, st.floats(1e-3, 1e3))
def test_cosine_symmetry_and_scale(a, b, k):
    a, b = np.array(a), np.array(b)
    assume(np.linalg.norm(a) > 1e-6 and np.linalg.norm(b) > 1e-6)
    s = cosine_similarity(a, b)
    assert -1.0 <= s <= 1.0
    assert s == cosine_similarity(b, a)
    assert cosine_similarity(k * a, b) == pytest.approx(s, abs=1e-9)


@settings(max_examples=100)
@given(st.text(alphabet="abc xyz", max_size=20))
def test_cache_soundness(text):
    spec = EmbeddingBackendSpec("hash-bow-test", normalization="none")
    cache = EmbeddingCache()
    fresh = embed_matrix([text], spec, EmbeddingCache())
    embed_matrix([text], spec, cache)
    assert np.array_equal(embed_matrix([text], spec, cache), fresh)
