"""Sentence embeddings behind a pluggable backend, with an on-disk cache.

Backends are plain callables ``texts -> array (n, dim)``.  Three kinds are
available out of the box:

* ``hash-bow-test``: seeded hashed bag-of-words projection, dim 64 by default.
  Deterministic and offline; used throughout the tests.
* ``bow-test``: feature-hashed token counts (sparse-ish), handy as a
  classifier encoder because it keeps keyword features linearly separable.
* ``sentence-transformers:<model>``: lazily loads a SentenceTransformer model
  (e.g. ``sentence-transformers:princeton-nlp/sup-simcse-bert-base-uncased``).
* ``cmd:<shell command>``: runs a local subprocess that reads a JSON list of
  strings on stdin and writes a JSON list of vectors on stdout.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import subprocess
import threading
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from filelock import FileLock

from .errors import BackendError, DegenerateVectorError, ValidationError

logger = logging.getLogger(__name__)

NORMALIZATIONS = ("none", "unit-l2")

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_EMPTY_TOKEN = "\x00<empty>"


@dataclass(frozen=True)
class EmbeddingBackendSpec:
    backend_id: str = "hash-bow-test"
    dim: int = 64
    normalization: str = "unit-l2"
    seed: int = 0

    def __post_init__(self):
        if self.dim <= 0:
            raise ValidationError(f"embedding dim must be positive, got {self.dim}")
        if self.normalization not in NORMALIZATIONS:
            raise ValidationError(f"unknown normalization {self.normalization!r}")

    def to_dict(self) -> dict:
        return {"backend_id": self.backend_id, "dim": self.dim, "normalization": self.normalization, "seed": self.seed}

    @classmethod
    def from_dict(cls, d) -> "EmbeddingBackendSpec":
        return cls(**d)

    @property
    def cache_key(self) -> str:
        # seed changes the test backends' output, so it is part of the namespace
        base = self.backend_id if self.seed == 0 else f"{self.backend_id}@{self.seed}"
        return f"{base}-d{self.dim}"


@dataclass(frozen=True)
class EmbeddingVector:
    values: np.ndarray
    backend_id: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValidationError("embedding must be one-dimensional")
        if not np.all(np.isfinite(values)):
            raise ValidationError("embedding contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def __eq__(self, other):
        if not isinstance(other, EmbeddingVector):
            return NotImplemented
        return self.backend_id == other.backend_id and np.array_equal(self.values, other.values)

    __hash__ = None


# ---------------------------------------------------------------------------
# backends
# ---------------------------------------------------------------------------


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@lru_cache(maxsize=200_000)
def _token_direction(token: str, dim: int, seed: int) -> np.ndarray:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=str(seed).encode()).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "little"))
    v = rng.standard_normal(dim)
    v.setflags(write=False)
    return v


def hash_bow_embed(texts: Sequence[str], dim: int = 64, seed: int = 0) -> np.ndarray:
    out = np.zeros((len(texts), dim))
    for i, text in enumerate(texts):
        toks = tokenize(text) or [_EMPTY_TOKEN]
        for tok in toks:
            out[i] += _token_direction(tok, dim, seed)
    return out


def _bucket(token: str, dim: int, seed: int) -> tuple[int, float]:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=str(seed).encode()).digest()
    h = int.from_bytes(digest, "little")
    return h % dim, (1.0 if (h >> 63) & 1 == 0 else -1.0)


def bow_count_embed(texts: Sequence[str], dim: int = 256, seed: int = 0) -> np.ndarray:
    out = np.zeros((len(texts), dim))
    for i, text in enumerate(texts):
        for tok in tokenize(text):
            j, sign = _bucket(tok, dim, seed)
            out[i, j] += sign
    return out


BackendFn = Callable[[Sequence[str], "EmbeddingBackendSpec"], np.ndarray]

_REGISTRY: dict[str, BackendFn] = {
    "hash-bow-test": lambda texts, spec: hash_bow_embed(texts, spec.dim, spec.seed),
    "bow-test": lambda texts, spec: bow_count_embed(texts, spec.dim, spec.seed),
}


def register_backend(backend_id: str, fn: BackendFn) -> None:
    """Register an in-process backend ``fn(texts, spec) -> (n, dim) array``."""
    _REGISTRY[backend_id] = fn


_ST_MODELS: dict = {}


def _sentence_transformers_backend(texts, spec):
    name = spec.backend_id.split(":", 1)[1]
    try:
        model = _ST_MODELS.get(name)
        if model is None:
            from sentence_transformers import SentenceTransformer

            model = _ST_MODELS[name] = SentenceTransformer(name)
        return np.asarray(model.encode(list(texts), show_progress_bar=False), dtype=np.float64)
    except Exception as exc:  # noqa: BLE001 - any loader/encoder failure is a backend failure
        raise BackendError(f"sentence-transformers backend {name!r} failed: {exc}") from exc


def _command_backend(texts, spec):
    cmd = spec.backend_id.split(":", 1)[1]
    try:
        proc = subprocess.run(cmd, shell=True, input=json.dumps(list(texts)), capture_output=True, text=True, check=True)
        return np.asarray(json.loads(proc.stdout), dtype=np.float64)
    except (subprocess.CalledProcessError, json.JSONDecodeError, OSError) as exc:
        raise BackendError(f"command backend {cmd!r} failed: {exc}") from exc


def _resolve(backend_id: str) -> BackendFn:
    if backend_id in _REGISTRY:
        return _REGISTRY[backend_id]
    if backend_id.startswith("sentence-transformers:"):
        return _sentence_transformers_backend
    if backend_id.startswith("cmd:"):
        return _command_backend
    raise BackendError(f"unknown embedding backend {backend_id!r}")


# ---------------------------------------------------------------------------
# cache
# ---------------------------------------------------------------------------


def _safe_name(key: str) -> str:
    return re.sub(r"[^A-Za-z0-9._@-]+", "_", key)


class EmbeddingCache:
    """Content-addressed vectors persisted as ``{dir}/{backend_id}.jsonl``.

    With ``directory=None`` the cache lives in memory only.
    """

    def __init__(self, directory=None):
        self.directory = Path(directory) if directory is not None else None
        self._mem: dict[str, dict[str, np.ndarray]] = {}
        self._lock = threading.Lock()

    def _path(self, key):
        return self.directory / f"{_safe_name(key)}.jsonl"

    def _table(self, key) -> dict[str, np.ndarray]:
        table = self._mem.get(key)
        if table is None:
            table = {}
            if self.directory is not None and self._path(key).exists():
                with self._path(key).open(encoding="utf-8") as fh:
                    for line in fh:
                        if line.strip():
                            rec = json.loads(line)
                            table[rec["text_sha256"]] = np.asarray(rec["vector"], dtype=np.float64)
            self._mem[key] = table
        return table

    def get(self, key: str, text: str) -> Optional[np.ndarray]:
        with self._lock:
            return self._table(key).get(_sha(text))

    def put_many(self, key: str, texts: Sequence[str], vectors: np.ndarray) -> None:
        with self._lock:
            table = self._table(key)
            fresh = []
            for text, vec in zip(texts, vectors):
                h = _sha(text)
                if h not in table:
                    table[h] = np.array(vec, dtype=np.float64)
                    fresh.append((h, table[h]))
            if self.directory is None or not fresh:
                return
            self.directory.mkdir(parents=True, exist_ok=True)
            path = self._path(key)
            with FileLock(str(path) + ".lock"):
                with path.open("a", encoding="utf-8") as fh:
                    for h, vec in fresh:
                        fh.write(json.dumps({"text_sha256": h, "vector": vec.tolist()}) + "\n")

    def clear(self) -> None:
        """Forget everything, including the on-disk files."""
        with self._lock:
            self._mem.clear()
            if self.directory is not None and self.directory.exists():
                for f in self.directory.glob("*.jsonl"):
                    f.unlink()


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


_DEFAULT_CACHE = EmbeddingCache()


def default_cache() -> EmbeddingCache:
    return _DEFAULT_CACHE


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def embed_matrix(texts: Sequence[str], spec: EmbeddingBackendSpec, cache: Optional[EmbeddingCache] = None) -> np.ndarray:
    """Embed ``texts`` and return an ``(n, dim)`` array (normalized per spec)."""
    if len(texts) == 0:
        raise ValidationError("embed_batch needs at least one text")
    cache = _DEFAULT_CACHE if cache is None else cache
    key = spec.cache_key
    out = np.empty((len(texts), spec.dim))
    missing: dict[str, list[int]] = {}
    for i, text in enumerate(texts):
        if not isinstance(text, str):
            raise ValidationError(f"text {i} is not a string")
        hit = cache.get(key, text)
        if hit is None:
            missing.setdefault(text, []).append(i)
        else:
            out[i] = hit
    if missing:
        uniq = list(missing)
        raw = np.asarray(_resolve(spec.backend_id)(uniq, spec), dtype=np.float64)
        if raw.shape != (len(uniq), spec.dim):
            raise BackendError(
                f"backend {spec.backend_id!r} returned shape {raw.shape}, expected {(len(uniq), spec.dim)}"
            )
        if not np.all(np.isfinite(raw)):
            raise BackendError(f"backend {spec.backend_id!r} returned non-finite values")
        cache.put_many(key, uniq, raw)
        for text, vec in zip(uniq, raw):
            out[missing[text]] = vec
    if spec.normalization == "unit-l2":
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        out = np.divide(out, norms, out=np.zeros_like(out), where=norms > 0)
    return out


def embed_batch(texts: Sequence[str], spec: EmbeddingBackendSpec, cache: Optional[EmbeddingCache] = None) -> list[EmbeddingVector]:
    mat = embed_matrix(texts, spec, cache)
    return [EmbeddingVector(row, spec.backend_id) for row in mat]


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1]."""
    va = a.values if isinstance(a, EmbeddingVector) else np.asarray(a, dtype=np.float64)
    vb = b.values if isinstance(b, EmbeddingVector) else np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise ValidationError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise DegenerateVectorError("cosine similarity of a zero vector is undefined")
    return float(min(1.0, max(-1.0, float(np.dot(va, vb)) / (na * nb))))


def cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarities between the rows of ``a`` and ``b``."""
    na = np.linalg.norm(a, axis=1, keepdims=True)
    nb = np.linalg.norm(b, axis=1, keepdims=True)
    if np.any(na == 0) or np.any(nb == 0):
        raise DegenerateVectorError("cosine similarity of a zero vector is undefined")
    return np.clip((a / na) @ (b / nb).T, -1.0, 1.0)
