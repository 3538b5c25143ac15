"""Corpus ingestion: raw meeting exports -> canonical ``MeetingRecord`` objects.

Each meeting is one transcript (a list of dialogue-act sized sentences, in
order) plus up to one reference summary per aspect.  The canonical on-disk
form is one JSON object per meeting::

    {"meeting_id": "ES2002a",
     "sentences": [{"idx": 0, "speaker": "A", "text": "..."}, ...],
     "summaries": {"abstract": "...", "decisions": "..."},
     "split": "train"}
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .errors import ConfigurationError, EmptyCorpusError, IntegrityError, ParseError, ValidationError
from .jsonio import read_json, write_json

logger = logging.getLogger(__name__)

DEFAULT_ASPECTS: tuple[str, ...] = ("abstract", "problems", "actions", "decisions")
SPLITS: tuple[str, ...] = ("train", "val", "test")
FORMATS: tuple[str, ...] = ("ami-json", "icsi-json", "generic-jsonl")

# Summary key spellings seen in AMI/ICSI exports, mapped onto aspect ids.
_ASPECT_ALIASES = {
    "abstract": "abstract",
    "abstractive": "abstract",
    "problem": "problems",
    "problems": "problems",
    "action": "actions",
    "actions": "actions",
    "decision": "decisions",
    "decisions": "decisions",
}
_SPLIT_ALIASES = {"train": "train", "val": "val", "valid": "val", "validation": "val", "dev": "val", "test": "test"}


def count_tokens(text: str) -> int:
    """Whitespace token count; punctuation stays attached to its word."""
    return len(text.split())


@dataclass(frozen=True)
class Sentence:
    meeting_id: str
    idx: int
    text: str
    speaker: Optional[str] = None

    @property
    def token_len(self) -> int:
        return count_tokens(self.text)


@dataclass(frozen=True)
class MeetingRecord:
    meeting_id: str
    sentences: tuple[Sentence, ...]
    summaries: Mapping[str, str] = field(default_factory=dict)
    split: str = "train"

    def __post_init__(self):
        if not self.sentences:
            raise ValidationError(f"meeting {self.meeting_id!r} has no sentences")
        for pos, sent in enumerate(self.sentences):
            if sent.idx != pos:
                raise ValidationError(
                    f"meeting {self.meeting_id!r}: sentence idx {sent.idx} at position {pos}"
                )
            if sent.meeting_id != self.meeting_id:
                raise ValidationError(f"sentence {pos} belongs to {sent.meeting_id!r}, not {self.meeting_id!r}")
        if self.split not in SPLITS:
            raise ValidationError(f"unknown split {self.split!r}")

    @property
    def length(self) -> int:
        """Transcript length in whitespace tokens."""
        return sum(s.token_len for s in self.sentences)

    def summary(self, aspect: str) -> Optional[str]:
        """Reference summary for ``aspect``; blank summaries count as absent."""
        text = self.summaries.get(aspect)
        if text is None or not text.strip():
            return None
        return text

    def aspects_present(self, aspects: Iterable[str]) -> list[str]:
        return [a for a in aspects if self.summary(a) is not None]


@dataclass
class CorpusManifest:
    counts: dict[str, int]
    coverage: dict[str, dict[str, int]]
    total: int

    @property
    def coverage_total(self) -> dict[str, int]:
        out: Counter = Counter()
        for per_split in self.coverage.values():
            out.update(per_split)
        return dict(out)

    def to_dict(self) -> dict:
        return {"counts": self.counts, "coverage": self.coverage, "total": self.total}


def make_record(meeting_id, texts, summaries=None, split="train", speakers=None) -> MeetingRecord:
    """Convenience constructor from a plain list of sentence strings."""
    speakers = speakers or [None] * len(texts)
    sents = tuple(Sentence(meeting_id, i, t, spk) for i, (t, spk) in enumerate(zip(texts, speakers)))
    return MeetingRecord(meeting_id, sents, dict(summaries or {}), split)


def serialize_meeting(record: MeetingRecord) -> dict:
    return {
        "meeting_id": record.meeting_id,
        "sentences": [{"idx": s.idx, "speaker": s.speaker, "text": s.text} for s in record.sentences],
        "summaries": dict(record.summaries),
        "split": record.split,
    }


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _parse_sentences(meeting_id, raw, path, offset):
    if not isinstance(raw, list):
        raise ParseError("'sentences' must be a list", path, offset)
    out = []
    for pos, item in enumerate(raw):
        if isinstance(item, str):
            text, speaker = item, None
        elif isinstance(item, Mapping):
            text = item.get("text")
            speaker = item.get("speaker")
            if "idx" in item and item["idx"] != pos:
                raise ParseError(f"sentence idx {item['idx']} out of order (expected {pos})", path, offset)
        else:
            raise ParseError(f"sentence {pos} is neither a string nor an object", path, offset)
        if not isinstance(text, str):
            raise ParseError(f"sentence {pos} has no text", path, offset)
        out.append(Sentence(meeting_id, pos, text, speaker))
    if not out:
        raise ParseError(f"meeting {meeting_id!r} has no sentences", path, offset)
    return tuple(out)


def _parse_summaries(obj, aspects, path):
    raw = obj.get("summaries")
    if raw is None:
        # flat layout: aspect keys at top level
        raw = {k: v for k, v in obj.items() if k.lower() in _ASPECT_ALIASES}
    if not isinstance(raw, Mapping):
        raise ParseError("'summaries' must be an object", path)
    out = {}
    for key, text in raw.items():
        aspect = _ASPECT_ALIASES.get(key.lower(), key)
        if aspect not in aspects:
            logger.warning("%s: dropping summary for undeclared aspect %r", path, key)
            continue
        if isinstance(text, list):
            text = " ".join(str(t) for t in text)
        if text is None:
            continue
        if not isinstance(text, str):
            raise ParseError(f"summary {key!r} is not text", path)
        out[aspect] = text
    return out


def _meeting_from_obj(obj, aspects, path, offset=None):
    if not isinstance(obj, Mapping):
        raise ParseError("meeting entry is not a JSON object", path, offset)
    meeting_id = obj.get("meeting_id", obj.get("id"))
    if not isinstance(meeting_id, str) or not meeting_id:
        raise ParseError("missing 'meeting_id'", path, offset)
    raw_sents = obj.get("sentences", obj.get("transcript"))
    if raw_sents is None:
        raise ParseError(f"meeting {meeting_id!r} has no 'sentences'", path, offset)
    sents = _parse_sentences(meeting_id, raw_sents, path, offset)
    summaries = _parse_summaries(obj, aspects, path)
    split = obj.get("split")
    return meeting_id, sents, summaries, split


def _iter_source(source_dir: Path, fmt: str, aspects):
    if fmt == "generic-jsonl":
        files = [source_dir] if source_dir.is_file() else sorted(source_dir.rglob("*.jsonl"))
        for f in files:
            with f.open(encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    if not line.strip():
                        continue
                    try:
                        obj = json.loads(line)
                    except json.JSONDecodeError as exc:
                        raise ParseError(f"invalid JSON ({exc.msg})", f, lineno) from exc
                    yield _meeting_from_obj(obj, aspects, f, lineno)
        return
    files = [source_dir] if source_dir.is_file() else sorted(
        p for p in source_dir.rglob("*.json") if p.name != "manifest.json"
    )
    for f in files:
        try:
            obj = json.loads(f.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", f, exc.pos) from exc
        yield _meeting_from_obj(obj, aspects, f)


def normalize_split_spec(split_spec) -> dict[str, str]:
    """Accept ``{split: [ids]}`` or ``{id: split}`` and return ``{id: split}``."""
    if split_spec is None:
        return {}
    if isinstance(split_spec, (str, Path)):
        split_spec = read_json(split_spec)
    out: dict[str, str] = {}
    for key, value in split_spec.items():
        if isinstance(value, list) and key.lower() in _SPLIT_ALIASES:
            split = _SPLIT_ALIASES[key.lower()]
            for mid in value:
                if mid in out and out[mid] != split:
                    raise ConfigurationError(f"meeting {mid!r} assigned to both {out[mid]!r} and {split!r}")
                out[mid] = split
        elif isinstance(value, str):
            if value.lower() not in _SPLIT_ALIASES:
                raise ConfigurationError(f"unknown split {value!r} for meeting {key!r}")
            out[key] = _SPLIT_ALIASES[value.lower()]
        else:
            raise ConfigurationError(f"cannot interpret split entry {key!r}: {value!r}")
    return out


def ingest_corpus(
    source_dir,
    format: str = "ami-json",
    split_spec=None,
    aspects: Sequence[str] = DEFAULT_ASPECTS,
    default_split: Optional[str] = None,
) -> list[MeetingRecord]:
    """Parse a corpus export into MeetingRecords in transcript order.

    ``split_spec`` maps meeting ids to splits.  When omitted, each meeting must
    carry its own ``split`` field (as normalized corpora do) or
    ``default_split`` is used, e.g. ``"test"`` for the ICSI test set.
    """
    if format not in FORMATS:
        raise ConfigurationError(f"unknown corpus format {format!r}; expected one of {FORMATS}")
    source_dir = Path(source_dir)
    if not source_dir.exists():
        raise ParseError("source does not exist", source_dir)
    splits = normalize_split_spec(split_spec)
    records: list[MeetingRecord] = []
    seen: set[str] = set()
    for meeting_id, sents, summaries, own_split in _iter_source(source_dir, format, tuple(aspects)):
        if meeting_id in seen:
            raise IntegrityError(f"duplicate meeting_id {meeting_id!r}")
        seen.add(meeting_id)
        if splits:
            if meeting_id not in splits:
                raise ConfigurationError(f"meeting {meeting_id!r} missing from split assignment")
            split = splits[meeting_id]
        elif own_split is not None:
            split = _SPLIT_ALIASES.get(str(own_split).lower())
            if split is None:
                raise ParseError(f"unknown split {own_split!r} for {meeting_id!r}", source_dir)
        elif default_split is not None:
            split = default_split
        else:
            raise ConfigurationError(f"no split assignment for meeting {meeting_id!r}")
        records.append(MeetingRecord(meeting_id, sents, summaries, split))
    if not records:
        raise ParseError("no meetings found", source_dir)
    extra = set(splits) - seen
    if extra:
        logger.warning("split assignment names %d meetings absent from the source", len(extra))
    return records


def load_corpus(corpus_dir, aspects: Sequence[str] = DEFAULT_ASPECTS) -> list[MeetingRecord]:
    """Read a normalized corpus directory written by :func:`write_corpus`."""
    return ingest_corpus(corpus_dir, "ami-json", None, aspects)


def corpus_stats(records: Sequence[MeetingRecord], aspects: Sequence[str] = DEFAULT_ASPECTS) -> CorpusManifest:
    if not records:
        raise EmptyCorpusError("corpus_stats needs at least one meeting")
    counts: Counter = Counter()
    coverage: dict[str, Counter] = {}
    for rec in records:
        counts[rec.split] += 1
        cov = coverage.setdefault(rec.split, Counter())
        for a in aspects:
            if rec.summary(a) is not None:
                cov[a] += 1
    order = [s for s in SPLITS if s in counts]
    return CorpusManifest(
        counts={s: counts[s] for s in order},
        coverage={s: {a: coverage[s][a] for a in aspects if coverage[s][a]} for s in order},
        total=len(records),
    )


def write_corpus(records: Sequence[MeetingRecord], out_dir, aspects: Sequence[str] = DEFAULT_ASPECTS) -> CorpusManifest:
    """Write ``out_dir/{split}/{meeting_id}.json`` plus ``manifest.json``."""
    out_dir = Path(out_dir)
    ids = Counter(r.meeting_id for r in records)
    dup = [m for m, c in ids.items() if c > 1]
    if dup:
        raise IntegrityError(f"duplicate meeting ids: {dup[:5]}")
    for rec in records:
        write_json(out_dir / rec.split / f"{rec.meeting_id}.json", serialize_meeting(rec))
    manifest = corpus_stats(records, aspects)
    write_json(out_dir / "manifest.json", manifest.to_dict())
    return manifest
