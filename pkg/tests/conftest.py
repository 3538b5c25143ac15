from __future__ import annotations

import json

import pytest

from aspectsum.corpus import serialize_meeting
from aspectsum.embedding import EmbeddingBackendSpec
from aspectsum.synthetic import make_synthetic_corpus


@pytest.fixture
def hashbow():
    return EmbeddingBackendSpec("hash-bow-test", dim=64, normalization="unit-l2")


@pytest.fixture
def smoke_corpus():
    return make_synthetic_corpus(6, seed=0)


def dump_source(records, directory, with_split=True):
    """Write records as one JSON file per meeting, as a raw export would look."""
    directory.mkdir(parents=True, exist_ok=True)
    for rec in records:
        obj = serialize_meeting(rec)
        if not with_split:
            obj.pop("split")
        (directory / f"{rec.meeting_id}.json").write_text(json.dumps(obj), encoding="utf-8")
    return directory


@pytest.fixture
def smoke_source(tmp_path, smoke_corpus):
    return dump_source(smoke_corpus, tmp_path / "raw")


# -- acceptance reporting ----------------------------------------------------

ACCEPTANCE_RESULTS: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[num])
