"""Normalize a raw meeting export and look at the split manifest."""

from __future__ import annotations

import json
import tempfile
from pathlib import Path

from aspectsum.corpus import corpus_stats, ingest_corpus, serialize_meeting, write_corpus
from aspectsum.synthetic import make_synthetic_corpus

work = Path(tempfile.mkdtemp(prefix="aspectsum-demo-"))

# a raw export: one JSON file per meeting, no split field
raw = work / "raw"
raw.mkdir()
meetings = make_synthetic_corpus(10, seed=1, missing={2: ["actions"]})
for rec in meetings:
    obj = serialize_meeting(rec)
    obj.pop("split")
    (raw / f"{rec.meeting_id}.json").write_text(json.dumps(obj))

ids = sorted(r.meeting_id for r in meetings)
splits = {"train": ids[:6], "val": ids[6:8], "test": ids[8:]}

records = ingest_corpus(raw, "ami-json", splits)
first = records[0]
print(f"{first.meeting_id}: {len(first.sentences)} sentences, {first.length} tokens")
for s in first.sentences[:5]:
    print(f"  [{s.idx}] {s.text}")

manifest = write_corpus(records, work / "corpus")
print(json.dumps(manifest.to_dict(), indent=2))
print("coverage over all splits:", corpus_stats(records).coverage_total)
print("written to", work / "corpus")
