"""Run the full pipeline once per filtering strategy and compare the rows."""

from __future__ import annotations

import json
import tempfile
from pathlib import Path

from aspectsum.corpus import serialize_meeting
from aspectsum.pipeline import PipelineConfig, run_ablation, run_pipeline
from aspectsum.synthetic import make_synthetic_corpus

work = Path(tempfile.mkdtemp(prefix="aspectsum-ablation-"))
raw = work / "raw"
raw.mkdir()
for rec in make_synthetic_corpus(18, seed=2):
    (raw / f"{rec.meeting_id}.json").write_text(json.dumps(serialize_meeting(rec)))

cfg = PipelineConfig.from_dict(
    {
        "source": str(raw),
        "output_root": str(work / "single"),
        "classifier": {"max_epochs": 10, "learning_rate": 0.05},
        "summarizer": {"backend_id": "echo"},
    }
)
manifest = run_pipeline(cfg)
print("run", manifest.run_id, manifest.status, "stages:", manifest.executed)
print("rerun executes:", run_pipeline(cfg).executed)

report = run_ablation(PipelineConfig.from_dict({**cfg.to_dict(), "output_root": str(work / "ablation")}))
print(report.render())
print("artifacts under", work)
