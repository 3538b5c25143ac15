"""Train the small copy model on filtered documents and score it with ROUGE."""

from __future__ import annotations

from aspectsum.embedding import EmbeddingBackendSpec
from aspectsum.rouge import evaluate_run, rouge_score
from aspectsum.selection import OracleFilterConfig, oracle_filter
from aspectsum.summarizer import SummarizerConfig, generate, train_summarizer
from aspectsum.synthetic import make_synthetic_corpus

print(rouge_score("the cat sat", "the cat"))

records = make_synthetic_corpus(24, seed=5)
oracle = OracleFilterConfig(0.46, EmbeddingBackendSpec())
docs = {split: [] for split in ("train", "val", "test")}
for rec in records:
    docs[rec.split].extend(oracle_filter(rec, oracle).values())
print({k: len(v) for k, v in docs.items()})

cfg = SummarizerConfig(backend_id="copy-bigram", learning_rate=0.1, epochs=6, lr_schedule="constant", max_output_tokens=40)
model, log = train_summarizer(docs["train"], docs["val"], cfg)
for e in log.epochs:
    print(f"epoch {e['epoch']}  val loss {e['val_loss']:.3f}")

run = generate(model, docs["test"])
for s in run.summaries[:4]:
    print(f"{s.meeting_id}/{s.aspect}: {s.text}")

table = evaluate_run(run.summaries, [r for r in records if r.split == "test"], name="copy-bigram")
print(table.render())

echo = generate(train_summarizer(docs["train"], [], SummarizerConfig())[0], docs["test"])
print(evaluate_run(echo.summaries, [r for r in records if r.split == "test"], name="echo").render())
