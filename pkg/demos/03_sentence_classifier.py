"""Train the aspect relevance classifier on pseudo labels and score it."""

from __future__ import annotations

from aspectsum.classifier import ClassifierConfig, predict_labels, score_classifier, train_classifier
from aspectsum.dataset import FilterStrategy, apply_filter_strategy, build_aspectsent
from aspectsum.embedding import EmbeddingBackendSpec
from aspectsum.labeling import LabelerConfig, label_corpus
from aspectsum.synthetic import make_synthetic_corpus

records = make_synthetic_corpus(30, seed=3)
labeled = label_corpus(records, LabelerConfig(alpha=0.46), EmbeddingBackendSpec())
examples, stats = build_aspectsent(labeled, records)
print(stats.render())

test = [e for e in examples if e.split == "test"]
cfg = ClassifierConfig(max_epochs=15, batch_size=16, learning_rate=0.05)

# filtertrain drops train sentences relevant to no aspect, so the model sees
# few negatives and over-predicts; keeping them gives a calibrated model
for strategy in (FilterStrategy("nofiltering"), FilterStrategy("filtertrain")):
    kept = apply_filter_strategy(examples, strategy)
    train = [e for e in kept if e.split == "train"]
    val = [e for e in kept if e.split == "val"]
    model, log = train_classifier(train, val, cfg)
    print(f"\n{strategy.label}: {len(train)} train rows, best epoch {log.best_epoch}, val micro-F1 {log.best_val_micro_f1:.3f}")
    for threshold in (0.5, 0.3):
        preds = predict_labels(model, [e.text for e in test], threshold)
        report = score_classifier([lv for _, lv in preds], [e.labels for e in test])
        print(f"threshold {threshold}")
        print(report.render())
