"""Two-stage aspect-based summarization of meeting transcripts.

Stage 1 pseudo-labels transcript sentences against per-aspect reference
summaries and trains a multi-label relevance classifier on them.  Stage 2
merges the sentences selected for each aspect behind an aspect token and feeds
them to a single summarizer.
"""

__version__ = "0.1.0"

from .classifier import (
    AspectProbabilities,
    ClassifierConfig,
    ClassifierModel,
    ClassifierReport,
    predict_labels,
    score_classifier,
    train_classifier,
)
from .corpus import (
    DEFAULT_ASPECTS,
    CorpusManifest,
    MeetingRecord,
    Sentence,
    corpus_stats,
    ingest_corpus,
    load_corpus,
    make_record,
    serialize_meeting,
    write_corpus,
)
from .dataset import (
    AspectSentExample,
    AspectSentStats,
    FilterStrategy,
    apply_filter_strategy,
    build_aspectsent,
)
from .embedding import EmbeddingBackendSpec, EmbeddingCache, EmbeddingVector, cosine_similarity, embed_batch
from .labeling import AspectLabelVector, LabelerConfig, label_meeting, label_sentence
from .rouge import ResultTable, RougeScore, evaluate_run, rouge_score
from .selection import (
    AspectFilteredDoc,
    OracleFilterConfig,
    build_summarization_dataset,
    oracle_filter,
    select_for_aspect,
    special_token,
)
from .summarizer import GeneratedSummary, SummarizerConfig, generate, train_summarizer
