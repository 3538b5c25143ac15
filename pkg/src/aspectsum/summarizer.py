"""One sequence-to-sequence summarizer shared by every aspect.

Backends (``SummarizerConfig.backend_id``):

``echo``
    Returns the document body (the merged sentences without the aspect
    token).  No parameters; useful for smoke runs and extractive baselines.
``leading-token``
    Returns the first token of the input.  Diagnostic: it shows which aspect
    token reached the model.
``copy-bigram``
    Tiny trainable model scored as
    ``B[prev, next] + w_in * [next in source] + w_adj * [(prev, next) adjacent in source]``
    and trained with token-level cross entropy.  Cheap enough for CPU tests,
    and expressive enough to learn copying.
``hf:<model name or path>``
    A HuggingFace ``AutoModelForSeq2SeqLM`` (e.g. ``hf:facebook/bart-large``),
    fine-tuned with Adam and a warmup/decay schedule.  Requires torch and
    transformers.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import BackendError, ValidationError
from .jsonio import read_json, write_json
from .optim import Adam, warmup_linear_decay
from .selection import AspectFilteredDoc

logger = logging.getLogger(__name__)

BOS, EOS, UNK = "<s>", "</s>", "<unk>"
NA_SENTINEL = "NA."
BART_VOCAB_SIZE = 50265


@dataclass(frozen=True)
class SummarizerConfig:
    backend_id: str = "echo"
    learning_rate: float = 5e-5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    lr_schedule: str = "warmup-linear-decay"
    warmup_frac: float = 0.1
    beam_size: int = 4
    max_input_tokens: int = 1024
    max_output_tokens: int = 256
    epochs: int = 3
    batch_size: int = 4
    max_vocab: int = 5000
    vocab_size: Optional[int] = BART_VOCAB_SIZE
    seed: int = 0

    def __post_init__(self):
        if self.beam_size < 1:
            raise ValidationError("beam_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.max_input_tokens < 1 or self.max_output_tokens < 1:
            raise ValidationError("token limits must be positive")
        if self.lr_schedule not in ("warmup-linear-decay", "constant"):
            raise ValidationError(f"unknown lr_schedule {self.lr_schedule!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "SummarizerConfig":
        return cls(**d)


@dataclass(frozen=True)
class GeneratedSummary:
    meeting_id: str
    aspect: str
    text: str
    fallback_input: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "GeneratedSummary":
        return cls(d["meeting_id"], d["aspect"], d["text"], bool(d.get("fallback_input", False)))


@dataclass
class GenerationRun:
    summaries: list[GeneratedSummary]
    failures: list[dict] = field(default_factory=list)

    def __iter__(self):
        return iter(self.summaries)

    def __len__(self):
        return len(self.summaries)


@dataclass
class SummarizerLog:
    epochs: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    truncated_docs: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def truncate_tokens(text: str, limit: int) -> tuple[str, bool]:
    toks = text.split()
    if len(toks) <= limit:
        return text, False
    return " ".join(toks[:limit]), True


def strip_aspect_token(tokens: list[str]) -> list[str]:
    if tokens and tokens[0].startswith("<asp:") and tokens[0].endswith(">"):
        return tokens[1:]
    return tokens


# ---------------------------------------------------------------------------
# beam search
# ---------------------------------------------------------------------------


def beam_search(
    step: Callable[[list[str]], tuple[list[str], np.ndarray]],
    beam_size: int,
    max_len: int,
    eos: str = EOS,
) -> list[str]:
    """Generic beam search over string tokens.

    ``step(prefix)`` returns candidate tokens and their log-probabilities.
    Finished hypotheses are ranked by mean log-probability per token; ties go
    to the earlier-found hypothesis, so decoding is deterministic. Search
    continues until no live beam could still overtake the best finished one.
    """
    beams: list[tuple[float, list[str]]] = [(0.0, [])]
    finished: list[tuple[float, list[str]]] = []
    for _ in range(max_len):
        expansions = []
        for score, prefix in beams:
            cands, logp = step(prefix)
            top = np.argsort(-logp, kind="stable")[:beam_size]
            for j in top:
                expansions.append((score + float(logp[j]), prefix + [cands[j]]))
        expansions.sort(key=lambda e: -e[0])
        beams = []
        for score, seq in expansions:
            if seq[-1] == eos:
                finished.append((score / len(seq), seq[:-1]))
            else:
                beams.append((score, seq))
            if len(beams) == beam_size:
                break
        if not beams:
            break
        # A live beam's normalized score can never exceed score / max_len,
        # so stop once no live beam can beat the best finished hypothesis.
        if finished and max(f[0] for f in finished) >= beams[0][0] / max_len:
            break
    if not finished:
        finished = [(s / max(1, len(seq)), seq) for s, seq in beams]
    best = max(finished, key=lambda f: f[0])
    return best[1]


# ---------------------------------------------------------------------------
# backends
# ---------------------------------------------------------------------------


class SummarizerBackend:
    backend_id = "base"

    def fit(self, train_docs, val_docs, cfg, log: SummarizerLog) -> None:
        pass

    def generate_one(self, doc: AspectFilteredDoc, cfg: SummarizerConfig) -> str:
        raise NotImplementedError

    def save(self, out_dir: Path) -> None:
        pass

    def load(self, model_dir: Path) -> None:
        pass


class EchoBackend(SummarizerBackend):
    backend_id = "echo"

    def generate_one(self, doc, cfg):
        return truncate_tokens(doc.body, cfg.max_output_tokens)[0]


class LeadingTokenBackend(SummarizerBackend):
    backend_id = "leading-token"

    def generate_one(self, doc, cfg):
        toks = doc.text.split()
        return toks[0] if toks else ""


class CopyBigramBackend(SummarizerBackend):
    """Bigram language model with source-membership and source-adjacency features."""

    backend_id = "copy-bigram"

    def __init__(self):
        self.vocab: list[str] = [UNK, BOS, EOS]
        self.index = {t: i for i, t in enumerate(self.vocab)}
        self.params: dict[str, np.ndarray] = {}

    # -- features -----------------------------------------------------------
    def _id(self, tok: str) -> int:
        return self.index.get(tok, 0)

    def _context(self, doc, cfg):
        src = truncate_tokens(doc.text, cfg.max_input_tokens)[0].split()
        cands = sorted(set(self.vocab) | set(src))
        cand_ids = np.array([self._id(c) for c in cands])
        pos = {c: i for i, c in enumerate(cands)}
        in_src = np.zeros(len(cands))
        in_src[[pos[t] for t in src]] = 1.0
        ext = [BOS, *src, EOS]
        succ: dict[str, list[int]] = {}
        for a, b in zip(ext, ext[1:]):
            succ.setdefault(a, []).append(pos[b])
        return cands, cand_ids, pos, in_src, succ

    def _scores(self, prev, ctx):
        cands, cand_ids, _, in_src, succ = ctx
        adj = np.zeros(len(cands))
        adj[succ.get(prev, [])] = 1.0
        p = self.params
        s = p["bigram"][self._id(prev), cand_ids] + p["w_in"][0] * in_src + p["w_adj"][0] * adj
        return s, adj

    @staticmethod
    def _log_softmax(s):
        m = s.max()
        return s - m - math.log(np.exp(s - m).sum())

    def _doc_loss(self, doc, cfg, grads=None):
        ctx = self._context(doc, cfg)
        cands, cand_ids, pos, in_src, _ = ctx
        target = [*doc.target_summary.split()[: cfg.max_output_tokens], EOS]
        prev, total = BOS, 0.0
        for tok in target:
            s, adj = self._scores(prev, ctx)
            logp = self._log_softmax(s)
            j = pos.get(tok, pos[UNK])
            total -= logp[j]
            if grads is not None:
                d = np.exp(logp)
                d[j] -= 1.0
                np.add.at(grads["bigram"][self._id(prev)], cand_ids, d)
                grads["w_in"][0] += d @ in_src
                grads["w_adj"][0] += d @ adj
            prev = tok
        return total, len(target)

    def mean_loss(self, docs, cfg) -> float:
        tot = n = 0
        for doc in docs:
            loss, k = self._doc_loss(doc, cfg)
            tot, n = tot + loss, n + k
        return tot / max(1, n)

    # -- training -----------------------------------------------------------
    def fit(self, train_docs, val_docs, cfg, log):
        from collections import Counter

        counts = Counter(t for d in train_docs for t in d.target_summary.split())
        extra = [t for t, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])) if t not in self.index]
        self.vocab += extra[: max(0, cfg.max_vocab - len(self.vocab))]
        self.index = {t: i for i, t in enumerate(self.vocab)}
        V = len(self.vocab)
        self.params = {"bigram": np.zeros((V, V)), "w_in": np.zeros(1), "w_adj": np.zeros(1)}
        opt = Adam(self.params, lr=cfg.learning_rate, beta1=cfg.adam_beta1, beta2=cfg.adam_beta2)
        rng = np.random.default_rng(cfg.seed)
        steps_per_epoch = math.ceil(len(train_docs) / cfg.batch_size)
        total_steps = steps_per_epoch * cfg.epochs
        best_val, best = math.inf, {k: v.copy() for k, v in self.params.items()}
        step = 0
        for epoch in range(cfg.epochs):
            order = rng.permutation(len(train_docs))
            train_tot = train_n = 0
            for start in range(0, len(order), cfg.batch_size):
                grads = {k: np.zeros_like(v) for k, v in self.params.items()}
                ntok = 0
                for i in order[start : start + cfg.batch_size]:
                    loss, k = self._doc_loss(train_docs[i], cfg, grads)
                    train_tot, train_n, ntok = train_tot + loss, train_n + k, ntok + k
                scale = 1.0 if cfg.lr_schedule == "constant" else warmup_linear_decay(step, total_steps, cfg.warmup_frac)
                opt.step({k: g / max(1, ntok) for k, g in grads.items()}, lr_scale=scale)
                step += 1
            val_loss = self.mean_loss(val_docs, cfg)
            improved = bool(val_loss < best_val)
            if improved:
                best_val, log.best_epoch = val_loss, epoch
                best = {k: v.copy() for k, v in self.params.items()}
            log.epochs.append(
                {"epoch": epoch, "train_loss": train_tot / max(1, train_n), "val_loss": val_loss, "selected": improved}
            )
        self.params.update(best)

    def generate_one(self, doc, cfg):
        ctx = self._context(doc, cfg)
        cands = ctx[0]

        def step(prefix):
            prev = prefix[-1] if prefix else BOS
            s, _ = self._scores(prev, ctx)
            return cands, self._log_softmax(s)

        toks = beam_search(step, cfg.beam_size, cfg.max_output_tokens + 1)
        return " ".join(strip_aspect_token(toks))

    def save(self, out_dir):
        write_json(out_dir / "vocab.json", self.vocab)
        np.save(out_dir / "bigram.npy", self.params["bigram"])
        write_json(out_dir / "scalars.json", {"w_in": float(self.params["w_in"][0]), "w_adj": float(self.params["w_adj"][0])})

    def load(self, model_dir):
        self.vocab = read_json(model_dir / "vocab.json")
        self.index = {t: i for i, t in enumerate(self.vocab)}
        sc = read_json(model_dir / "scalars.json")
        self.params = {
            "bigram": np.load(model_dir / "bigram.npy"),
            "w_in": np.array([sc["w_in"]]),
            "w_adj": np.array([sc["w_adj"]]),
        }


class HFSeq2SeqBackend(SummarizerBackend):
    """HuggingFace seq2seq model; aspect tokens are added to the vocabulary."""

    def __init__(self, backend_id: str):
        self.backend_id = backend_id
        self.name = backend_id.split(":", 1)[1]
        self.model = None
        self.tokenizer = None

    def _load(self, name_or_path, special_tokens=()):
        try:
            import torch  # noqa: F401
            from transformers import AutoModelForSeq2SeqLM, AutoTokenizer
        except ImportError as exc:
            raise BackendError(f"{self.backend_id}: torch/transformers not installed") from exc
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(name_or_path)
            self.model = AutoModelForSeq2SeqLM.from_pretrained(name_or_path)
        except Exception as exc:  # noqa: BLE001 - hub/IO errors surface as backend errors
            raise BackendError(f"cannot load {name_or_path!r}: {exc}") from exc
        new = [t for t in special_tokens if t not in self.tokenizer.get_vocab()]
        if new:
            self.tokenizer.add_special_tokens({"additional_special_tokens": sorted(new)})
            self.model.resize_token_embeddings(len(self.tokenizer))

    def _batch(self, docs, cfg, with_labels=True):
        enc = self.tokenizer(
            [d.text for d in docs], max_length=cfg.max_input_tokens, truncation=True, padding=True, return_tensors="pt"
        )
        if with_labels:
            lab = self.tokenizer(
                text_target=[d.target_summary for d in docs],
                max_length=cfg.max_output_tokens,
                truncation=True,
                padding=True,
                return_tensors="pt",
            )["input_ids"]
            lab[lab == self.tokenizer.pad_token_id] = -100
            enc["labels"] = lab
        return enc

    def _val_loss(self, docs, cfg):
        import torch

        self.model.eval()
        tot = n = 0
        with torch.no_grad():
            for i in range(0, len(docs), cfg.batch_size):
                out = self.model(**self._batch(docs[i : i + cfg.batch_size], cfg))
                k = len(docs[i : i + cfg.batch_size])
                tot, n = tot + float(out.loss) * k, n + k
        return tot / max(1, n)

    def fit(self, train_docs, val_docs, cfg, log):
        import copy

        import torch

        torch.manual_seed(cfg.seed)
        tokens = sorted({d.special_token for d in [*train_docs, *val_docs]})
        self._load(self.name, tokens)
        opt = torch.optim.Adam(self.model.parameters(), lr=cfg.learning_rate, betas=(cfg.adam_beta1, cfg.adam_beta2))
        steps_per_epoch = math.ceil(len(train_docs) / cfg.batch_size)
        total = steps_per_epoch * cfg.epochs
        sched = torch.optim.lr_scheduler.LambdaLR(
            opt, lambda s: 1.0 if cfg.lr_schedule == "constant" else warmup_linear_decay(s, total, cfg.warmup_frac)
        )
        rng = np.random.default_rng(cfg.seed)
        best_val, best_state = math.inf, None
        for epoch in range(cfg.epochs):
            self.model.train()
            order = rng.permutation(len(train_docs))
            tot = 0.0
            for i in range(0, len(order), cfg.batch_size):
                batch = [train_docs[j] for j in order[i : i + cfg.batch_size]]
                loss = self.model(**self._batch(batch, cfg)).loss
                loss.backward()
                opt.step()
                sched.step()
                opt.zero_grad()
                tot += loss.item() * len(batch)
            val = self._val_loss(val_docs, cfg)
            improved = bool(val < best_val)
            if improved:
                best_val, log.best_epoch = val, epoch
                best_state = copy.deepcopy(self.model.state_dict())
            log.epochs.append({"epoch": epoch, "train_loss": tot / len(train_docs), "val_loss": val, "selected": improved})
        if best_state is not None:
            self.model.load_state_dict(best_state)

    def generate_one(self, doc, cfg):
        import torch

        if self.model is None:
            self._load(self.name)
        self.model.eval()
        enc = self._batch([doc], cfg, with_labels=False)
        with torch.no_grad():
            out = self.model.generate(**enc, num_beams=cfg.beam_size, max_new_tokens=cfg.max_output_tokens, do_sample=False)
        text = self.tokenizer.decode(out[0], skip_special_tokens=False)
        for tok in self.tokenizer.all_special_tokens:
            if not tok.startswith("<asp:"):
                text = text.replace(tok, " ")
        return " ".join(strip_aspect_token(text.split()))

    def save(self, out_dir):
        if self.model is not None:
            self.model.save_pretrained(out_dir / "hf")
            self.tokenizer.save_pretrained(out_dir / "hf")

    def load(self, model_dir):
        if (model_dir / "hf").exists():
            self._load(str(model_dir / "hf"))


_BACKENDS: dict[str, Callable[[], SummarizerBackend]] = {
    "echo": EchoBackend,
    "leading-token": LeadingTokenBackend,
    "copy-bigram": CopyBigramBackend,
}


def make_backend(backend_id: str) -> SummarizerBackend:
    if backend_id in _BACKENDS:
        return _BACKENDS[backend_id]()
    if backend_id.startswith("hf:"):
        return HFSeq2SeqBackend(backend_id)
    raise BackendError(f"unknown summarizer backend {backend_id!r}")


def register_backend(backend_id: str, factory: Callable[[], SummarizerBackend]) -> None:
    _BACKENDS[backend_id] = factory


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


class SummarizerModel:
    def __init__(self, cfg: SummarizerConfig, backend: SummarizerBackend, special_tokens: Sequence[str] = ()):
        self.cfg = cfg
        self.backend = backend
        self.special_tokens = tuple(special_tokens)

    def save(self, out_dir) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_json(out_dir / "summarizer.json", {"config": self.cfg.to_dict(), "special_tokens": list(self.special_tokens)})
        self.backend.save(out_dir)
        return out_dir

    @classmethod
    def load(cls, model_dir) -> "SummarizerModel":
        model_dir = Path(model_dir)
        meta = read_json(model_dir / "summarizer.json")
        cfg = SummarizerConfig.from_dict(meta["config"])
        backend = make_backend(cfg.backend_id)
        backend.load(model_dir)
        return cls(cfg, backend, meta.get("special_tokens", ()))


def _prepare(docs, cfg, log=None):
    out = []
    for d in docs:
        text, cut = truncate_tokens(d.text, cfg.max_input_tokens)
        if cut and log is not None:
            log.truncated_docs += 1
        out.append(d if not cut else AspectFilteredDoc(**{**d.__dict__, "text": text}))
    return out


def train_summarizer(
    train_docs: Sequence[AspectFilteredDoc],
    val_docs: Sequence[AspectFilteredDoc],
    cfg: SummarizerConfig,
    out_dir=None,
) -> tuple[SummarizerModel, SummarizerLog]:
    """Train one model on the docs of every aspect jointly."""
    if not train_docs:
        raise ValidationError("no training documents")
    for d in [*train_docs, *val_docs]:
        if d.target_summary is None:
            raise ValidationError(f"doc {d.meeting_id}/{d.aspect} has no target summary")
    log = SummarizerLog()
    train_docs = _prepare(train_docs, cfg, log)
    val_docs = _prepare(val_docs, cfg, log)
    if log.truncated_docs:
        logger.info("truncated %d documents to %d tokens", log.truncated_docs, cfg.max_input_tokens)
    backend = make_backend(cfg.backend_id)
    backend.fit(list(train_docs), list(val_docs), cfg, log)
    tokens = sorted({d.special_token for d in train_docs})
    model = SummarizerModel(cfg, backend, tokens)
    if out_dir is not None:
        model.save(out_dir)
        write_json(Path(out_dir) / "training_log.json", log.to_dict())
    return model, log


def generate(model: SummarizerModel, docs: Sequence[AspectFilteredDoc], cfg: Optional[SummarizerConfig] = None) -> GenerationRun:
    """Summarize every doc; a failing doc is recorded and skipped."""
    cfg = cfg or model.cfg
    run = GenerationRun([])
    for doc in _prepare(docs, cfg):
        try:
            text = model.backend.generate_one(doc, cfg).strip()
        except Exception as exc:  # noqa: BLE001 - isolate per-doc failures
            logger.warning("generation failed for %s/%s: %s", doc.meeting_id, doc.aspect, exc)
            run.failures.append({"meeting_id": doc.meeting_id, "aspect": doc.aspect, "error": str(exc)})
            continue
        run.summaries.append(GeneratedSummary(doc.meeting_id, doc.aspect, text or NA_SENTINEL, doc.fallback_used))
    return run
