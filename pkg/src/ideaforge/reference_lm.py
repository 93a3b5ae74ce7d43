"""Trainable interpolated n-gram language model.

Serves as the local, fully deterministic logit source for the decoder: it
learns next-token distributions by counting and exposes log-probabilities
over the whole vocabulary for any context. Smoothing is additive with
interpolation down to the unigram, which keeps every distribution exactly
normalized and strictly positive, both of which are tested invariants.

Probability of token w after history h (longest suffix of the context with
at most order-1 tokens):

    P1(w)     = (c(w) + a) / (C + a*|V|)
    Pk(w | h) = lam * (c(h, w) + a) / (c(h) + a*|V|) + (1 - lam) * P[k-1](w | tail(h))

Counting conventions: every k-gram with k >= 2 is accumulated over the full
BOS-wrapped sequence, so BOS appears in contexts and EOS as a target. The
unigram table counts only the real tokens between BOS and EOS; sentence
boundary mass enters through the higher orders and through smoothing.
"""

from __future__ import annotations

import io
import json
import math
import struct
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .textkit import BOS_ID, EOS_ID, Vocabulary, build_vocab, encode, tokenize

MAGIC = b"IFLM"
FORMAT_VERSION = 1

DEFAULT_ORDER = 3
DEFAULT_ALPHA = 0.1
DEFAULT_LAMBDA = 0.7


class ModelFormatError(ValueError):
    """Raised when a model file is truncated or not a model file at all."""


@dataclass(frozen=True)
class TrainingTrace:
    """Per-pass average negative log-likelihood over the training data."""

    entries: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        for pass_index, nll in self.entries:
            if not (math.isfinite(nll) and nll > 0):
                raise ValueError(f"pass {pass_index}: average NLL must be finite and positive, got {nll}")

    def to_csv(self) -> str:
        lines = ["pass,avg_nll"]
        lines += [f"{p},{nll:.10f}" for p, nll in self.entries]
        return "\n".join(lines) + "\n"


@dataclass
class NGramModel:
    """Count tables plus smoothing parameters; immutable once trained."""

    vocab: Vocabulary
    order: int = DEFAULT_ORDER
    alpha: float = DEFAULT_ALPHA
    lam: float = DEFAULT_LAMBDA
    # counts[k][context_tuple] = Counter(token_id -> count); the unigram
    # lives at counts[1][()].
    counts: dict[int, dict[tuple[int, ...], Counter]] = field(default_factory=dict)
    trace: TrainingTrace | None = None
    _totals: dict[int, dict[tuple[int, ...], int]] = field(default_factory=dict, repr=False)
    _p1: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if not 0 < self.lam < 1:
            raise ValueError("lambda must lie in (0, 1)")
        if len(self.vocab) < 3:
            raise ValueError("vocabulary too small")
        self._rebuild_totals()

    def _rebuild_totals(self) -> None:
        self._totals = {
            k: {ctx: sum(counter.values()) for ctx, counter in table.items()}
            for k, table in self.counts.items()
        }
        self._p1 = None

    def _unigram_probs(self) -> np.ndarray:
        if self._p1 is None:
            size = len(self.vocab)
            dense = np.zeros(size, dtype=np.float64)
            table = self.counts.get(1, {}).get((), Counter())
            for tok, cnt in table.items():
                dense[tok] = cnt
            total = self._totals.get(1, {}).get((), 0)
            self._p1 = (dense + self.alpha) / (total + self.alpha * size)
        return self._p1

    def _validate_context(self, context: Sequence[int]) -> tuple[int, ...]:
        size = len(self.vocab)
        for tok in context:
            if not 0 <= tok < size:
                raise ValueError(f"context id {tok} out of range for vocabulary of size {size}")
        keep = self.order - 1
        return tuple(context[-keep:]) if keep > 0 else ()

    def prob_vector(self, context: Sequence[int]) -> np.ndarray:
        """Full next-token distribution; exp of next_token_logits."""
        history = self._validate_context(context)
        size = len(self.vocab)
        probs = self._unigram_probs().copy()
        for length in range(1, len(history) + 1):
            ctx = history[-length:]
            k = length + 1
            counter = self.counts.get(k, {}).get(ctx)
            total = self._totals.get(k, {}).get(ctx, 0)
            denom = total + self.alpha * size
            level = np.full(size, self.alpha / denom, dtype=np.float64)
            if counter:
                idx = np.fromiter(counter.keys(), dtype=np.intp, count=len(counter))
                val = np.fromiter(counter.values(), dtype=np.float64, count=len(counter))
                level[idx] += val / denom
            probs = self.lam * level + (1.0 - self.lam) * probs
        return probs

    def next_token_logits(self, context: Sequence[int]) -> np.ndarray:
        """Log-probabilities over the vocabulary given the context."""
        return np.log(self.prob_vector(context))

    def prob(self, token: int, context: Sequence[int]) -> float:
        """Scalar P(token | context) without building the dense vector."""
        history = self._validate_context(context)
        size = len(self.vocab)
        table = self.counts.get(1, {}).get((), Counter())
        total = self._totals.get(1, {}).get((), 0)
        p = (table.get(token, 0) + self.alpha) / (total + self.alpha * size)
        for length in range(1, len(history) + 1):
            ctx = history[-length:]
            k = length + 1
            counter = self.counts.get(k, {}).get(ctx)
            cnt = counter.get(token, 0) if counter else 0
            total_k = self._totals.get(k, {}).get(ctx, 0)
            top = (cnt + self.alpha) / (total_k + self.alpha * size)
            p = self.lam * top + (1.0 - self.lam) * p
        return p


def _validate_sequences(sequences: Sequence[Sequence[int]], vocab_size: int) -> None:
    if not sequences:
        raise ValueError("training set is empty")
    for i, seq in enumerate(sequences):
        if len(seq) < 2 or seq[0] != BOS_ID or seq[-1] != EOS_ID:
            raise ValueError(f"sequence {i} must begin with BOS and end with EOS")
        for tok in seq:
            if not 0 <= tok < vocab_size:
                raise ValueError(f"sequence {i} contains out-of-range id {tok}")


def _accumulate(model: NGramModel, sequences: Sequence[Sequence[int]]) -> None:
    for seq in sequences:
        body = seq[1:-1]  # real tokens, no BOS/EOS
        unigram = model.counts.setdefault(1, {}).setdefault((), Counter())
        unigram.update(body)
        for k in range(2, model.order + 1):
            table = model.counts.setdefault(k, {})
            for j in range(k - 1, len(seq)):
                ctx = tuple(seq[j - k + 1 : j])
                table.setdefault(ctx, Counter())[seq[j]] += 1


def _avg_nll(model: NGramModel, sequences: Sequence[Sequence[int]]) -> float:
    total = 0.0
    n_targets = 0
    for seq in sequences:
        for j in range(1, len(seq)):
            total -= math.log(model.prob(seq[j], seq[:j]))
            n_targets += 1
    return total / n_targets


def train(
    sequences: Sequence[Sequence[int]],
    vocab: Vocabulary,
    order: int = DEFAULT_ORDER,
    alpha: float = DEFAULT_ALPHA,
    lam: float = DEFAULT_LAMBDA,
    passes: int = 1,
) -> tuple[NGramModel, TrainingTrace]:
    """Count k-grams and record a per-pass loss curve.

    Counting needs a single sweep, so the loss curve is produced by growing
    the counted shard: pass i covers the first i/passes of the sequences,
    and after each pass the average NLL of the full training set under the
    current counts is appended to the trace. Later passes therefore see
    better-covered tables and the curve trends down. The returned model
    always holds the counts of the complete training set.
    """
    if passes < 1:
        raise ValueError("passes must be >= 1")
    _validate_sequences(sequences, len(vocab))
    model = NGramModel(vocab=vocab, order=order, alpha=alpha, lam=lam)
    entries: list[tuple[int, float]] = []
    done = 0
    for pass_index in range(1, passes + 1):
        end = len(sequences) * pass_index // passes
        _accumulate(model, sequences[done:end])
        done = end
        model._rebuild_totals()
        entries.append((pass_index, _avg_nll(model, sequences)))
    trace = TrainingTrace(entries=tuple(entries))
    model.trace = trace
    return model, trace


def perplexity(model: NGramModel, sequences: Sequence[Sequence[int]]) -> float:
    """exp(average NLL per token) over held-out BOS/EOS-wrapped sequences."""
    _validate_sequences(sequences, len(model.vocab))
    return math.exp(_avg_nll(model, sequences))


def prepare_sequences(
    texts: Sequence[str], min_count: int = 1
) -> tuple[list[list[int]], Vocabulary]:
    """Tokenize texts, build their vocabulary, wrap each in BOS/EOS ids."""
    token_lists = [tokenize(text) for text in texts]
    vocab = build_vocab(token_lists, min_count=min_count)
    sequences = [[BOS_ID] + encode(vocab, tokens) + [EOS_ID] for tokens in token_lists]
    return sequences, vocab


# ---------------------------------------------------------------------------
# Serialization. The binary format is canonical and byte-deterministic:
# little-endian, fixed widths, contexts and entries written in sorted order.
# A JSON dump is available for debugging; it is not the canonical format.
# ---------------------------------------------------------------------------


def save(model: NGramModel, path) -> None:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<III", FORMAT_VERSION, model.order, len(model.vocab)))
    buf.write(struct.pack("<dd", model.alpha, model.lam))
    entries = model.trace.entries if model.trace else ()
    buf.write(struct.pack("<I", len(entries)))
    for pass_index, nll in entries:
        buf.write(struct.pack("<Id", pass_index, nll))
    for token in model.vocab.tokens:
        raw = token.encode("utf-8")
        buf.write(struct.pack("<H", len(raw)))
        buf.write(raw)
    for k in range(1, model.order + 1):
        table = model.counts.get(k, {})
        buf.write(struct.pack("<Q", len(table)))
        for ctx in sorted(table):
            buf.write(struct.pack(f"<{k - 1}I", *ctx) if k > 1 else b"")
            counter = table[ctx]
            buf.write(struct.pack("<I", len(counter)))
            for tok in sorted(counter):
                buf.write(struct.pack("<IQ", tok, counter[tok]))
    with open(path, "wb") as fp:
        fp.write(buf.getvalue())


def load(path) -> NGramModel:
    with open(path, "rb") as fp:
        data = fp.read()
    view = io.BytesIO(data)

    def read(fmt: str):
        size = struct.calcsize(fmt)
        chunk = view.read(size)
        if len(chunk) != size:
            raise ModelFormatError(f"{path}: truncated model file")
        return struct.unpack(fmt, chunk)

    if view.read(4) != MAGIC:
        raise ModelFormatError(f"{path}: not a model file")
    version, order, vocab_size = read("<III")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unsupported format version {version}")
    alpha, lam = read("<dd")
    (trace_len,) = read("<I")
    entries = tuple((p, nll) for p, nll in (read("<Id") for _ in range(trace_len)))
    tokens = []
    for _ in range(vocab_size):
        (token_len,) = read("<H")
        raw = view.read(token_len)
        if len(raw) != token_len:
            raise ModelFormatError(f"{path}: truncated model file")
        tokens.append(raw.decode("utf-8"))
    vocab = Vocabulary(tokens=tuple(tokens))
    counts: dict[int, dict[tuple[int, ...], Counter]] = {}
    for k in range(1, order + 1):
        (n_contexts,) = read("<Q")
        table: dict[tuple[int, ...], Counter] = {}
        for _ in range(n_contexts):
            ctx = read(f"<{k - 1}I") if k > 1 else ()
            (n_entries,) = read("<I")
            counter = Counter()
            for _ in range(n_entries):
                tok, cnt = read("<IQ")
                counter[tok] = cnt
            table[ctx] = counter
        counts[k] = table
    if view.read(1):
        raise ModelFormatError(f"{path}: trailing bytes after model data")
    model = NGramModel(vocab=vocab, order=order, alpha=alpha, lam=lam, counts=counts)
    model.trace = TrainingTrace(entries=entries) if entries else None
    return model


def save_json(model: NGramModel, path) -> None:
    """Readable dump for inspection; load() only accepts the binary format."""
    doc = {
        "format": "ngram-debug",
        "order": model.order,
        "alpha": model.alpha,
        "lambda": model.lam,
        "vocab": list(model.vocab.tokens),
        "trace": [list(e) for e in (model.trace.entries if model.trace else ())],
        "counts": {
            str(k): {
                " ".join(map(str, ctx)): {str(t): c for t, c in sorted(counter.items())}
                for ctx, counter in sorted(table.items())
            }
            for k, table in sorted(model.counts.items())
        },
    }
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(doc, fp, indent=2, sort_keys=True)
