"""Scoring, flagging and ranking of generated design concepts.

Generation produces a pool; this module decides what survives it. Novelty
is one minus the highest word-4-gram Jaccard overlap against the reference
texts (prompt examples, prior concepts), which directly catches the known
failure mode of echoing a few-shot example. Relevance is a term-frequency
cosine between the candidate and the anchor text (the problem statement or
the target domain) over content words, with a shipped stopword list.
Degenerate text is flagged by repeated 4-grams, and a length window guards
against fragments and runaway text. Every score is deterministic.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, replace
from importlib.resources import files
from typing import Iterable, Optional, Sequence

from .decoder import DecodingParams
from .textkit import tokenize

MODES = ("problem_driven", "analogy")
VERDICTS = ("pending", "accepted", "rejected")

DEFAULT_NGRAM = 4
REPETITION_NGRAM = 4
REPETITION_LIMIT = 3  # a 4-gram seen this many times flags the text


def _load_stopwords() -> frozenset[str]:
    text = files("ideaforge").joinpath("data/stopwords.txt").read_text(encoding="utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


STOPWORDS = _load_stopwords()


@dataclass(frozen=True)
class EvaluationThresholds:
    """Filter settings; the defaults are deliberate, documented choices."""

    novelty_threshold: float = 0.3
    min_tokens: int = 30
    max_tokens: int = 400
    novelty_weight: float = 0.5
    relevance_weight: float = 0.5

    def __post_init__(self) -> None:
        if not 0 <= self.novelty_threshold <= 1:
            raise ValueError("novelty_threshold must lie in [0, 1]")
        if self.min_tokens < 1 or self.max_tokens < self.min_tokens:
            raise ValueError("need 1 <= min_tokens <= max_tokens")
        if self.novelty_weight < 0 or self.relevance_weight < 0:
            raise ValueError("weights must be >= 0")
        if abs(self.novelty_weight + self.relevance_weight - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")


@dataclass(frozen=True)
class EvaluationReport:
    novelty: float
    relevance: float
    repetition_flag: bool
    length_ok: bool
    composite: float

    def __post_init__(self) -> None:
        for name in ("novelty", "relevance", "composite"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class ConceptCandidate:
    """One generated concept with everything needed to audit it later."""

    id: str
    text: str
    mode: str
    inputs: tuple[tuple[str, str], ...]  # (field, value) pairs, e.g. category/problem
    params: Optional[DecodingParams] = None
    backend: Optional[tuple[tuple[str, str], ...]] = None
    scores: Optional[EvaluationReport] = None
    verdict: str = "pending"

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("candidate id must be nonempty")
        if not self.text:
            raise ValueError("candidate text must be nonempty")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")
        object.__setattr__(self, "inputs", tuple(tuple(pair) for pair in self.inputs))
        if self.backend is not None:
            object.__setattr__(self, "backend", tuple(tuple(pair) for pair in self.backend))

    def with_scores(self, scores: EvaluationReport) -> "ConceptCandidate":
        return replace(self, scores=scores)


def ngram_set(text: str, n: int) -> set[tuple[str, ...]]:
    """Distinct word n-grams of the text; empty when fewer than n tokens."""
    if n < 1:
        raise ValueError("n must be >= 1")
    tokens = tokenize(text)
    return {tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)}


def novelty_score(candidate_text: str, references: Sequence[str], n: int = DEFAULT_NGRAM) -> float:
    """1 minus the worst-case n-gram Jaccard overlap with any reference."""
    cand = ngram_set(candidate_text, n)
    if not cand:
        return 0.0  # too short to judge as a concept
    worst = 0.0
    for ref in references:
        ref_set = ngram_set(ref, n)
        union = len(cand | ref_set)
        overlap = len(cand & ref_set) / union if union else 0.0
        worst = max(worst, overlap)
    return 1.0 - worst


def repetition_flag(text: str) -> bool:
    """True when any word 4-gram occurs at least three times."""
    tokens = tokenize(text)
    if len(tokens) < REPETITION_NGRAM:
        return False
    grams = Counter(
        tuple(tokens[i : i + REPETITION_NGRAM])
        for i in range(len(tokens) - REPETITION_NGRAM + 1)
    )
    return any(count >= REPETITION_LIMIT for count in grams.values())


def _content_counts(text: str) -> Counter:
    return Counter(
        tok
        for tok in tokenize(text)
        if tok not in STOPWORDS and any(ch.isalnum() for ch in tok)
    )


def relevance_score(candidate_text: str, anchor_text: str) -> float:
    """Term-frequency cosine over content words, clamped into [0, 1]."""
    cand = _content_counts(candidate_text)
    anchor = _content_counts(anchor_text)
    if not cand or not anchor:
        return 0.0
    dot = sum(cand[w] * anchor[w] for w in cand.keys() & anchor.keys())
    norm = math.sqrt(sum(c * c for c in cand.values())) * math.sqrt(
        sum(c * c for c in anchor.values())
    )
    return min(1.0, max(0.0, dot / norm))


def evaluate(
    candidate_text: str,
    references: Sequence[str],
    anchor_text: str,
    thresholds: EvaluationThresholds = EvaluationThresholds(),
) -> EvaluationReport:
    """Score one candidate; composite is zeroed for any hard-gate failure.

    The gates are repetition, the length window, and novelty below the
    threshold; otherwise composite is the weighted sum of novelty and
    relevance.
    """
    novelty = novelty_score(candidate_text, references)
    relevance = relevance_score(candidate_text, anchor_text)
    repeated = repetition_flag(candidate_text)
    n_tokens = len(tokenize(candidate_text))
    length_ok = thresholds.min_tokens <= n_tokens <= thresholds.max_tokens
    if repeated or not length_ok or novelty < thresholds.novelty_threshold:
        composite = 0.0
    else:
        composite = thresholds.novelty_weight * novelty + thresholds.relevance_weight * relevance
    return EvaluationReport(
        novelty=novelty,
        relevance=relevance,
        repetition_flag=repeated,
        length_ok=length_ok,
        composite=composite,
    )


def evaluate_candidate(
    candidate: ConceptCandidate,
    references: Sequence[str],
    anchor_text: str,
    thresholds: EvaluationThresholds = EvaluationThresholds(),
) -> ConceptCandidate:
    return candidate.with_scores(evaluate(candidate.text, references, anchor_text, thresholds))


def rank_and_filter(
    candidates: Iterable[ConceptCandidate],
    thresholds: EvaluationThresholds = EvaluationThresholds(),
) -> list[ConceptCandidate]:
    """Drop gate failures, order survivors by composite then id.

    Re-running on its own output returns it unchanged, so downstream code
    may call this idempotently.
    """
    kept = []
    for cand in candidates:
        if cand.scores is None:
            raise ValueError(f"candidate {cand.id!r} has not been evaluated")
        r = cand.scores
        if r.repetition_flag or not r.length_ok or r.novelty < thresholds.novelty_threshold:
            continue
        kept.append(cand)
    kept.sort(key=lambda c: (-c.scores.composite, c.id))
    return kept
