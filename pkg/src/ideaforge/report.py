"""Figure rendering for CLI reports.

Each function draws one PNG next to the delimited output its command
prints: the training loss curve for `lm train`, corpus composition for
`corpus stats`, and the novelty/relevance scatter for `evaluate`. All
rendering uses the Agg backend so it works headless.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .corpus import CorpusStats
from .evaluator import ConceptCandidate
from .reference_lm import TrainingTrace


def save_loss_curve(trace: TrainingTrace, path) -> str:
    passes = [p for p, _ in trace.entries]
    losses = [nll for _, nll in trace.entries]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(passes, losses, marker="o", color="#1f6f8b")
    ax.set_xlabel("training pass")
    ax.set_ylabel("avg NLL per token")
    ax.set_title("Reference LM training loss")
    ax.set_xticks(passes)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def save_corpus_stats(stats: CorpusStats, path) -> str:
    fig, (left, right) = plt.subplots(1, 2, figsize=(11, 4.5))

    categories = sorted(stats.by_category, key=stats.by_category.get, reverse=True)
    counts = [stats.by_category[c] for c in categories]
    left.barh(range(len(categories)), counts, color="#1f6f8b")
    left.set_yticks(range(len(categories)))
    left.set_yticklabels(categories, fontsize=8)
    left.invert_yaxis()
    left.set_xlabel("records")
    left.set_title(f"Categories ({stats.total} records)")

    kinds = sorted(stats.by_kind)
    right.bar(kinds, [stats.by_kind[k] for k in kinds], color="#e07a5f")
    right.set_ylabel("records")
    right.set_title(
        f"Kinds (mean {stats.mean_description_tokens:.1f} tokens/description)"
    )

    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def save_score_scatter(candidates: Sequence[ConceptCandidate], path) -> str:
    scored = [c for c in candidates if c.scores is not None]
    kept = [c for c in scored if c.scores.composite > 0]
    dropped = [c for c in scored if c.scores.composite == 0]
    fig, ax = plt.subplots(figsize=(6, 5))
    if kept:
        ax.scatter(
            [c.scores.novelty for c in kept],
            [c.scores.relevance for c in kept],
            s=[40 + 160 * c.scores.composite for c in kept],
            color="#1f6f8b", alpha=0.75, label="ranked",
        )
    if dropped:
        ax.scatter(
            [c.scores.novelty for c in dropped],
            [c.scores.relevance for c in dropped],
            marker="x", color="#b0413e", alpha=0.8, label="filtered out",
        )
    ax.set_xlim(-0.05, 1.05)
    ax.set_ylim(-0.05, 1.05)
    ax.set_xlabel("novelty")
    ax.set_ylabel("relevance")
    ax.set_title(f"Candidate scores ({len(scored)} evaluated)")
    ax.grid(alpha=0.3)
    if scored:
        ax.legend(loc="lower left")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)
