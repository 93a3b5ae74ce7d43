"""Generation control over any logit source.

Turns a next-token log-probability function into finished text under the
full set of sampling controls: repetition penalties, temperature, top-k and
top-p filtering, stop strings, and a length limit. Every step is
deterministic given the seed, so two runs with identical inputs produce
byte-identical results on any platform.

Per generated token the pipeline is, in order:

    penalties -> temperature -> top-k -> softmax -> top-p -> sample

Top-p runs after the softmax on purpose: nucleus truncation is defined on
probabilities, and renormalizing a proper distribution keeps the kept-mass
arithmetic exact. Temperatures below 0.01 switch to greedy argmax of the
penalized logits; at that point the filters cannot change the argmax, so
the clamp is exact rather than an approximation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .rng import SplitMix64
from .textkit import EOS_ID, Vocabulary, decode

LogitSource = Callable[[Sequence[int]], np.ndarray]

GREEDY_TEMPERATURE = 0.01
MAX_STOP_SEQUENCES = 4

# Sampling a literal end-of-text marker ends generation just like EOS does.
IMPLICIT_STOP_TOKENS = ("<eos>", "<|endoftext|>")


@dataclass(frozen=True)
class DecodingParams:
    """Validated sampling controls; immutable so results can snapshot it."""

    max_tokens: int = 256
    temperature: float = 1.0
    top_k: int = 0
    top_p: float = 1.0
    presence_penalty: float = 0.0
    frequency_penalty: float = 0.0
    stop: tuple[str, ...] = ()
    seed: int = 0
    n_candidates: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "stop", tuple(self.stop))
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if not self.temperature > 0:
            raise ValueError("temperature must be > 0")
        if self.top_k < 0:
            raise ValueError("top_k must be >= 0 (0 disables it)")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must lie in (0, 1]")
        if self.presence_penalty < 0 or self.frequency_penalty < 0:
            raise ValueError("penalties must be >= 0")
        if len(self.stop) > MAX_STOP_SEQUENCES:
            raise ValueError(f"at most {MAX_STOP_SEQUENCES} stop strings allowed")
        for s in self.stop:
            if not isinstance(s, str) or not s:
                raise ValueError("stop strings must be nonempty")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ValueError("seed must be an integer")
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be >= 1")


@dataclass(frozen=True)
class GenerationResult:
    """One finished sample plus the settings that produced it."""

    text: str
    token_ids: tuple[int, ...]
    finish_reason: str  # "stop" or "length"
    matched_stop: str | None = None
    logprobs: tuple[float, ...] | None = None
    params: DecodingParams | None = None
    raw_response: dict | None = field(default=None, compare=False)


def apply_penalties(
    logits: np.ndarray,
    counts: Sequence[int],
    presence_penalty: float,
    frequency_penalty: float,
) -> np.ndarray:
    """Discourage already-seen tokens: l' = l - pp*[c>0] - fp*c."""
    logits = np.asarray(logits, dtype=np.float64)
    counts = np.asarray(counts)
    if counts.shape != logits.shape:
        raise ValueError(f"counts length {counts.shape} does not match logits {logits.shape}")
    if np.any(counts < 0):
        raise ValueError("counts must be >= 0")
    if presence_penalty == 0 and frequency_penalty == 0:
        return logits
    return logits - presence_penalty * (counts > 0) - frequency_penalty * counts


def apply_temperature(logits: np.ndarray, temperature: float) -> np.ndarray:
    if not temperature > 0:
        raise ValueError("temperature must be > 0")
    if temperature == 1.0:
        return logits
    return np.asarray(logits, dtype=np.float64) / temperature


def top_k_filter(logits: np.ndarray, k: int) -> np.ndarray:
    """Keep the k largest logits (ties -> lower id), set the rest to -inf."""
    if k < 0:
        raise ValueError("k must be >= 0")
    logits = np.asarray(logits, dtype=np.float64)
    if k == 0 or k >= logits.size:
        return logits
    order = np.argsort(-logits, kind="stable")  # stable: lower id wins ties
    out = np.full_like(logits, -np.inf)
    kept = order[:k]
    out[kept] = logits[kept]
    return out


def top_p_filter(probabilities: np.ndarray, p: float) -> np.ndarray:
    """Nucleus truncation over a proper distribution, renormalized.

    Keeps the minimal descending-probability prefix whose mass reaches p
    (ties by lower id, never fewer than one token). When nothing falls
    outside the nucleus the input is returned untouched, so p = 1 is an
    exact identity.
    """
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    probabilities = np.asarray(probabilities, dtype=np.float64)
    total = float(probabilities.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"probabilities must sum to 1, got {total}")
    order = np.argsort(-probabilities, kind="stable")
    csum = np.cumsum(probabilities[order])
    n_keep = max(1, int(np.searchsorted(csum, p, side="left")) + 1)
    n_keep = min(n_keep, probabilities.size)
    dropped = order[n_keep:]
    if not np.any(probabilities[dropped] > 0):
        return probabilities
    kept = order[:n_keep]
    out = np.zeros_like(probabilities)
    out[kept] = probabilities[kept] / csum[n_keep - 1]
    return out


def _softmax(logits: np.ndarray) -> np.ndarray:
    finite = np.isfinite(logits)
    if not np.any(finite):
        raise ValueError("softmax undefined: no finite logits")
    shifted = logits - np.max(logits[finite])
    weights = np.exp(shifted)
    return weights / weights.sum()


def _draw(probabilities: np.ndarray, rng: SplitMix64) -> int:
    """Inverse-CDF draw; zero-probability entries are never selected."""
    # Cap at 1 so rounding overshoot cannot break monotonicity, then pin the
    # final entry so a uniform draw in [0, 1) always lands inside the table.
    cum = np.minimum(np.cumsum(probabilities), 1.0)
    cum[-1] = 1.0
    return int(np.searchsorted(cum, rng.uniform(), side="right"))


def sample_token(logits: np.ndarray, rng: SplitMix64) -> int:
    """Softmax the finite logits and draw one token id."""
    return _draw(_softmax(np.asarray(logits, dtype=np.float64)), rng)


def _first_stop_hit(text: str, stops: Sequence[str]) -> tuple[int, str] | None:
    best: tuple[int, str] | None = None
    for s in stops:
        pos = text.find(s)
        if pos >= 0 and (best is None or pos < best[0]):
            best = (pos, s)
    return best


def generate(
    logit_source: LogitSource,
    prompt_ids: Sequence[int],
    params: DecodingParams,
    vocab: Vocabulary,
) -> GenerationResult:
    """Sample one continuation of the prompt.

    A pure function of (logit_source, prompt, params): the random state is
    created here from params.seed and never shared. Penalty counts cover
    the prompt as well as generated tokens, so few-shot examples in the
    prompt are discouraged from being echoed. Generation ends when the
    decoded continuation contains a stop string (truncated at its first
    character), when EOS or a literal end-of-text token is sampled, or when
    max_tokens is reached. logprobs records, per emitted token, the log of
    its probability under the final post-filter sampling distribution.
    """
    if not isinstance(params, DecodingParams):
        raise TypeError("params must be a DecodingParams")
    prompt_ids = list(prompt_ids)
    if not prompt_ids:
        raise ValueError("prompt must be nonempty")
    size = len(vocab)
    for tok in prompt_ids:
        if not 0 <= tok < size:
            raise ValueError(f"prompt id {tok} out of range for vocabulary of size {size}")

    rng = SplitMix64(params.seed)
    counts = np.zeros(size, dtype=np.int64)
    for tok in prompt_ids:
        counts[tok] += 1
    greedy = params.temperature < GREEDY_TEMPERATURE

    generated: list[int] = []
    logprobs: list[float] = []
    finish_reason = "length"
    matched_stop: str | None = None
    text: str | None = None

    while len(generated) < params.max_tokens:
        logits = np.asarray(logit_source(prompt_ids + generated), dtype=np.float64)
        if logits.shape != (size,):
            raise ValueError(f"logit source returned shape {logits.shape}, expected ({size},)")
        penalized = apply_penalties(logits, counts, params.presence_penalty, params.frequency_penalty)
        if greedy:
            # Filters never remove the top logit, so argmax is exact here.
            next_id = int(np.argmax(penalized))
            logprobs.append(float(np.log(_softmax(penalized)[next_id])))
        else:
            scaled = apply_temperature(penalized, params.temperature)
            filtered = top_k_filter(scaled, params.top_k)
            probs = top_p_filter(_softmax(filtered), params.top_p)
            next_id = _draw(probs, rng)
            logprobs.append(float(np.log(probs[next_id])))
        generated.append(next_id)
        counts[next_id] += 1

        token = vocab.token_for(next_id)
        if next_id == EOS_ID or token in IMPLICIT_STOP_TOKENS:
            finish_reason = "stop"
            matched_stop = token
            break
        if params.stop:
            current = decode(vocab, generated)
            hit = _first_stop_hit(current, params.stop)
            if hit is not None:
                finish_reason = "stop"
                pos, matched_stop = hit
                text = current[:pos]
                break

    if text is None:
        text = decode(vocab, generated)
    return GenerationResult(
        text=text,
        token_ids=tuple(generated),
        finish_reason=finish_reason,
        matched_stop=matched_stop,
        logprobs=tuple(logprobs),
        params=params,
    )
