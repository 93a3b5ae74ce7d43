"""Word-level tokenization and vocabulary management.

The tokenizer is deliberately simple and deterministic: lowercase, split on
whitespace, keep letter runs and digit runs as tokens, and emit every other
character as its own single-character token. The same token stream feeds the
reference language model, the repetition penalties in the decoder, and the
n-gram overlap scores in the evaluator, so all three agree on what a "token"
is.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from collections import Counter
from typing import Iterable, Sequence

UNK_TOKEN = "<unk>"
BOS_TOKEN = "<bos>"
EOS_TOKEN = "<eos>"

UNK_ID = 0
BOS_ID = 1
EOS_ID = 2

RESERVED_TOKENS = (UNK_TOKEN, BOS_TOKEN, EOS_TOKEN)


def tokenize(text: str) -> list[str]:
    """Split text into lowercase word, digit-run, and punctuation tokens.

    Total function: any input (including "") yields a valid token list.
    Letters group into runs, digits group into runs, whitespace separates,
    and every remaining character becomes its own token.
    """
    tokens: list[str] = []
    run: list[str] = []
    run_kind = ""  # "alpha" or "digit" while a run is open

    def flush() -> None:
        nonlocal run_kind
        if run:
            tokens.append("".join(run))
            run.clear()
        run_kind = ""

    for ch in text.lower():
        if ch.isspace():
            flush()
        elif ch.isalpha():
            if run_kind != "alpha":
                flush()
                run_kind = "alpha"
            run.append(ch)
        elif ch.isdigit():
            if run_kind != "digit":
                flush()
                run_kind = "digit"
            run.append(ch)
        else:
            flush()
            tokens.append(ch)
    flush()
    return tokens


def _is_punct_token(token: str) -> bool:
    return len(token) == 1 and not token.isalnum() and not token.isspace()


@dataclass(frozen=True)
class Vocabulary:
    """Immutable token/id bijection with fixed reserved ids 0, 1, 2.

    Reserved ids stay constant across builds so serialized models remain
    portable. Corpus text can never produce the reserved token strings
    because the tokenizer splits "<unk>" into "<", "unk", ">".
    """

    tokens: tuple[str, ...]
    min_count: int = 1
    _ids: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.tokens[:3] != RESERVED_TOKENS:
            raise ValueError("vocabulary must start with <unk>, <bos>, <eos>")
        ids = {tok: i for i, tok in enumerate(self.tokens)}
        if len(ids) != len(self.tokens):
            raise ValueError("duplicate token in vocabulary")
        object.__setattr__(self, "_ids", ids)

    def __len__(self) -> int:
        return len(self.tokens)

    def id_for(self, token: str) -> int:
        return self._ids.get(token, UNK_ID)

    def token_for(self, idx: int) -> str:
        if not 0 <= idx < len(self.tokens):
            raise ValueError(f"token id {idx} out of range for vocabulary of size {len(self.tokens)}")
        return self.tokens[idx]

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def save(self, path) -> None:
        """Write one token per line; line number equals id."""
        with open(path, "w", encoding="utf-8", newline="\n") as fp:
            for tok in self.tokens:
                fp.write(tok + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, "r", encoding="utf-8") as fp:
            tokens = tuple(line.rstrip("\n") for line in fp)
        if len(tokens) < 3 or tokens[:3] != RESERVED_TOKENS:
            raise ValueError(f"{path}: not a vocabulary file (missing reserved header lines)")
        return cls(tokens=tokens)


def build_vocab(corpora: Iterable[Sequence[str]], min_count: int = 1) -> Vocabulary:
    """Build a vocabulary from token lists.

    Tokens with total frequency >= min_count are kept, ordered by
    descending frequency then lexicographically, after the three reserved
    slots. The ordering is stable, so identical input produces a
    byte-identical serialized vocabulary.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: Counter[str] = Counter()
    for tokens in corpora:
        counts.update(tokens)
    for reserved in RESERVED_TOKENS:
        counts.pop(reserved, None)
    kept = sorted(
        (tok for tok, c in counts.items() if c >= min_count),
        key=lambda tok: (-counts[tok], tok),
    )
    return Vocabulary(tokens=RESERVED_TOKENS + tuple(kept), min_count=min_count)


def encode(vocab: Vocabulary, tokens: Sequence[str]) -> list[int]:
    """Map tokens to ids; unknown tokens map to UNK_ID."""
    return [vocab.id_for(tok) for tok in tokens]


def decode(vocab: Vocabulary, ids: Sequence[int]) -> str:
    """Render ids back to text.

    Tokens join with single spaces except punctuation tokens, which attach
    to the preceding token. BOS and EOS are omitted. Raises ValueError for
    ids outside [0, len(vocab)).
    """
    parts: list[str] = []
    for idx in ids:
        token = vocab.token_for(idx)
        if idx in (BOS_ID, EOS_ID):
            continue
        if _is_punct_token(token) and parts:
            parts[-1] += token
        else:
            parts.append(token)
    return " ".join(parts)
