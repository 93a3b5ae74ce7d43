"""Prompt construction for the two ideation modes.

Problem-driven prompts reuse the exact training-text framing, category name
then problem statement, but leave off the end delimiter so the model keeps
writing the solution. Analogy prompts assemble a few-shot block per bank
example, each introduced by a scaffold sentence naming the source and
target domains, then end with the same scaffold for the queried pair so the
model completes it.

Both builders are pure and byte-deterministic: the same inputs always yield
the same prompt bytes, which is what lets golden files pin them.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from importlib.resources import files
from typing import IO, Iterable, Optional

from .corpus import CorpusFormatError, DelimiterConfig

BANK_FIELDS = ("source_domain", "target_domain", "description", "provenance")
_REQUIRED_BANK_FIELDS = ("source_domain", "target_domain", "description")

# Generation with an analogy prompt should stop before the model invents a
# new few-shot block; this matches the scaffold framing below.
DEFAULT_ANALOGY_STOP = "\nApplying "

DEFAULT_SCAFFOLD_SUFFIX = ":"
DEFAULT_EXAMPLE_SEPARATOR = "\n\n"


class UnknownCategoryWarning(UserWarning):
    """Problem prompt names a category absent from the loaded corpus."""


@dataclass(frozen=True)
class ProblemPrompt:
    category: str
    problem_statement: str

    def __post_init__(self) -> None:
        if not self.category:
            raise ValueError("category must be nonempty")
        if not self.problem_statement:
            raise ValueError("problem statement must be nonempty")


@dataclass(frozen=True)
class AnalogyExample:
    source_domain: str
    target_domain: str
    description: str
    provenance: Optional[str] = None

    def __post_init__(self) -> None:
        for name in _REQUIRED_BANK_FIELDS:
            if not getattr(self, name):
                raise ValueError(f"{name} must be nonempty")


@dataclass(frozen=True)
class AnalogyPrompt:
    examples: tuple[AnalogyExample, ...]
    query_source: str
    query_target: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "examples", tuple(self.examples))
        if not self.examples:
            raise ValueError("at least one example required")
        if not self.query_source or not self.query_target:
            raise ValueError("query source and target must be nonempty")


def scaffold_line(source: str, target: str, suffix: str = DEFAULT_SCAFFOLD_SUFFIX) -> str:
    """The structured sentence naming the domains, lowercased for the model."""
    return f"Applying {source.lower()} to {target.lower()}{suffix}"


def build_problem_prompt(
    prompt: ProblemPrompt,
    delims: DelimiterConfig = DelimiterConfig(),
    known_categories: Optional[Iterable[str]] = None,
) -> str:
    """Category-then-problem text in training framing, no end delimiter."""
    if known_categories is not None and prompt.category not in set(known_categories):
        warnings.warn(
            f"category {prompt.category!r} does not appear in the corpus",
            UnknownCategoryWarning,
            stacklevel=2,
        )
    return f"{delims.start}{prompt.category}{delims.sep}{prompt.problem_statement}"


def build_analogy_prompt(
    prompt: AnalogyPrompt,
    scaffold_suffix: str = DEFAULT_SCAFFOLD_SUFFIX,
    separator: str = DEFAULT_EXAMPLE_SEPARATOR,
) -> str:
    """Few-shot blocks in bank order, then the open query scaffold."""
    parts = []
    for ex in prompt.examples:
        parts.append(scaffold_line(ex.source_domain, ex.target_domain, scaffold_suffix))
        parts.append("\n")
        parts.append(ex.description)
        parts.append(separator)
    parts.append(scaffold_line(prompt.query_source, prompt.query_target, scaffold_suffix))
    parts.append("\n")
    return "".join(parts)


def _example_from_obj(obj: dict, line_no: int) -> AnalogyExample:
    for name in _REQUIRED_BANK_FIELDS:
        if name not in obj:
            raise CorpusFormatError(line_no, f"missing required field {name!r}")
    unknown = set(obj) - set(BANK_FIELDS)
    if unknown:
        raise CorpusFormatError(line_no, f"unknown fields: {', '.join(sorted(unknown))}")
    for name, value in obj.items():
        if value is not None and not isinstance(value, str):
            raise CorpusFormatError(line_no, f"field {name!r} must be a string")
    try:
        return AnalogyExample(**obj)
    except ValueError as exc:
        raise CorpusFormatError(line_no, str(exc)) from exc


def parse_example_bank(fp: IO) -> list[AnalogyExample]:
    """Parse a JSONL analogy bank; same error contract as corpus parsing."""
    examples: list[AnalogyExample] = []
    for line_no, raw in enumerate(fp, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(line_no, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise CorpusFormatError(line_no, "expected a JSON object")
        examples.append(_example_from_obj(obj, line_no))
    return examples


def load_example_bank(path) -> list[AnalogyExample]:
    with open(path, "rb") as fp:
        return parse_example_bank(fp)


def bundled_bank_path() -> str:
    """Path of the analogy bank shipped with the package."""
    return str(files("ideaforge").joinpath("data/analogy_bank.jsonl"))


def example_to_json(example: AnalogyExample) -> str:
    obj = {}
    for name in BANK_FIELDS:
        value = getattr(example, name)
        if value is not None:
            obj[name] = value
    return json.dumps(obj, ensure_ascii=False)


def serialize_example_bank(examples: Iterable[AnalogyExample]) -> str:
    return "".join(example_to_json(ex) + "\n" for ex in examples)


def save_example_bank(examples: Iterable[AnalogyExample], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fp:
        fp.write(serialize_example_bank(examples))
