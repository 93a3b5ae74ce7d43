"""Design-description corpora: parsing, training-text formatting, statistics.

Corpus files are UTF-8 JSONL with one record per line. A separate derived
artifact, the training-text file, holds one formatted record per
blank-line-separated block: the category name prepended to the description
between configurable delimiters, which is the framing the generation prompts
reuse.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib.resources import files
from typing import IO, Iterable, Optional

from . import textkit

KINDS = ("product", "concept")

RECORD_FIELDS = ("id", "category", "title", "description", "year", "kind", "source_url")
_REQUIRED_FIELDS = ("id", "category", "description", "kind")

# A first sentence counts as a problem statement when it carries one of
# these cue stems (prefix match at a word boundary). Advisory metadata only,
# never a hard gate.
PROBLEM_CUES = (
    "concern",
    "problem",
    "difficult",
    "challenge",
    "stressful",
    "time-consuming",
    "risk",
    "avoid",
    "lack",
    "issue",
    "however",
)

_CUE_RE = re.compile("|".join(r"\b" + re.escape(cue) for cue in PROBLEM_CUES), re.IGNORECASE)
_SENTENCE_END_RE = re.compile(r"[.?!](?=\s|$)")


class CorpusFormatError(ValueError):
    """Malformed corpus or bank file; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class DesignRecord:
    """One award-style design entry, the corpus atom."""

    id: str
    category: str
    description: str
    kind: str
    title: Optional[str] = None
    year: Optional[int] = None
    source_url: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("record id must be nonempty")
        if not self.category:
            raise ValueError("category must be nonempty")
        if not self.description:
            raise ValueError("description must be nonempty")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")


@dataclass(frozen=True)
class ProblemSolutionSplit:
    """First-sentence problem statement, when detected, plus the remainder.

    When problem is present, problem + solution reconstructs the original
    description byte for byte (the solution keeps its leading whitespace).
    """

    solution: str
    problem: Optional[str] = None

    def reconstruct(self) -> str:
        return (self.problem or "") + self.solution


@dataclass(frozen=True)
class DelimiterConfig:
    """Framing around one formatted training record."""

    start: str = "<|startoftext|>"
    sep: str = "\n"
    end: str = "<|endoftext|>"

    @classmethod
    def none(cls) -> "DelimiterConfig":
        """Bare category/description framing with no start or end markers."""
        return cls(start="", sep="\n", end="")


@dataclass(frozen=True)
class CorpusStats:
    total: int
    by_kind: dict[str, int]
    by_year: dict[int, int]
    by_category: dict[str, int]
    token_count: int
    mean_description_tokens: float


def _record_from_obj(obj: dict, line_no: int) -> DesignRecord:
    unknown = set(obj) - set(RECORD_FIELDS)
    if unknown:
        raise CorpusFormatError(line_no, f"unknown fields: {sorted(unknown)}")
    for name in _REQUIRED_FIELDS:
        if obj.get(name) in (None, ""):
            raise CorpusFormatError(line_no, f"missing required field {name!r}")
    year = obj.get("year")
    if year is not None and not isinstance(year, int):
        raise CorpusFormatError(line_no, f"year must be an integer, got {year!r}")
    try:
        return DesignRecord(
            id=str(obj["id"]),
            category=obj["category"],
            description=obj["description"],
            kind=obj["kind"],
            title=obj.get("title"),
            year=year,
            source_url=obj.get("source_url"),
        )
    except ValueError as exc:
        raise CorpusFormatError(line_no, str(exc)) from exc


def parse_corpus_file(fp: IO) -> list[DesignRecord]:
    """Parse a JSONL corpus stream into records.

    Every problem is reported with its 1-based line number: malformed JSON,
    missing required fields, unknown fields, and duplicate ids all raise
    CorpusFormatError. Accepts byte or text streams.
    """
    records: list[DesignRecord] = []
    seen_ids: set[str] = set()
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
        record = _record_from_obj(obj, line_no)
        if record.id in seen_ids:
            raise CorpusFormatError(line_no, f"duplicate id {record.id!r}")
        seen_ids.add(record.id)
        records.append(record)
    return records


def load_corpus(path) -> list[DesignRecord]:
    with open(path, "rb") as fp:
        return parse_corpus_file(fp)


def bundled_corpus_path() -> str:
    """Path of the small demonstration corpus shipped with the package."""
    return str(files("ideaforge").joinpath("data/mini_corpus.jsonl"))


def record_to_json(record: DesignRecord) -> str:
    """Canonical single-line JSON for a record; optional nulls are omitted."""
    obj = {}
    for name in RECORD_FIELDS:
        value = getattr(record, name)
        if value is not None:
            obj[name] = value
    return json.dumps(obj, ensure_ascii=False)


def serialize_corpus(records: Iterable[DesignRecord]) -> str:
    return "".join(record_to_json(r) + "\n" for r in records)


def format_training_text(record: DesignRecord, delims: DelimiterConfig = DelimiterConfig()) -> str:
    """Render one record as training text: category prepended to description."""
    return f"{delims.start}{record.category}{delims.sep}{record.description}{delims.end}"


def write_training_text(records: Iterable[DesignRecord], path, delims: DelimiterConfig = DelimiterConfig()) -> None:
    """Write formatted records separated by one blank line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fp:
        fp.write(training_text_document(records, delims))


def training_text_document(records: Iterable[DesignRecord], delims: DelimiterConfig = DelimiterConfig()) -> str:
    return "\n\n".join(format_training_text(r, delims) for r in records) + "\n"


def read_training_blocks(path) -> list[str]:
    """Read a training-text file back into its blank-line-separated blocks."""
    text = open(path, "r", encoding="utf-8").read()
    return [block for block in re.split(r"\n\s*\n", text) if block.strip()]


def split_problem_solution(description: str) -> ProblemSolutionSplit:
    """Detect a leading problem statement in a description.

    The first sentence (ended by ., ? or ! followed by whitespace or end of
    text) becomes the problem when it contains a problem cue; otherwise the
    whole description is the solution.
    """
    if not description:
        raise ValueError("description must be nonempty")
    match = _SENTENCE_END_RE.search(description)
    if match is None:
        return ProblemSolutionSplit(solution=description)
    cut = match.end()
    first_sentence = description[:cut]
    if _CUE_RE.search(first_sentence) is None:
        return ProblemSolutionSplit(solution=description)
    return ProblemSolutionSplit(problem=first_sentence, solution=description[cut:])


def corpus_stats(records: Iterable[DesignRecord]) -> CorpusStats:
    records = list(records)
    by_kind = Counter(r.kind for r in records)
    by_year = Counter(r.year for r in records if r.year is not None)
    by_category = Counter(r.category for r in records)
    token_counts = [len(textkit.tokenize(r.description)) for r in records]
    total_tokens = sum(token_counts)
    return CorpusStats(
        total=len(records),
        by_kind=dict(sorted(by_kind.items())),
        by_year=dict(sorted(by_year.items())),
        by_category=dict(sorted(by_category.items())),
        token_count=total_tokens,
        mean_description_tokens=(total_tokens / len(records)) if records else 0.0,
    )
