"""ideaforge: verbal design-concept generation toolkit."""

__version__ = "0.1.0"

from .backends import (
    BackendDescriptor,
    BackendError,
    CompletionRequest,
    LocalBackend,
    RemoteBackend,
    complete,
)
from .corpus import (
    CorpusFormatError,
    DelimiterConfig,
    DesignRecord,
    bundled_corpus_path,
    corpus_stats,
    load_corpus,
)
from .decoder import DecodingParams, GenerationResult, generate
from .evaluator import (
    ConceptCandidate,
    EvaluationReport,
    EvaluationThresholds,
    evaluate,
    evaluate_candidate,
    novelty_score,
    rank_and_filter,
    relevance_score,
)
from .prompting import (
    AnalogyExample,
    AnalogyPrompt,
    ProblemPrompt,
    build_analogy_prompt,
    build_problem_prompt,
    bundled_bank_path,
    load_example_bank,
)
from .reference_lm import NGramModel, TrainingTrace, perplexity, prepare_sequences, train
from .session import IdeationService, IdeationSession, SessionStore, export_document
from .textkit import Vocabulary, build_vocab, decode, encode, tokenize

__all__ = [
    "AnalogyExample",
    "AnalogyPrompt",
    "BackendDescriptor",
    "BackendError",
    "CompletionRequest",
    "ConceptCandidate",
    "CorpusFormatError",
    "DecodingParams",
    "DelimiterConfig",
    "DesignRecord",
    "EvaluationReport",
    "EvaluationThresholds",
    "GenerationResult",
    "IdeationService",
    "IdeationSession",
    "LocalBackend",
    "NGramModel",
    "ProblemPrompt",
    "RemoteBackend",
    "SessionStore",
    "TrainingTrace",
    "Vocabulary",
    "__version__",
    "build_analogy_prompt",
    "build_problem_prompt",
    "build_vocab",
    "bundled_bank_path",
    "bundled_corpus_path",
    "complete",
    "corpus_stats",
    "decode",
    "encode",
    "evaluate",
    "evaluate_candidate",
    "export_document",
    "generate",
    "load_corpus",
    "load_example_bank",
    "novelty_score",
    "perplexity",
    "prepare_sequences",
    "rank_and_filter",
    "relevance_score",
    "tokenize",
    "train",
]
