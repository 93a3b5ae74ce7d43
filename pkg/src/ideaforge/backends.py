"""Generation backends: the local reference model and a remote completion API.

Both speak the same contract, a CompletionRequest in and a list of
GenerationResult out, so everything downstream is backend-agnostic. The
local backend wraps the n-gram model and decoder and is bit-deterministic
given a seed; candidate i of a batch uses seed + i. The remote backend
POSTs to {base}/v1/completions with a bearer token, the de facto wire
protocol for hosted completion models.

Remote failure policy: connection errors, timeouts, 429 and 5xx responses
are retried up to the configured limit with exponential backoff and full
jitter; other 4xx responses fail immediately. The credential is read from
an environment variable at call time and appears only in the request
header, never in descriptors, results, exceptions or logs.
"""

from __future__ import annotations

import os
import random
import threading
import time
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import httpx

from .decoder import DecodingParams, GenerationResult, generate
from .reference_lm import NGramModel, load as load_model
from .textkit import BOS_ID, encode, tokenize

DEFAULT_CREDENTIAL_ENV = "IDEAFORGE_API_KEY"
COMPLETIONS_PATH = "/v1/completions"

REMOTE_PARAM_FIELDS = (
    "max_tokens",
    "temperature",
    "top_p",
    "presence_penalty",
    "frequency_penalty",
)


class BackendError(RuntimeError):
    """Completion failed; carries the HTTP status when one was received."""

    def __init__(self, message: str, status_code: Optional[int] = None):
        super().__init__(message)
        self.status_code = status_code


class TopKDroppedWarning(UserWarning):
    """top_k was discarded while mapping params for a remote backend."""


@dataclass(frozen=True)
class BackendDescriptor:
    """Where completions come from; safe to snapshot and persist."""

    kind: str  # "local" or "remote"
    model_path: Optional[str] = None
    base_url: Optional[str] = None
    model: Optional[str] = None
    credential_env: str = DEFAULT_CREDENTIAL_ENV
    timeout: float = 30.0
    max_retries: int = 3
    backoff_base: float = 0.5
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        if self.kind not in ("local", "remote"):
            raise ValueError(f"kind must be 'local' or 'remote', got {self.kind!r}")
        if self.kind == "local" and not self.model_path:
            raise ValueError("local backend requires model_path")
        if self.kind == "remote":
            if not self.base_url:
                raise ValueError("remote backend requires base_url")
            if not self.model:
                raise ValueError("remote backend requires a model name")
            if not self.credential_env:
                raise ValueError("remote backend requires a credential reference")
        if not self.timeout > 0:
            raise ValueError("timeout must be > 0")
        if self.max_retries < 0 or self.backoff_base < 0:
            raise ValueError("retry policy values must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")

    def snapshot(self) -> tuple[tuple[str, str], ...]:
        """Identifying fields only; never the credential value."""
        pairs = [("kind", self.kind)]
        if self.kind == "local":
            pairs.append(("model_path", str(self.model_path)))
        else:
            pairs.append(("base_url", str(self.base_url)))
            pairs.append(("model", str(self.model)))
            pairs.append(("credential_env", self.credential_env))
        return tuple(pairs)


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    params: DecodingParams

    def __post_init__(self) -> None:
        if not isinstance(self.params, DecodingParams):
            raise ValueError("params must be a DecodingParams")
        if not self.prompt:
            raise ValueError("prompt must be nonempty")


def map_params_remote(params: DecodingParams, prompt: Optional[str] = None, drop_top_k: bool = False) -> dict:
    """Wire fields for the completion endpoint, names exact.

    top_k has no remote equivalent, so a nonzero value is an error unless
    the caller explicitly opts into dropping it, which is recorded as a
    warning. An empty stop list is omitted entirely.
    """
    if params.top_k > 0:
        if not drop_top_k:
            raise ValueError(
                "top_k is not supported by the remote protocol; "
                "unset it or pass drop_top_k=True to omit it"
            )
        warnings.warn(
            f"dropping top_k={params.top_k} for remote backend",
            TopKDroppedWarning,
            stacklevel=2,
        )
    body: dict = {}
    if prompt is not None:
        body["prompt"] = prompt
    for name in REMOTE_PARAM_FIELDS:
        body[name] = getattr(params, name)
    if params.stop:
        body["stop"] = list(params.stop)
    body["n"] = params.n_candidates
    return body


class LocalBackend:
    """The reference model served through the decoder."""

    def __init__(self, model: NGramModel, descriptor: Optional[BackendDescriptor] = None):
        self.model = model
        self.descriptor = descriptor or BackendDescriptor(kind="local", model_path="<in-memory>")

    @classmethod
    def from_descriptor(cls, descriptor: BackendDescriptor) -> "LocalBackend":
        if descriptor.kind != "local":
            raise ValueError("descriptor is not local")
        return cls(load_model(descriptor.model_path), descriptor)

    def complete(self, request: CompletionRequest) -> list[GenerationResult]:
        vocab = self.model.vocab
        prompt_ids = [BOS_ID] + encode(vocab, tokenize(request.prompt))
        results = []
        for i in range(request.params.n_candidates):
            per_candidate = replace(request.params, seed=request.params.seed + i)
            results.append(generate(self.model.next_token_logits, prompt_ids, per_candidate, vocab))
        return results


class RemoteBackend:
    """Client for a hosted completions endpoint."""

    def __init__(self, descriptor: BackendDescriptor, drop_top_k: bool = False):
        if descriptor.kind != "remote":
            raise ValueError("descriptor is not remote")
        self.descriptor = descriptor
        self.drop_top_k = drop_top_k
        self._client = httpx.Client(timeout=descriptor.timeout)
        self._in_flight = threading.BoundedSemaphore(descriptor.max_in_flight)

    def close(self) -> None:
        self._client.close()

    def _credential(self) -> str:
        value = os.environ.get(self.descriptor.credential_env)
        if not value:
            raise BackendError(
                f"credential environment variable {self.descriptor.credential_env} is not set"
            )
        return value

    def _post_once(self, body: dict) -> httpx.Response:
        url = self.descriptor.base_url.rstrip("/") + COMPLETIONS_PATH
        headers = {"Authorization": f"Bearer {self._credential()}"}
        with self._in_flight:
            return self._client.post(url, json=body, headers=headers)

    def complete(self, request: CompletionRequest) -> list[GenerationResult]:
        body = {"model": self.descriptor.model}
        body.update(map_params_remote(request.params, request.prompt, self.drop_top_k))

        attempts = self.descriptor.max_retries + 1
        failure: Optional[str] = None
        status: Optional[int] = None
        for attempt in range(attempts):
            if attempt:
                # full jitter keeps concurrent clients from retrying in step
                time.sleep(random.uniform(0, self.descriptor.backoff_base * 2 ** (attempt - 1)))
            try:
                response = self._post_once(body)
            except httpx.TimeoutException:
                failure, status = "request timed out", None
                continue
            except httpx.TransportError as exc:
                failure, status = f"transport failure: {type(exc).__name__}", None
                continue
            if response.status_code == 200:
                return self._parse(response, request.params)
            if response.status_code == 429 or response.status_code >= 500:
                failure, status = f"server returned {response.status_code}", response.status_code
                continue
            raise BackendError(
                f"completion request rejected with HTTP {response.status_code}",
                status_code=response.status_code,
            )
        raise BackendError(f"{failure} after {attempts} attempts", status_code=status)

    def _parse(self, response: httpx.Response, params: DecodingParams) -> list[GenerationResult]:
        try:
            payload = response.json()
        except ValueError as exc:
            raise BackendError("malformed response body: not JSON") from exc
        choices = payload.get("choices")
        if not isinstance(choices, list) or not choices:
            raise BackendError("malformed response body: missing choices")
        if len(choices) != params.n_candidates:
            raise BackendError(
                f"expected {params.n_candidates} choices, server returned {len(choices)}"
            )
        results = []
        for choice in choices:
            if not isinstance(choice, dict) or "text" not in choice:
                raise BackendError("malformed response body: choice without text")
            results.append(
                GenerationResult(
                    text=choice["text"],
                    token_ids=(),
                    finish_reason=choice.get("finish_reason") or "stop",
                    matched_stop=None,
                    logprobs=None,
                    params=params,
                    raw_response=payload,
                )
            )
        return results


def complete(backend, request: CompletionRequest) -> list[GenerationResult]:
    """Uniform entry point over any backend handle."""
    return backend.complete(request)
