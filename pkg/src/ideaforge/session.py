"""Event-sourced ideation sessions.

A session is one configured experiment: a mode, its inputs, decoding
parameters and a backend. Everything that happens to it (creation, batches,
verdicts, exports, failures) is an append-only event; the in-memory state
is always the fold of those events, so replaying the log from scratch
reconstructs the session bit for bit. Persistence is a JSONL log per
session plus a periodic snapshot, both plain text so they diff cleanly.

Accepted candidates feed back into the novelty reference set, which is how
a human reviewer steers later batches away from ideas already taken.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path
from time import time as _wall_clock
from typing import Callable, Iterable, Optional, Sequence, Union

from .backends import (
    BackendDescriptor,
    BackendError,
    CompletionRequest,
    LocalBackend,
    RemoteBackend,
    complete,
)
from .decoder import DecodingParams
from .evaluator import (
    MODES,
    ConceptCandidate,
    EvaluationReport,
    EvaluationThresholds,
    evaluate_candidate,
)
from .prompting import (
    AnalogyExample,
    AnalogyPrompt,
    BANK_FIELDS,
    ProblemPrompt,
    build_analogy_prompt,
    build_problem_prompt,
)

EVENT_KINDS = ("created", "params_changed", "batch_generated", "verdict_recorded", "exported", "error")
BATCH_SEED_STRIDE = 100_000
EXPORT_FORMAT = "ideaforge/session"
EXPORT_VERSION = 1
SNAPSHOT_EVERY = 20

SessionInputs = Union[ProblemPrompt, AnalogyPrompt]


class UnknownSessionError(KeyError):
    pass


class UnknownCandidateError(KeyError):
    pass


class VerdictError(ValueError):
    """Raised for verdicts that are invalid or already decided."""


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    kind: str
    timestamp: float
    payload: dict

    def __post_init__(self) -> None:
        if self.seq < 1:
            raise ValueError("event sequence numbers start at 1")
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")


@dataclass
class IdeationSession:
    id: str
    mode: str
    inputs: SessionInputs
    params: DecodingParams
    backend: BackendDescriptor
    created_at: float
    updated_at: float
    history: list[ConceptCandidate] = field(default_factory=list)
    events: list[SessionEvent] = field(default_factory=list)

    @property
    def batches(self) -> int:
        return sum(1 for e in self.events if e.kind == "batch_generated")

    def candidate(self, candidate_id: str) -> ConceptCandidate:
        for cand in self.history:
            if cand.id == candidate_id:
                return cand
        raise UnknownCandidateError(candidate_id)


# ---------------------------------------------------------------------------
# JSON forms. Dict key order is part of the contract: exports are compared
# byte for byte, so every dict here is built in one fixed order.

def params_to_dict(params: DecodingParams) -> dict:
    return {
        "max_tokens": params.max_tokens,
        "temperature": params.temperature,
        "top_k": params.top_k,
        "top_p": params.top_p,
        "presence_penalty": params.presence_penalty,
        "frequency_penalty": params.frequency_penalty,
        "stop": list(params.stop),
        "seed": params.seed,
        "n_candidates": params.n_candidates,
    }


def params_from_dict(obj: dict) -> DecodingParams:
    data = dict(obj)
    data["stop"] = tuple(data.get("stop", ()))
    return DecodingParams(**data)


def descriptor_to_dict(descriptor: BackendDescriptor) -> dict:
    obj: dict = {"kind": descriptor.kind}
    if descriptor.kind == "local":
        obj["model_path"] = descriptor.model_path
    else:
        obj["base_url"] = descriptor.base_url
        obj["model"] = descriptor.model
        obj["credential_env"] = descriptor.credential_env
    obj["timeout"] = descriptor.timeout
    obj["max_retries"] = descriptor.max_retries
    obj["backoff_base"] = descriptor.backoff_base
    obj["max_in_flight"] = descriptor.max_in_flight
    return obj


def descriptor_from_dict(obj: dict) -> BackendDescriptor:
    return BackendDescriptor(**obj)


def inputs_to_dict(mode: str, inputs: SessionInputs) -> dict:
    if mode == "problem_driven":
        return {"category": inputs.category, "problem_statement": inputs.problem_statement}
    examples = []
    for ex in inputs.examples:
        row = {}
        for name in BANK_FIELDS:
            value = getattr(ex, name)
            if value is not None:
                row[name] = value
        examples.append(row)
    return {
        "examples": examples,
        "query_source": inputs.query_source,
        "query_target": inputs.query_target,
    }


def inputs_from_dict(mode: str, obj: dict) -> SessionInputs:
    if mode == "problem_driven":
        return ProblemPrompt(category=obj["category"], problem_statement=obj["problem_statement"])
    examples = tuple(AnalogyExample(**row) for row in obj["examples"])
    return AnalogyPrompt(
        examples=examples,
        query_source=obj["query_source"],
        query_target=obj["query_target"],
    )


def report_to_dict(report: EvaluationReport) -> dict:
    return {
        "novelty": report.novelty,
        "relevance": report.relevance,
        "repetition_flag": report.repetition_flag,
        "length_ok": report.length_ok,
        "composite": report.composite,
    }


def candidate_to_dict(cand: ConceptCandidate) -> dict:
    return {
        "id": cand.id,
        "text": cand.text,
        "mode": cand.mode,
        "inputs": {k: v for k, v in cand.inputs},
        "params": None if cand.params is None else params_to_dict(cand.params),
        "backend": None if cand.backend is None else {k: v for k, v in cand.backend},
        "scores": None if cand.scores is None else report_to_dict(cand.scores),
        "verdict": cand.verdict,
    }


def candidate_from_dict(obj: dict) -> ConceptCandidate:
    scores = obj.get("scores")
    backend = obj.get("backend")
    params = obj.get("params")
    return ConceptCandidate(
        id=obj["id"],
        text=obj["text"],
        mode=obj["mode"],
        inputs=tuple(obj["inputs"].items()),
        params=None if params is None else params_from_dict(params),
        backend=None if backend is None else tuple(backend.items()),
        scores=None if scores is None else EvaluationReport(**scores),
        verdict=obj.get("verdict", "pending"),
    )


def _dumps(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def event_to_line(event: SessionEvent) -> str:
    return _dumps(
        {"seq": event.seq, "kind": event.kind, "ts": event.timestamp, "payload": event.payload}
    )


def event_from_line(line: str) -> SessionEvent:
    obj = json.loads(line)
    return SessionEvent(seq=obj["seq"], kind=obj["kind"], timestamp=obj["ts"], payload=obj["payload"])


# ---------------------------------------------------------------------------
# Replay.

def apply_event(session: Optional[IdeationSession], event: SessionEvent) -> IdeationSession:
    """Fold one event into the session state; `created` starts from None."""
    if event.kind == "created":
        if session is not None:
            raise ValueError("created event on an existing session")
        p = event.payload
        return IdeationSession(
            id=p["id"],
            mode=p["mode"],
            inputs=inputs_from_dict(p["mode"], p["inputs"]),
            params=params_from_dict(p["params"]),
            backend=descriptor_from_dict(p["backend"]),
            created_at=event.timestamp,
            updated_at=event.timestamp,
            events=[event],
        )
    if session is None:
        raise ValueError(f"{event.kind} event with no created event before it")
    if event.seq != session.events[-1].seq + 1:
        raise ValueError(
            f"event sequence gap: {session.events[-1].seq} then {event.seq}"
        )
    session.events.append(event)
    session.updated_at = event.timestamp
    if event.kind == "params_changed":
        session.params = params_from_dict(event.payload["params"])
    elif event.kind == "batch_generated":
        session.history.extend(candidate_from_dict(c) for c in event.payload["candidates"])
    elif event.kind == "verdict_recorded":
        cid = event.payload["candidate_id"]
        for i, cand in enumerate(session.history):
            if cand.id == cid:
                session.history[i] = replace(cand, verdict=event.payload["verdict"])
                break
        else:
            raise ValueError(f"verdict for unknown candidate {cid!r}")
    # exported and error events change no state
    return session


def replay(events: Sequence[SessionEvent]) -> IdeationSession:
    if not events:
        raise ValueError("cannot replay an empty event list")
    session: Optional[IdeationSession] = None
    for event in events:
        session = apply_event(session, event)
    return session


# ---------------------------------------------------------------------------
# Export / import documents.

def export_document(session: IdeationSession) -> str:
    """The session as portable JSONL: a header line, then one line per event.

    The header embeds the created event, so a freshly created session
    exports as a single line. Everything needed to rebuild the session is
    in the document; credentials are only ever named, never included.
    """
    created = session.events[0]
    header = {
        "format": EXPORT_FORMAT,
        "version": EXPORT_VERSION,
        "created": {"ts": created.timestamp, **created.payload},
    }
    lines = [_dumps(header)]
    lines.extend(event_to_line(e) for e in session.events[1:])
    return "\n".join(lines) + "\n"


def parse_document(document: str) -> list[SessionEvent]:
    lines = [ln for ln in document.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty session document")
    header = json.loads(lines[0])
    if header.get("format") != EXPORT_FORMAT:
        raise ValueError("not a session document")
    if header.get("version") != EXPORT_VERSION:
        raise ValueError(f"unsupported document version {header.get('version')!r}")
    created_obj = dict(header["created"])
    ts = created_obj.pop("ts")
    events = [SessionEvent(seq=1, kind="created", timestamp=ts, payload=created_obj)]
    for line in lines[1:]:
        events.append(event_from_line(line))
    replay(events)  # validates ordering and internal consistency
    return events


# ---------------------------------------------------------------------------
# Persistence.

class SessionStore:
    """JSONL event logs plus snapshots under one data directory.

    The store owns the canonical in-memory session objects and the
    per-session locks; all mutation goes through append(), which assigns
    gap-free sequence numbers.
    """

    def __init__(self, data_dir, clock: Callable[[], float] = _wall_clock,
                 snapshot_every: int = SNAPSHOT_EVERY):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.clock = clock
        self.snapshot_every = snapshot_every
        self._sessions: dict[str, IdeationSession] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._registry = threading.Lock()

    def _events_path(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.events.jsonl"

    def _snapshot_path(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.snapshot.json"

    def lock(self, session_id: str) -> threading.RLock:
        with self._registry:
            if session_id not in self._locks:
                self._locks[session_id] = threading.RLock()
            return self._locks[session_id]

    def exists(self, session_id: str) -> bool:
        return session_id in self._sessions or self._events_path(session_id).exists()

    def list_ids(self) -> list[str]:
        ids = {p.name[: -len(".events.jsonl")] for p in self.data_dir.glob("*.events.jsonl")}
        ids.update(self._sessions)
        return sorted(ids)

    def create(self, payload: dict) -> IdeationSession:
        session_id = payload["id"]
        with self.lock(session_id):
            if self.exists(session_id):
                raise ValueError(f"session {session_id!r} already exists")
            event = SessionEvent(seq=1, kind="created", timestamp=self.clock(), payload=payload)
            session = apply_event(None, event)
            self._write_event(session_id, event)
            self._write_snapshot(session)
            self._sessions[session_id] = session
            return session

    def get(self, session_id: str) -> IdeationSession:
        with self.lock(session_id):
            if session_id in self._sessions:
                return self._sessions[session_id]
            session = self._load(session_id)
            self._sessions[session_id] = session
            return session

    def append(self, session_id: str, kind: str, payload: dict) -> IdeationSession:
        with self.lock(session_id):
            session = self.get(session_id)
            event = SessionEvent(
                seq=session.events[-1].seq + 1, kind=kind,
                timestamp=self.clock(), payload=payload,
            )
            self._write_event(session_id, event)
            apply_event(session, event)
            if event.seq % self.snapshot_every == 0:
                self._write_snapshot(session)
            return session

    def adopt(self, events: Sequence[SessionEvent]) -> IdeationSession:
        """Install a parsed document as a new session (import)."""
        session = replay(list(events))
        with self.lock(session.id):
            if self.exists(session.id):
                raise ValueError(f"session {session.id!r} already exists")
            with open(self._events_path(session.id), "w", encoding="utf-8") as fh:
                for event in session.events:
                    fh.write(event_to_line(event) + "\n")
            self._write_snapshot(session)
            self._sessions[session.id] = session
            return session

    def _write_event(self, session_id: str, event: SessionEvent) -> None:
        with open(self._events_path(session_id), "a", encoding="utf-8") as fh:
            fh.write(event_to_line(event) + "\n")

    def _write_snapshot(self, session: IdeationSession) -> None:
        state = {
            "seq": session.events[-1].seq,
            "id": session.id,
            "mode": session.mode,
            "inputs": inputs_to_dict(session.mode, session.inputs),
            "params": params_to_dict(session.params),
            "backend": descriptor_to_dict(session.backend),
            "created_at": session.created_at,
            "updated_at": session.updated_at,
            "history": [candidate_to_dict(c) for c in session.history],
        }
        self._snapshot_path(session.id).write_text(_dumps(state) + "\n", encoding="utf-8")

    def _load(self, session_id: str) -> IdeationSession:
        path = self._events_path(session_id)
        if not path.exists():
            raise UnknownSessionError(session_id)
        with open(path, encoding="utf-8") as fh:
            events = [event_from_line(line) for line in fh if line.strip()]
        snap_path = self._snapshot_path(session_id)
        if snap_path.exists():
            state = json.loads(snap_path.read_text(encoding="utf-8"))
            upto = state["seq"]
            if any(e.seq == upto for e in events):
                session = IdeationSession(
                    id=state["id"],
                    mode=state["mode"],
                    inputs=inputs_from_dict(state["mode"], state["inputs"]),
                    params=params_from_dict(state["params"]),
                    backend=descriptor_from_dict(state["backend"]),
                    created_at=state["created_at"],
                    updated_at=state["updated_at"],
                    history=[candidate_from_dict(c) for c in state["history"]],
                    events=[e for e in events if e.seq <= upto],
                )
                for event in events:
                    if event.seq > upto:
                        apply_event(session, event)
                return session
        return replay(events)


# ---------------------------------------------------------------------------
# Service.

def default_backend_factory(descriptor: BackendDescriptor):
    if descriptor.kind == "local":
        return LocalBackend.from_descriptor(descriptor)
    return RemoteBackend(descriptor)


class IdeationService:
    """Session orchestration: prompts in, evaluated candidates out.

    Within a session every operation runs under that session's lock, so
    concurrent callers observe a single total order of events. Backends
    are cached per descriptor; models and example banks are immutable once
    loaded.
    """

    def __init__(self, store: SessionStore, backend_factory=None,
                 thresholds: EvaluationThresholds = EvaluationThresholds()):
        self.store = store
        self.thresholds = thresholds
        self._backend_factory = backend_factory or default_backend_factory
        self._backends: dict[BackendDescriptor, object] = {}
        self._backend_lock = threading.Lock()

    # -- lifecycle ---------------------------------------------------------

    def create_session(
        self,
        mode: str,
        inputs: SessionInputs,
        params: DecodingParams,
        backend: BackendDescriptor,
        session_id: Optional[str] = None,
    ) -> IdeationSession:
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        expected = ProblemPrompt if mode == "problem_driven" else AnalogyPrompt
        if not isinstance(inputs, expected):
            raise ValueError(f"{mode} sessions need {expected.__name__} inputs")
        if not isinstance(params, DecodingParams):
            raise ValueError("params must be a DecodingParams")
        if not isinstance(backend, BackendDescriptor):
            raise ValueError("backend must be a BackendDescriptor")
        session_id = session_id or f"s-{uuid.uuid4().hex[:12]}"
        if not all(ch.isalnum() or ch in "._-" for ch in session_id):
            raise ValueError("session ids may only use letters, digits, '.', '_' and '-'")
        payload = {
            "id": session_id,
            "mode": mode,
            "inputs": inputs_to_dict(mode, inputs),
            "params": params_to_dict(params),
            "backend": descriptor_to_dict(backend),
        }
        return self.store.create(payload)

    def get_session(self, session_id: str) -> IdeationSession:
        return self.store.get(session_id)

    def list_sessions(self) -> list[IdeationSession]:
        return [self.store.get(sid) for sid in self.store.list_ids()]

    # -- operations ---------------------------------------------------------

    def update_params(self, session_id: str, params: DecodingParams) -> IdeationSession:
        if not isinstance(params, DecodingParams):
            raise ValueError("params must be a DecodingParams")
        with self.store.lock(session_id):
            return self.store.append(
                session_id, "params_changed", {"params": params_to_dict(params)}
            )

    def generate_batch(
        self, session_id: str, count: int,
        params: Optional[DecodingParams] = None,
    ) -> list[ConceptCandidate]:
        if count < 1:
            raise ValueError("count must be >= 1")
        with self.store.lock(session_id):
            session = self.store.get(session_id)
            if params is not None and params != session.params:
                session = self.update_params(session_id, params)
            batch_index = session.batches + 1
            seed = session.params.seed + (batch_index - 1) * BATCH_SEED_STRIDE
            batch_params = replace(session.params, seed=seed, n_candidates=count)
            prompt_text = self._build_prompt(session)
            backend = self._backend_for(session.backend)
            try:
                results = complete(backend, CompletionRequest(prompt=prompt_text, params=batch_params))
            except BackendError as exc:
                self.store.append(
                    session_id, "error",
                    {"op": "generate_batch", "message": str(exc)},
                )
                raise
            references, anchor = self._evaluation_context(session)
            pairs = self._input_pairs(session)
            snapshot = session.backend.snapshot()
            candidates = []
            for i, result in enumerate(results):
                if not result.text:
                    continue  # degenerate empty generation; keep ids aligned with seeds
                cand = ConceptCandidate(
                    id=f"c{batch_index:03d}-{i:02d}",
                    text=result.text,
                    mode=session.mode,
                    inputs=pairs,
                    params=result.params if result.params is not None else batch_params,
                    backend=snapshot,
                )
                candidates.append(evaluate_candidate(cand, references, anchor, self.thresholds))
            self.store.append(
                session_id, "batch_generated",
                {
                    "batch": batch_index,
                    "count": count,
                    "seed": seed,
                    "candidates": [candidate_to_dict(c) for c in candidates],
                },
            )
            return candidates

    def record_verdict(self, session_id: str, candidate_id: str, verdict: str) -> ConceptCandidate:
        if verdict not in ("accepted", "rejected"):
            raise VerdictError(f"verdict must be 'accepted' or 'rejected', got {verdict!r}")
        with self.store.lock(session_id):
            session = self.store.get(session_id)
            cand = session.candidate(candidate_id)
            if cand.verdict != "pending":
                raise VerdictError(
                    f"candidate {candidate_id!r} already has verdict {cand.verdict!r}"
                )
            session = self.store.append(
                session_id, "verdict_recorded",
                {"candidate_id": candidate_id, "verdict": verdict},
            )
            return session.candidate(candidate_id)

    def export_session(self, session_id: str) -> str:
        with self.store.lock(session_id):
            session = self.store.get(session_id)
            document = export_document(session)
            self.store.append(
                session_id, "exported", {"through_seq": session.events[-1].seq}
            )
            return document

    def import_session(self, document: str) -> IdeationSession:
        events = parse_document(document)
        return self.store.adopt(events)

    # -- internals -----------------------------------------------------------

    def _backend_for(self, descriptor: BackendDescriptor):
        with self._backend_lock:
            if descriptor not in self._backends:
                self._backends[descriptor] = self._backend_factory(descriptor)
            return self._backends[descriptor]

    @staticmethod
    def _build_prompt(session: IdeationSession) -> str:
        if session.mode == "problem_driven":
            return build_problem_prompt(session.inputs)
        return build_analogy_prompt(session.inputs)

    @staticmethod
    def _input_pairs(session: IdeationSession) -> tuple[tuple[str, str], ...]:
        if session.mode == "problem_driven":
            return (
                ("category", session.inputs.category),
                ("problem_statement", session.inputs.problem_statement),
            )
        return (
            ("query_source", session.inputs.query_source),
            ("query_target", session.inputs.query_target),
        )

    def _evaluation_context(self, session: IdeationSession) -> tuple[list[str], str]:
        accepted = [c.text for c in session.history if c.verdict == "accepted"]
        if session.mode == "analogy":
            references = [ex.description for ex in session.inputs.examples] + accepted
            anchor = f"{session.inputs.query_source} {session.inputs.query_target}"
        else:
            references = accepted
            anchor = session.inputs.problem_statement
        return references, anchor
