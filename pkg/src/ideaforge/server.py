"""HTTP face of the ideation service.

Thin JSON translation over IdeationService: bodies and views reuse the
session module's canonical dict forms, so what the API returns is exactly
what the event log and exports contain. State errors map to 404, input
errors to 400, backend trouble to 502.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel

from .backends import BackendDescriptor, BackendError
from .prompting import bundled_bank_path, load_example_bank
from .session import (
    IdeationService,
    IdeationSession,
    UnknownCandidateError,
    UnknownSessionError,
    VerdictError,
    candidate_to_dict,
    descriptor_from_dict,
    descriptor_to_dict,
    inputs_from_dict,
    inputs_to_dict,
    params_from_dict,
    params_to_dict,
)


class CreateSessionBody(BaseModel):
    mode: str
    inputs: dict
    params: Optional[dict] = None
    backend: Optional[dict] = None
    id: Optional[str] = None


class GenerateBody(BaseModel):
    count: int = 1
    params: Optional[dict] = None


class VerdictBody(BaseModel):
    verdict: str


def session_view(session: IdeationSession) -> dict:
    return {
        "id": session.id,
        "mode": session.mode,
        "inputs": inputs_to_dict(session.mode, session.inputs),
        "params": params_to_dict(session.params),
        "backend": descriptor_to_dict(session.backend),
        "created_at": session.created_at,
        "updated_at": session.updated_at,
        "batches": session.batches,
        "history": [candidate_to_dict(c) for c in session.history],
    }


def session_summary(session: IdeationSession) -> dict:
    return {
        "id": session.id,
        "mode": session.mode,
        "created_at": session.created_at,
        "updated_at": session.updated_at,
        "batches": session.batches,
        "candidates": len(session.history),
    }


def create_app(
    service: IdeationService,
    default_backend: Optional[BackendDescriptor] = None,
) -> FastAPI:
    app = FastAPI(title="ideaforge", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def _get(session_id: str) -> IdeationSession:
        try:
            return service.get_session(session_id)
        except UnknownSessionError:
            raise HTTPException(404, f"no session {session_id!r}")

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        inputs_obj = dict(body.inputs)
        if body.mode == "analogy" and "examples" not in inputs_obj:
            bank = load_example_bank(bundled_bank_path())
            inputs_obj["examples"] = [
                {k: v for k, v in (
                    ("source_domain", ex.source_domain),
                    ("target_domain", ex.target_domain),
                    ("description", ex.description),
                    ("provenance", ex.provenance),
                ) if v is not None}
                for ex in bank
            ]
        try:
            inputs = inputs_from_dict(body.mode, inputs_obj)
            params = params_from_dict(body.params or {})
            if body.backend is not None:
                backend = descriptor_from_dict(body.backend)
            elif default_backend is not None:
                backend = default_backend
            else:
                raise ValueError("no backend given and the server has no default")
            session = service.create_session(
                body.mode, inputs, params, backend, session_id=body.id
            )
        except (KeyError, TypeError) as exc:
            raise HTTPException(400, f"malformed inputs: {exc}")
        except ValueError as exc:
            raise HTTPException(400, str(exc))
        return session_view(session)

    @app.get("/sessions")
    def list_sessions() -> list[dict]:
        return [session_summary(s) for s in service.list_sessions()]

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return session_view(_get(session_id))

    @app.post("/sessions/{session_id}/generate")
    def generate(session_id: str, body: GenerateBody) -> dict:
        _get(session_id)
        try:
            params = None if body.params is None else params_from_dict(body.params)
            candidates = service.generate_batch(session_id, body.count, params=params)
        except BackendError as exc:
            raise HTTPException(502, str(exc))
        except (TypeError, ValueError) as exc:
            raise HTTPException(400, str(exc))
        return {
            "session": session_view(service.get_session(session_id)),
            "candidates": [candidate_to_dict(c) for c in candidates],
        }

    @app.post("/sessions/{session_id}/candidates/{candidate_id}/verdict")
    def record_verdict(session_id: str, candidate_id: str, body: VerdictBody) -> dict:
        _get(session_id)
        try:
            candidate = service.record_verdict(session_id, candidate_id, body.verdict)
        except UnknownCandidateError:
            raise HTTPException(404, f"no candidate {candidate_id!r}")
        except VerdictError as exc:
            raise HTTPException(400, str(exc))
        return candidate_to_dict(candidate)

    @app.get("/sessions/{session_id}/export")
    def export_session(session_id: str) -> PlainTextResponse:
        _get(session_id)
        document = service.export_session(session_id)
        return PlainTextResponse(document, media_type="application/x-ndjson")

    return app
