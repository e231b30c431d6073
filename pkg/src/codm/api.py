"""HTTP facade binding the knowledge base, encounter engine, prompt builders,
gateway, and session manager into the live co-DM loop."""
from __future__ import annotations

import os
import random
from pathlib import Path
from typing import Literal, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import errors
from .config import ApiConfig, build_provider, build_registry
from .gateway import Gateway, GenerationRecord
from .kb import load_knowledge_base
from .profiles import InterfaceKind
from .prompts import build_summarization_prompt, build_understanding_prompt
from .sessions import FeedbackRecord, SessionManager, ThreadView
from .store import SessionStore
from .tables import Encounter, load_encounter_table, roll_and_persist

API_TOKEN_ENV = "CODM_API_TOKEN"

VARIANT_KINDS = {
    "summarize": InterfaceKind.SUMMARIZATION,
    "understand": InterfaceKind.UNDERSTANDING,
}


class RollRequest(BaseModel):
    setting_id: str
    table: Optional[str] = Field(
        default=None, description="Table file name inside the configured tables directory"
    )
    seed: Optional[int] = None


class UnderstandRequest(BaseModel):
    variant: Literal["summarize", "understand"]
    seed: Optional[int] = None
    debug: bool = False


class BrainstormRequest(BaseModel):
    include_summary: bool = False
    seed: Optional[int] = None


class MessageRequest(BaseModel):
    text: str = Field(min_length=1)
    user_id: str = "dm"


class ChatRequest(BaseModel):
    user_id: str = "dm"


class FeedbackRequest(BaseModel):
    polarity: Literal["positive", "negative"]
    comment: Optional[str] = None
    user_id: str = "dm"


def encounter_json(encounter: Encounter) -> dict:
    return {
        "id": encounter.id,
        "setting_id": encounter.setting_id,
        "rolled": [{"monster_id": mid, "quantity": qty} for mid, qty in encounter.rolled],
        "rendered": encounter.rendered,
        "created_at": encounter.created_at,
    }


def generation_json(record: GenerationRecord, debug: bool = False) -> dict:
    payload = {
        "id": record.id,
        "kind": record.bundle.interface_kind.value,
        "output_text": record.output_text,
        "provider": record.provider,
        "latency_ms": record.latency_ms,
        "attempts": record.attempts,
        "created_at": record.created_at,
        "thread_id": record.thread_id,
        "encounter_id": record.encounter_id,
    }
    if debug:
        payload["prompt"] = [
            {"role": m.role, "content": m.content} for m in record.bundle.messages
        ]
    return payload


def thread_json(view: ThreadView) -> dict:
    return {
        "id": view.id,
        "kind": view.kind,
        "encounter_id": view.encounter_id,
        "visibility": view.visibility,
        "seed_len": view.seed_len,
        "round_count": view.round_count,
        "participants": list(view.participants),
        "messages": [
            {"role": m.role, "content": m.content, "created_at": m.created_at, "seq": m.seq}
            for m in view.messages
        ],
    }


def feedback_json(record: FeedbackRecord) -> dict:
    return {
        "id": record.id,
        "generation_id": record.generation_id,
        "polarity": record.polarity,
        "comment": record.comment,
        "user_id": record.user_id,
        "created_at": record.created_at,
    }


def create_app(config: ApiConfig) -> FastAPI:
    """Build the service. Refuses to start on an invalid knowledge base or
    encounter table."""
    kb = load_knowledge_base(config.monsters_dir, config.settings_dir)
    default_table_path = Path(config.encounter_table)
    load_encounter_table(default_table_path, kb)  # validate at startup
    store = SessionStore(config.db_path)
    registry = build_registry(config)
    gateway = Gateway(
        build_provider(config),
        store,
        max_attempts=config.retry_max_attempts,
        backoff_base_ms=config.retry_backoff_ms,
        max_concurrency=config.llm_max_concurrency,
    )
    manager = SessionManager(
        store,
        gateway,
        kb,
        registry,
        persona=config.persona,
        token_budget=config.token_budget,
        max_pending_per_thread=config.max_pending_per_thread,
    )

    app = FastAPI(title="codm", version="0.1.0", description="Self-hosted co-DM service")
    app.state.manager = manager
    app.state.store = store
    app.state.kb = kb

    api_token = os.environ.get(API_TOKEN_ENV)
    if api_token:
        open_paths = {"/healthz", "/openapi.json", "/docs"}

        @app.middleware("http")
        async def require_token(request: Request, call_next):
            path = request.url.path
            if path not in open_paths and not path.startswith("/console"):
                if request.headers.get("Authorization") != f"Bearer {api_token}":
                    return JSONResponse({"detail": "missing or invalid token"}, status_code=401)
            return await call_next(request)

    status_map = [
        (
            (
                errors.UnknownSettingError,
                errors.UnknownEncounterError,
                errors.UnknownThreadError,
                errors.UnknownGenerationError,
            ),
            404,
        ),
        (
            (errors.EmptyTableError, errors.SchemaError, errors.ParseError, errors.ToolCommandError),
            422,
        ),
        ((errors.NoSummaryError, errors.DuplicateFeedbackError, errors.ThreadBusyError), 409),
    ]

    @app.exception_handler(errors.CodmError)
    async def codm_error_handler(request: Request, exc: errors.CodmError):
        if isinstance(exc, errors.GatewayError):
            detail = {"detail": str(exc), "attempts": exc.attempts}
            if isinstance(exc, errors.RateLimitError) and exc.retry_after is not None:
                detail["retry_after"] = exc.retry_after
            return JSONResponse(detail, status_code=502)
        for exc_types, status in status_map:
            if isinstance(exc, exc_types):
                return JSONResponse({"detail": str(exc)}, status_code=status)
        return JSONResponse({"detail": str(exc)}, status_code=500)

    def resolve_table(name: Optional[str]) -> Path:
        if name is None:
            return default_table_path
        if "/" in name or "\\" in name or name.startswith("."):
            raise errors.SchemaError(name, "-", "table must be a bare file name")
        return default_table_path.parent / name

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "provider": gateway.provider.name}

    @app.get("/settings")
    def list_settings() -> list[dict]:
        return [
            {"id": s.id, "name": s.name, "tags": list(s.tags)}
            for s in kb.settings.values()
        ]

    @app.post("/encounters/roll")
    def roll(body: RollRequest) -> dict:
        setting = kb.setting(body.setting_id)
        table = load_encounter_table(resolve_table(body.table), kb)
        encounter = roll_and_persist(table, setting, kb, store, seed=body.seed)
        return encounter_json(encounter)

    @app.get("/encounters/{encounter_id}")
    def get_encounter(encounter_id: str) -> dict:
        encounter = store.get_encounter(encounter_id)
        if encounter is None:
            raise errors.UnknownEncounterError(f"unknown encounter '{encounter_id}'")
        return encounter_json(encounter)

    @app.post("/encounters/{encounter_id}/understand")
    def understand(encounter_id: str, body: UnderstandRequest) -> dict:
        encounter = store.get_encounter(encounter_id)
        if encounter is None:
            raise errors.UnknownEncounterError(f"unknown encounter '{encounter_id}'")
        kind = VARIANT_KINDS[body.variant]
        rng = random.Random(body.seed) if body.seed is not None else random.Random()
        if kind is InterfaceKind.SUMMARIZATION:
            bundle = build_summarization_prompt(encounter, kb, registry)
        else:
            bundle = build_understanding_prompt(encounter, kb, rng, registry)
        record = gateway.generate(bundle, encounter_id=encounter_id)
        return generation_json(record, debug=body.debug)

    @app.post("/encounters/{encounter_id}/brainstorm")
    def brainstorm(encounter_id: str, body: BrainstormRequest) -> dict:
        rng = random.Random(body.seed) if body.seed is not None else None
        view = manager.open_brainstorm(encounter_id, body.include_summary, rng)
        return thread_json(view)

    @app.post("/chat")
    def open_chat(body: ChatRequest) -> dict:
        return thread_json(manager.open_chat())

    @app.get("/threads/{thread_id}")
    def get_thread(thread_id: str) -> dict:
        return thread_json(manager.thread_view(thread_id))

    @app.post("/threads/{thread_id}/messages")
    def post_message(thread_id: str, body: MessageRequest) -> dict:
        record = manager.post_user_message(thread_id, body.text, body.user_id)
        return generation_json(record)

    @app.get("/threads/{thread_id}/export")
    def export_thread(thread_id: str) -> dict:
        return manager.export_thread(thread_id)

    @app.post("/generations/{generation_id}/feedback")
    def feedback(generation_id: str, body: FeedbackRequest) -> dict:
        record = manager.record_feedback(
            generation_id, body.polarity, body.comment, body.user_id
        )
        return feedback_json(record)

    @app.get("/feedback/tallies")
    def tallies() -> dict:
        return {
            kind: {
                "positive": tally.positive,
                "negative": tally.negative,
                "total_encounters": tally.total_encounters,
            }
            for kind, tally in manager.all_tallies().items()
        }

    if config.static_dir:
        app.mount("/console", StaticFiles(directory=config.static_dir, html=True), name="console")

    return app
