"""Thread lifecycles, history accumulation, and feedback recording.

Brainstorm threads are private and bound to one encounter; open-chat threads
are public and free-standing. Work is serialized per thread (FIFO, one
in-flight generation) while different threads proceed concurrently.
"""
from __future__ import annotations

import random
import threading
import uuid
from dataclasses import dataclass
from typing import Optional

from .errors import (
    NoSummaryError,
    ThreadBusyError,
    ToolCommandError,
    UnknownEncounterError,
    UnknownGenerationError,
    UnknownThreadError,
)
from .gateway import Gateway, GenerationRecord
from .kb import KnowledgeBase
from .profiles import InterfaceKind, ProfileRegistry, default_registry
from .prompts import ChatMessage, PromptBundle, build_brainstorm_seed, build_open_chat_seed
from .store import SessionStore, StoredMessage

POLARITIES = ("positive", "negative")


@dataclass(frozen=True)
class FeedbackRecord:
    id: str
    generation_id: str
    user_id: str
    polarity: str
    comment: Optional[str]
    created_at: str


@dataclass(frozen=True)
class FeedbackTally:
    positive: int
    negative: int
    total_encounters: int


@dataclass(frozen=True)
class ThreadView:
    id: str
    kind: str
    encounter_id: Optional[str]
    visibility: str
    seed_len: int
    messages: tuple[StoredMessage, ...]
    participants: tuple[str, ...]

    @property
    def round_count(self) -> int:
        return sum(1 for m in self.messages[self.seed_len:] if m.role == "assistant")


def _token_count(messages: list[ChatMessage]) -> int:
    return sum(len(m.content.split()) for m in messages)


class SessionManager:
    def __init__(
        self,
        store: SessionStore,
        gateway: Gateway,
        kb: KnowledgeBase,
        registry: Optional[ProfileRegistry] = None,
        *,
        persona: str,
        token_budget: int = 3000,
        max_pending_per_thread: int = 8,
    ):
        self.store = store
        self.gateway = gateway
        self.kb = kb
        self.registry = registry or default_registry()
        self.persona = persona
        self.token_budget = token_budget
        self.max_pending = max_pending_per_thread
        self._guard = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}
        self._pending: dict[str, int] = {}

    # --- lifecycle ---

    def open_brainstorm(
        self,
        encounter_id: str,
        include_summary: bool = False,
        rng: Optional[random.Random] = None,
    ) -> ThreadView:
        encounter = self.store.get_encounter(encounter_id)
        if encounter is None:
            raise UnknownEncounterError(f"unknown encounter '{encounter_id}'")
        prior_summary = None
        if include_summary:
            prior = self.store.latest_understanding(encounter_id)
            if prior is None:
                raise NoSummaryError(
                    f"encounter '{encounter_id}' has no stored understanding to carry over"
                )
            prior_summary = prior.output_text
        bundle = build_brainstorm_seed(
            encounter, self.kb, prior_summary, rng or random.Random(), self.registry
        )
        thread_id = f"thr-{uuid.uuid4().hex[:12]}"
        self.store.create_thread(
            thread_id, "brainstorm", encounter_id, "private", bundle.messages, bundle.profile
        )
        return self.thread_view(thread_id)

    def open_chat(self) -> ThreadView:
        bundle = build_open_chat_seed(self.persona, self.registry)
        thread_id = f"thr-{uuid.uuid4().hex[:12]}"
        self.store.create_thread(
            thread_id, "open_chat", None, "public", bundle.messages, bundle.profile
        )
        return self.thread_view(thread_id)

    def thread_view(self, thread_id: str) -> ThreadView:
        record = self.store.get_thread(thread_id)
        if record is None:
            raise UnknownThreadError(f"unknown thread '{thread_id}'")
        messages = tuple(self.store.list_messages(thread_id))
        participants = tuple(
            sorted({m.user_id for m in messages if m.user_id is not None})
        )
        return ThreadView(
            id=record.id,
            kind=record.kind,
            encounter_id=record.encounter_id,
            visibility=record.visibility,
            seed_len=record.seed_len,
            messages=messages,
            participants=participants,
        )

    # --- conversation ---

    def _thread_lock(self, thread_id: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(thread_id, threading.Lock())

    def request_messages(self, thread_id: str) -> tuple[ChatMessage, ...]:
        """The exact message list a generation for this thread would send.

        When accumulated history exceeds the token budget, the oldest
        post-seed exchange pairs are dropped; the seed never is. Deterministic
        given the persisted history, so replays match what went on the wire.
        """
        record = self.store.get_thread(thread_id)
        if record is None:
            raise UnknownThreadError(f"unknown thread '{thread_id}'")
        messages = [ChatMessage(m.role, m.content) for m in self.store.list_messages(thread_id)]
        seed_len = record.seed_len
        while _token_count(messages) > self.token_budget and len(messages) - seed_len > 1:
            del messages[seed_len:seed_len + 2]
        return tuple(messages)

    def post_user_message(
        self, thread_id: str, text: str, user_id: Optional[str] = None
    ) -> GenerationRecord:
        """Append a user turn, generate the assistant reply, persist both.

        Strictly FIFO within a thread with one in-flight generation; a failed
        generation leaves the user message in place so reposting the same text
        retries instead of duplicating it.
        """
        if not text or not text.strip():
            raise ValueError("message text must be non-empty")
        if text.lstrip().startswith("!"):
            # a bot command aimed at some other tool; answering it would only
            # produce a made-up tool result
            raise ToolCommandError(
                "tool commands are not available in this thread; ask in plain language instead"
            )
        record = self.store.get_thread(thread_id)
        if record is None:
            raise UnknownThreadError(f"unknown thread '{thread_id}'")

        with self._guard:
            pending = self._pending.get(thread_id, 0)
            if pending >= self.max_pending:
                raise ThreadBusyError(
                    f"thread '{thread_id}' already has {pending} queued messages"
                )
            self._pending[thread_id] = pending + 1
        try:
            with self._thread_lock(thread_id):
                history = self.store.list_messages(thread_id)
                tail = history[-1] if history else None
                is_retry = (
                    tail is not None
                    and tail.seq >= record.seed_len
                    and tail.role == "user"
                    and tail.content == text
                )
                if not is_retry:
                    self.store.append_message(thread_id, "user", text, user_id)
                request = self.request_messages(thread_id)
                bundle = PromptBundle(
                    messages=request,
                    profile=record.profile,
                    interface_kind=InterfaceKind(record.kind),
                )
                generation = self.gateway.generate(
                    bundle, thread_id=thread_id, encounter_id=record.encounter_id
                )
                self.store.append_message(thread_id, "assistant", generation.output_text)
                return generation
        finally:
            with self._guard:
                self._pending[thread_id] -= 1

    # --- feedback ---

    def record_feedback(
        self,
        generation_id: str,
        polarity: str,
        comment: Optional[str] = None,
        user_id: str = "dm",
    ) -> FeedbackRecord:
        if polarity not in POLARITIES:
            raise ValueError(f"polarity must be one of {POLARITIES}")
        if self.store.get_generation(generation_id) is None:
            raise UnknownGenerationError(f"unknown generation '{generation_id}'")
        feedback_id = f"fbk-{uuid.uuid4().hex[:12]}"
        created = self.store.save_feedback(feedback_id, generation_id, user_id, polarity, comment)
        return FeedbackRecord(feedback_id, generation_id, user_id, polarity, comment, created)

    def tally_feedback(self, kind: InterfaceKind | str) -> FeedbackTally:
        positive, negative, encounters = self.store.tally(InterfaceKind(kind).value)
        return FeedbackTally(positive, negative, encounters)

    def all_tallies(self) -> dict[str, FeedbackTally]:
        return {kind.value: self.tally_feedback(kind) for kind in InterfaceKind}

    # --- export ---

    def export_thread(self, thread_id: str) -> dict:
        """Portable transcript for offline analysis."""
        view = self.thread_view(thread_id)
        record = self.store.get_thread(thread_id)
        return {
            "thread_id": view.id,
            "kind": view.kind,
            "encounter_id": view.encounter_id,
            "visibility": view.visibility,
            "created_at": record.created_at,
            "round_count": view.round_count,
            "messages": [
                {
                    "role": m.role,
                    "content": m.content,
                    "created_at": m.created_at,
                    "user_id": m.user_id,
                }
                for m in view.messages
            ],
        }
