"""Embedded single-file store for encounters, threads, messages, generations,
and feedback.

One connection guarded by a re-entrant lock; WAL journaling so committed rows
survive a process kill. All writes are idempotent on their primary key.
"""
from __future__ import annotations

import json
import sqlite3
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import DuplicateFeedbackError
from .profiles import DecodingProfile, InterfaceKind
from .prompts import ChatMessage
from .tables import Encounter, now_utc

_SCHEMA = """
CREATE TABLE IF NOT EXISTS encounters (
    id TEXT PRIMARY KEY,
    setting_id TEXT NOT NULL,
    rolled TEXT NOT NULL,
    rendered TEXT NOT NULL,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS threads (
    id TEXT PRIMARY KEY,
    kind TEXT NOT NULL,
    encounter_id TEXT,
    visibility TEXT NOT NULL,
    seed_len INTEGER NOT NULL,
    profile TEXT NOT NULL,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS messages (
    thread_id TEXT NOT NULL,
    seq INTEGER NOT NULL,
    role TEXT NOT NULL,
    content TEXT NOT NULL,
    user_id TEXT,
    created_at TEXT NOT NULL,
    PRIMARY KEY (thread_id, seq)
);
CREATE TABLE IF NOT EXISTS generations (
    id TEXT PRIMARY KEY,
    kind TEXT NOT NULL,
    encounter_id TEXT,
    thread_id TEXT,
    request_messages TEXT NOT NULL,
    profile TEXT NOT NULL,
    output_text TEXT NOT NULL,
    provider TEXT NOT NULL,
    latency_ms INTEGER NOT NULL,
    attempts INTEGER NOT NULL,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS feedback (
    id TEXT PRIMARY KEY,
    generation_id TEXT NOT NULL,
    user_id TEXT NOT NULL,
    polarity TEXT NOT NULL,
    comment TEXT,
    created_at TEXT NOT NULL,
    UNIQUE (generation_id, user_id)
);
"""


@dataclass(frozen=True)
class StoredMessage:
    thread_id: str
    seq: int
    role: str
    content: str
    user_id: Optional[str]
    created_at: str


@dataclass(frozen=True)
class ThreadRecord:
    id: str
    kind: str
    encounter_id: Optional[str]
    visibility: str
    seed_len: int
    profile: DecodingProfile
    created_at: str


@dataclass(frozen=True)
class StoredGeneration:
    id: str
    kind: str
    encounter_id: Optional[str]
    thread_id: Optional[str]
    request_messages: tuple[ChatMessage, ...]
    profile: DecodingProfile
    output_text: str
    provider: str
    latency_ms: int
    attempts: int
    created_at: str


def _profile_to_json(profile: DecodingProfile) -> str:
    return json.dumps(
        {
            "temperature": profile.temperature,
            "top_p": profile.top_p,
            "frequency_penalty": profile.frequency_penalty,
            "presence_penalty": profile.presence_penalty,
            "max_tokens": profile.max_tokens,
            "model_id": profile.model_id,
        }
    )


def _profile_from_json(raw: str) -> DecodingProfile:
    return DecodingProfile(**json.loads(raw))


def _messages_to_json(messages: tuple[ChatMessage, ...]) -> str:
    return json.dumps([{"role": m.role, "content": m.content} for m in messages])


def _messages_from_json(raw: str) -> tuple[ChatMessage, ...]:
    return tuple(ChatMessage(m["role"], m["content"]) for m in json.loads(raw))


class SessionStore:
    def __init__(self, path: str | Path = ":memory:"):
        self.path = str(path)
        self._conn = sqlite3.connect(self.path, check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._lock = threading.RLock()
        with self._lock, self._conn:
            if self.path != ":memory:":
                self._conn.execute("PRAGMA journal_mode=WAL")
            self._conn.execute("PRAGMA foreign_keys=ON")
            self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # --- encounters ---

    def save_encounter(self, encounter: Encounter) -> Encounter:
        """Idempotent on id: re-saving returns the originally stored row."""
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT OR IGNORE INTO encounters (id, setting_id, rolled, rendered, created_at)"
                " VALUES (?, ?, ?, ?, ?)",
                (
                    encounter.id,
                    encounter.setting_id,
                    json.dumps([list(g) for g in encounter.rolled]),
                    encounter.rendered,
                    encounter.created_at,
                ),
            )
        stored = self.get_encounter(encounter.id)
        assert stored is not None
        return stored

    def get_encounter(self, encounter_id: str) -> Optional[Encounter]:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM encounters WHERE id = ?", (encounter_id,)
            ).fetchone()
        if row is None:
            return None
        return Encounter(
            id=row["id"],
            setting_id=row["setting_id"],
            rolled=tuple((mid, qty) for mid, qty in json.loads(row["rolled"])),
            created_at=row["created_at"],
            rendered=row["rendered"],
        )

    # --- threads and messages ---

    def create_thread(
        self,
        thread_id: str,
        kind: str,
        encounter_id: Optional[str],
        visibility: str,
        seed_messages: tuple[ChatMessage, ...],
        profile: DecodingProfile,
    ) -> ThreadRecord:
        created = now_utc()
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO threads (id, kind, encounter_id, visibility, seed_len, profile, created_at)"
                " VALUES (?, ?, ?, ?, ?, ?, ?)",
                (thread_id, kind, encounter_id, visibility, len(seed_messages),
                 _profile_to_json(profile), created),
            )
            for seq, message in enumerate(seed_messages):
                self._conn.execute(
                    "INSERT INTO messages (thread_id, seq, role, content, user_id, created_at)"
                    " VALUES (?, ?, ?, ?, ?, ?)",
                    (thread_id, seq, message.role, message.content, None, created),
                )
        record = self.get_thread(thread_id)
        assert record is not None
        return record

    def get_thread(self, thread_id: str) -> Optional[ThreadRecord]:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM threads WHERE id = ?", (thread_id,)
            ).fetchone()
        if row is None:
            return None
        return ThreadRecord(
            id=row["id"],
            kind=row["kind"],
            encounter_id=row["encounter_id"],
            visibility=row["visibility"],
            seed_len=row["seed_len"],
            profile=_profile_from_json(row["profile"]),
            created_at=row["created_at"],
        )

    def list_threads(self, kind: Optional[str] = None) -> list[ThreadRecord]:
        with self._lock:
            if kind is None:
                rows = self._conn.execute("SELECT id FROM threads ORDER BY rowid").fetchall()
            else:
                rows = self._conn.execute(
                    "SELECT id FROM threads WHERE kind = ? ORDER BY rowid", (kind,)
                ).fetchall()
        return [self.get_thread(row["id"]) for row in rows]

    def append_message(
        self, thread_id: str, role: str, content: str, user_id: Optional[str] = None
    ) -> StoredMessage:
        with self._lock, self._conn:
            row = self._conn.execute(
                "SELECT COALESCE(MAX(seq), -1) + 1 AS next FROM messages WHERE thread_id = ?",
                (thread_id,),
            ).fetchone()
            seq = row["next"]
            created = now_utc()
            self._conn.execute(
                "INSERT INTO messages (thread_id, seq, role, content, user_id, created_at)"
                " VALUES (?, ?, ?, ?, ?, ?)",
                (thread_id, seq, role, content, user_id, created),
            )
        return StoredMessage(thread_id, seq, role, content, user_id, created)

    def list_messages(self, thread_id: str) -> list[StoredMessage]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT * FROM messages WHERE thread_id = ? ORDER BY seq", (thread_id,)
            ).fetchall()
        return [
            StoredMessage(
                thread_id=row["thread_id"],
                seq=row["seq"],
                role=row["role"],
                content=row["content"],
                user_id=row["user_id"],
                created_at=row["created_at"],
            )
            for row in rows
        ]

    # --- generations ---

    def save_generation(self, gen: StoredGeneration) -> None:
        """Idempotent on the generation id (the request id)."""
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT OR IGNORE INTO generations"
                " (id, kind, encounter_id, thread_id, request_messages, profile,"
                "  output_text, provider, latency_ms, attempts, created_at)"
                " VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
                (
                    gen.id,
                    gen.kind,
                    gen.encounter_id,
                    gen.thread_id,
                    _messages_to_json(gen.request_messages),
                    _profile_to_json(gen.profile),
                    gen.output_text,
                    gen.provider,
                    gen.latency_ms,
                    gen.attempts,
                    gen.created_at,
                ),
            )

    def _generation_from_row(self, row: sqlite3.Row) -> StoredGeneration:
        return StoredGeneration(
            id=row["id"],
            kind=row["kind"],
            encounter_id=row["encounter_id"],
            thread_id=row["thread_id"],
            request_messages=_messages_from_json(row["request_messages"]),
            profile=_profile_from_json(row["profile"]),
            output_text=row["output_text"],
            provider=row["provider"],
            latency_ms=row["latency_ms"],
            attempts=row["attempts"],
            created_at=row["created_at"],
        )

    def get_generation(self, generation_id: str) -> Optional[StoredGeneration]:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM generations WHERE id = ?", (generation_id,)
            ).fetchone()
        return None if row is None else self._generation_from_row(row)

    def list_generations(self, thread_id: Optional[str] = None) -> list[StoredGeneration]:
        with self._lock:
            if thread_id is None:
                rows = self._conn.execute("SELECT * FROM generations ORDER BY rowid").fetchall()
            else:
                rows = self._conn.execute(
                    "SELECT * FROM generations WHERE thread_id = ? ORDER BY rowid", (thread_id,)
                ).fetchall()
        return [self._generation_from_row(row) for row in rows]

    def latest_understanding(self, encounter_id: str) -> Optional[StoredGeneration]:
        """Most recent distilled-understanding text for an encounter, from
        either understanding variant."""
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM generations WHERE encounter_id = ? AND kind IN (?, ?)"
                " ORDER BY rowid DESC LIMIT 1",
                (
                    encounter_id,
                    InterfaceKind.SUMMARIZATION.value,
                    InterfaceKind.UNDERSTANDING.value,
                ),
            ).fetchone()
        return None if row is None else self._generation_from_row(row)

    # --- feedback ---

    def save_feedback(
        self,
        feedback_id: str,
        generation_id: str,
        user_id: str,
        polarity: str,
        comment: Optional[str],
    ) -> str:
        created = now_utc()
        try:
            with self._lock, self._conn:
                self._conn.execute(
                    "INSERT INTO feedback (id, generation_id, user_id, polarity, comment, created_at)"
                    " VALUES (?, ?, ?, ?, ?, ?)",
                    (feedback_id, generation_id, user_id, polarity, comment, created),
                )
        except sqlite3.IntegrityError:
            raise DuplicateFeedbackError(
                f"user {user_id!r} already left feedback on generation {generation_id!r}"
            ) from None
        return created

    def tally(self, kind: str) -> tuple[int, int, int]:
        """(positive, negative, distinct encounters) for one interface kind."""
        with self._lock:
            pos, neg = self._conn.execute(
                "SELECT"
                "  SUM(CASE WHEN f.polarity = 'positive' THEN 1 ELSE 0 END),"
                "  SUM(CASE WHEN f.polarity = 'negative' THEN 1 ELSE 0 END)"
                " FROM feedback f JOIN generations g ON g.id = f.generation_id"
                " WHERE g.kind = ?",
                (kind,),
            ).fetchone()
            encounters = self._conn.execute(
                "SELECT COUNT(DISTINCT encounter_id) FROM generations"
                " WHERE kind = ? AND encounter_id IS NOT NULL",
                (kind,),
            ).fetchone()[0]
        return (pos or 0, neg or 0, encounters)

    def scan_feedback_rows(self) -> list[tuple[str, str, str]]:
        """Raw (generation kind, polarity, user) rows for oracle recounts."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT g.kind AS kind, f.polarity AS polarity, f.user_id AS user_id"
                " FROM feedback f JOIN generations g ON g.id = f.generation_id"
                " ORDER BY f.rowid"
            ).fetchall()
        return [(row["kind"], row["polarity"], row["user_id"]) for row in rows]
