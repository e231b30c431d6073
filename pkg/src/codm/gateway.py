"""Provider-agnostic chat-completion gateway.

Carries the decoding profile onto the wire unchanged, retries transient
failures with exponential backoff, and persists every generation that
returns. The mock provider keeps the whole stack runnable offline and
deterministic.
"""
from __future__ import annotations

import hashlib
import json
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Protocol

import httpx

from . import errors
from .errors import AuthError, ProviderError, RateLimitError
from .profiles import InterfaceKind
from .prompts import PromptBundle
from .store import SessionStore, StoredGeneration
from .tables import now_utc


def wire_payload(bundle: PromptBundle) -> dict:
    """The exact chat-completion request body for a bundle."""
    return {
        "model": bundle.profile.model_id,
        "messages": [{"role": m.role, "content": m.content} for m in bundle.messages],
        "temperature": bundle.profile.temperature,
        "top_p": bundle.profile.top_p,
        "frequency_penalty": bundle.profile.frequency_penalty,
        "presence_penalty": bundle.profile.presence_penalty,
        "max_tokens": bundle.profile.max_tokens,
    }


class Provider(Protocol):
    name: str

    def complete(self, bundle: PromptBundle) -> str:
        ...


class MockProvider:
    """Deterministic offline provider.

    Responses come from a canned map keyed by bundle fingerprint (or by
    `kind:<interface>`); anything unmatched gets a reply derived from the
    bundle's content hash, so identical requests always get identical text.
    """

    name = "mock"

    def __init__(self, canned: Optional[dict[str, str]] = None):
        self.canned = dict(canned or {})

    @classmethod
    def from_file(cls, path: Path | str) -> "MockProvider":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def complete(self, bundle: PromptBundle) -> str:
        fingerprint = bundle.fingerprint()
        if fingerprint in self.canned:
            return self.canned[fingerprint]
        kind_key = f"kind:{bundle.interface_kind.value}"
        if kind_key in self.canned:
            return self.canned[kind_key]
        digest = hashlib.sha256(fingerprint.encode()).hexdigest()[:8]
        return f"[mock {bundle.interface_kind.value} {digest}] " + _MOCK_FLAVOR[bundle.interface_kind]


_MOCK_FLAVOR = {
    InterfaceKind.SUMMARIZATION: "The forest is quiet, and the pack is not.",
    InterfaceKind.UNDERSTANDING: "Watch the tree line: these creatures move like light on water.",
    InterfaceKind.BRAINSTORM: "Consider opening on the ford, where the crossing forces a choice.",
    InterfaceKind.OPEN_CHAT: "Ask me another, traveler.",
}


class OpenAICompatProvider:
    """Chat-completion client for any provider speaking the common HTTP shape.

    Credentials come from the environment (never from config files); the
    base URL and model ids are operator configuration.
    """

    def __init__(
        self,
        base_url: str,
        api_key: Optional[str],
        *,
        timeout_s: float = 120.0,
        name: str = "openai-compatible",
    ):
        self.name = name
        self._client = httpx.Client(base_url=base_url.rstrip("/"), timeout=timeout_s)
        self._api_key = api_key

    def complete(self, bundle: PromptBundle) -> str:
        if not bundle.profile.model_id:
            raise errors.ConfigError(
                f"no model configured for interface {bundle.interface_kind.value!r}"
            )
        headers = {}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        try:
            response = self._client.post(
                "/chat/completions", json=wire_payload(bundle), headers=headers
            )
        except httpx.TimeoutException as exc:
            raise errors.TimeoutError(f"provider timed out: {exc}") from exc
        except httpx.HTTPError as exc:
            raise ProviderError(f"transport failure: {exc}") from exc

        if response.status_code in (401, 403):
            raise AuthError(f"provider rejected credentials ({response.status_code})")
        if response.status_code == 429:
            retry_after = response.headers.get("Retry-After")
            raise RateLimitError(
                "provider rate limit",
                retry_after=float(retry_after) if retry_after else None,
            )
        if response.status_code >= 500:
            raise ProviderError(f"upstream failure ({response.status_code})", retryable=True)
        if response.status_code >= 400:
            # content/validation rejection: retrying the same payload cannot help
            raise ProviderError(
                f"provider rejected request ({response.status_code}): {response.text[:200]}",
                retryable=False,
            )
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise ProviderError(f"malformed provider response: {exc}", retryable=False) from exc


@dataclass(frozen=True)
class GenerationRecord:
    id: str
    bundle: PromptBundle
    output_text: str
    provider: str
    latency_ms: int
    attempts: int
    created_at: str
    thread_id: Optional[str] = None
    encounter_id: Optional[str] = None


class Gateway:
    """Runs generations with retry, a global concurrency cap, and
    write-once persistence."""

    def __init__(
        self,
        provider: Provider,
        store: SessionStore,
        *,
        max_attempts: int = 3,
        backoff_base_ms: int = 500,
        max_concurrency: int = 4,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.provider = provider
        self.store = store
        self.max_attempts = max_attempts
        self.backoff_base_ms = backoff_base_ms
        self._sleep = sleep
        self._slots = threading.Semaphore(max_concurrency)

    def generate(
        self,
        bundle: PromptBundle,
        *,
        thread_id: Optional[str] = None,
        encounter_id: Optional[str] = None,
        generation_id: Optional[str] = None,
    ) -> GenerationRecord:
        """Send the bundle, retrying transient failures up to the cap.

        Auth and content errors are never retried. The returned record is
        already persisted (idempotently, keyed on the generation id).
        """
        gen_id = generation_id or f"gen-{uuid.uuid4().hex[:12]}"
        attempt = 0
        started = time.monotonic()
        while True:
            attempt += 1
            try:
                with self._slots:
                    output = self.provider.complete(bundle)
                break
            except errors.GatewayError as exc:
                exc.attempts = attempt
                if not exc.retryable or attempt >= self.max_attempts:
                    raise
                delay = self.backoff_base_ms * (2 ** (attempt - 1)) / 1000.0
                if isinstance(exc, RateLimitError) and exc.retry_after is not None:
                    delay = max(delay, exc.retry_after)
                self._sleep(delay)

        latency_ms = int((time.monotonic() - started) * 1000)
        record = GenerationRecord(
            id=gen_id,
            bundle=bundle,
            output_text=output,
            provider=self.provider.name,
            latency_ms=latency_ms,
            attempts=attempt,
            created_at=now_utc(),
            thread_id=thread_id,
            encounter_id=encounter_id,
        )
        self.store.save_generation(
            StoredGeneration(
                id=record.id,
                kind=bundle.interface_kind.value,
                encounter_id=encounter_id,
                thread_id=thread_id,
                request_messages=bundle.messages,
                profile=bundle.profile,
                output_text=output,
                provider=record.provider,
                latency_ms=latency_ms,
                attempts=attempt,
                created_at=record.created_at,
            )
        )
        return record
