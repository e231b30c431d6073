"""Decoding parameter profiles, one per assistant interface."""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .errors import UnknownKindError


class InterfaceKind(str, Enum):
    SUMMARIZATION = "summarization"
    UNDERSTANDING = "understanding"
    BRAINSTORM = "brainstorm"
    OPEN_CHAT = "open_chat"


@dataclass(frozen=True)
class DecodingProfile:
    temperature: float
    top_p: float
    frequency_penalty: float
    presence_penalty: float
    max_tokens: int = 1024
    model_id: str = ""

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")

    def sampling_params(self) -> tuple[float, float, float, float]:
        return (self.temperature, self.top_p, self.frequency_penalty, self.presence_penalty)


# Published sampling parameters for each interface. presence_penalty is only
# documented for summarization; the others use the provider-neutral 0.
STANDARD_PROFILES: dict[InterfaceKind, DecodingProfile] = {
    InterfaceKind.SUMMARIZATION: DecodingProfile(0.9, 0.95, 1.0, 1.0),
    InterfaceKind.UNDERSTANDING: DecodingProfile(0.8, 0.95, 0.5, 0.0),
    InterfaceKind.BRAINSTORM: DecodingProfile(1.0, 0.95, 0.3, 0.0),
    InterfaceKind.OPEN_CHAT: DecodingProfile(1.0, 0.95, 0.3, 0.0),
}


class ProfileRegistry:
    """Registered profile per interface kind; initialized with the standard
    four and adjustable (model ids, token caps) at startup."""

    def __init__(self):
        self._profiles: dict[InterfaceKind, DecodingProfile] = dict(STANDARD_PROFILES)

    def register(self, kind: InterfaceKind, profile: DecodingProfile) -> None:
        self._profiles[InterfaceKind(kind)] = profile

    def get(self, kind: InterfaceKind | str) -> DecodingProfile:
        try:
            return replace(self._profiles[InterfaceKind(kind)])
        except (KeyError, ValueError):
            raise UnknownKindError(f"no profile registered for kind {kind!r}") from None


def default_registry() -> ProfileRegistry:
    return ProfileRegistry()
