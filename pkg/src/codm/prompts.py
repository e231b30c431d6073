"""Prompt assembly for the four assistant interfaces.

The templates below are load-bearing: the golden tests pin their exact bytes,
including header underline lengths and the trailing space at the end of the
first understanding instruction line. Edit with care.
"""
from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Optional

from .errors import ProfileMismatchError
from .kb import ABILITY_NAMES, KnowledgeBase, MonsterStatBlock, Setting
from .phrases import sample_phrases
from .profiles import DecodingProfile, InterfaceKind, ProfileRegistry, default_registry
from .tables import Encounter

ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")
        if not self.content:
            raise ValueError("message content must be non-empty")


@dataclass(frozen=True)
class PromptBundle:
    messages: tuple[ChatMessage, ...]
    profile: DecodingProfile
    interface_kind: InterfaceKind

    def __post_init__(self):
        if not self.messages:
            raise ValueError("a prompt bundle needs at least one message")

    def fingerprint(self) -> str:
        """Stable content hash, used to key canned mock responses."""
        h = hashlib.sha256()
        h.update(self.interface_kind.value.encode())
        for m in self.messages:
            h.update(b"\x00" + m.role.encode() + b"\x01" + m.content.encode())
        return h.hexdigest()


def make_bundle(
    kind: InterfaceKind,
    messages: tuple[ChatMessage, ...],
    registry: Optional[ProfileRegistry] = None,
    profile: Optional[DecodingProfile] = None,
    allow_override: bool = False,
) -> PromptBundle:
    """Attach the registered profile for `kind`, or an explicit override."""
    registered = (registry or default_registry()).get(kind)
    if profile is None or profile == registered:
        return PromptBundle(messages=messages, profile=registered, interface_kind=kind)
    if not allow_override:
        raise ProfileMismatchError(
            f"profile for {kind.value} does not match the registered one; "
            "pass allow_override=True to use it anyway"
        )
    return PromptBundle(messages=messages, profile=profile, interface_kind=kind)


SUMMARIZE_INSTRUCTION = (
    "Summarize the following D&D setting and monsters for a Dungeon Master's "
    "notes without mentioning game stats."
)

# The trailing space on the first line is part of the template.
UNDERSTAND_INSTRUCTIONS = (
    "Your name is Calypso, and your job is to help the Dungeon Master with an encounter. \n"
    "Your task is to help the DM understand the setting and creatures as a group, "
    "focusing mainly on appearance and how they act.\n"
    "Especially focus on what makes each creature stand out.\n"
    "Avoid mentioning game stats.\n"
    "You may use information from common sense, mythology, and culture.\n"
    "If there are multiple creatures, conclude by mentioning how they interact."
)

BRAINSTORM_SYSTEM = (
    "You are a creative D&D player and DM named Calypso.\n"
    "Avoid mentioning game stats. You may use information from common sense, "
    "mythology, and culture."
)

BRAINSTORM_TASK = "Your job is to help brainstorm some ideas for the encounter."

SUMMARY_CARRYOVER_PREFIX = "Here's what I have so far:"

LORE_FALLBACK_TEMPLATE = (
    "Calypso, please provide the DM with information about the {name} "
    "using information from {phrases}"
)

DEFAULT_PERSONA = (
    "You are Calypso, a well-read sphinx who is happy to chat about Dungeons & "
    "Dragons and anything else a tabletop group wonders about: monsters, story "
    "hooks, names, or the wider world of fantasy. Speak warmly, with a light "
    "riddling humor. Avoid mentioning game stats unless asked. You may use "
    "information from common sense, mythology, and culture."
)


def _headed(title: str, body: str, underline: str) -> str:
    return f"{title}\n{underline * len(title)}\n{body}"


def _speed_text(speeds) -> str:
    parts = []
    if "walk" in speeds:
        parts.append(f"{speeds['walk']} ft.")
    for mode in sorted(m for m in speeds if m != "walk"):
        parts.append(f"{mode} {speeds[mode]} ft.")
    return ", ".join(parts)


def _scores_line(scores) -> str:
    return ", ".join(f"{name.upper()} {scores[name]}" for name in ABILITY_NAMES)


def _language_text(language) -> str:
    if language.understands_only:
        return f"understands {language.name} but can't speak it"
    return language.name


def creature_block(monster: MonsterStatBlock, rng: Optional[random.Random] = None) -> str:
    """One creature subsection: name header, statistics, ability prose, lore.

    With an rng, a monster with empty lore gets the fallback instruction line
    (with a fresh phrase sample) in place of its lore paragraph; without one,
    empty lore is simply omitted.
    """
    stats = [f"Armor Class: {monster.armor_class}", f"Hit Points: {monster.hit_points}"]
    if monster.speeds:
        stats.append(f"Speed: {_speed_text(monster.speeds)}")
    stats.append(_scores_line(monster.ability_scores))
    if monster.skills:
        stats.append("Skills: " + ", ".join(monster.skills))
    if monster.languages:
        stats.append("Languages: " + ", ".join(_language_text(l) for l in monster.languages))

    paragraphs = [_headed(monster.name, "\n".join(stats), "-")]
    for ability in monster.abilities:
        paragraphs.append(f"{ability.name}. {ability.text}")
    if monster.lore:
        paragraphs.append(monster.lore)
    elif rng is not None:
        phrases = sample_phrases(rng).render()
        paragraphs.append(LORE_FALLBACK_TEMPLATE.format(name=monster.name, phrases=phrases))
    return "\n\n".join(paragraphs)


def encounter_context(
    encounter: Encounter, kb: KnowledgeBase, rng: Optional[random.Random] = None
) -> str:
    """The Setting and Creatures sections shared by the prompt families."""
    setting = kb.setting(encounter.setting_id)
    blocks = [creature_block(kb.monster(mid), rng) for mid, _ in encounter.rolled]
    return (
        _headed("Setting", setting.description, "=")
        + "\n\n"
        + _headed("Creatures", "\n\n".join(blocks) if blocks else "", "=")
    )


def build_summarization_prompt(
    encounter: Encounter,
    kb: KnowledgeBase,
    registry: Optional[ProfileRegistry] = None,
) -> PromptBundle:
    """Completion-style summarization prompt ending at the Summary header."""
    text = (
        SUMMARIZE_INSTRUCTION
        + "\n\n"
        + encounter_context(encounter, kb)
        + "\n\nSummary\n=======\n"
    )
    return make_bundle(
        InterfaceKind.SUMMARIZATION, (ChatMessage("user", text),), registry
    )


def build_understanding_prompt(
    encounter: Encounter,
    kb: KnowledgeBase,
    rng: random.Random,
    registry: Optional[ProfileRegistry] = None,
) -> PromptBundle:
    """Abstractive-understanding prompt; lore-less monsters get the fallback
    instruction line, each with an independently sampled phrase list."""
    text = (
        UNDERSTAND_INSTRUCTIONS
        + f"\n\nEncounter: {encounter.rendered}\n\n"
        + encounter_context(encounter, kb, rng)
        + "\n\nSummary\n=======\n"
    )
    return make_bundle(
        InterfaceKind.UNDERSTANDING, (ChatMessage("user", text),), registry
    )


def build_brainstorm_seed(
    encounter: Encounter,
    kb: KnowledgeBase,
    prior_summary: Optional[str],
    rng: random.Random,
    registry: Optional[ProfileRegistry] = None,
) -> PromptBundle:
    """Seed messages for a focused brainstorming thread; an earlier
    understanding text, when present, rides along as a second user message."""
    user_text = (
        f"I'm running this D&D encounter: {encounter.rendered}\n\n"
        + encounter_context(encounter, kb, rng)
        + "\n\n"
        + BRAINSTORM_TASK
    )
    messages = [ChatMessage("system", BRAINSTORM_SYSTEM), ChatMessage("user", user_text)]
    if prior_summary is not None:
        messages.append(ChatMessage("user", f"{SUMMARY_CARRYOVER_PREFIX}\n{prior_summary}"))
    return make_bundle(InterfaceKind.BRAINSTORM, tuple(messages), registry)


def build_open_chat_seed(
    persona_config: str,
    registry: Optional[ProfileRegistry] = None,
) -> PromptBundle:
    """Open-domain chat seed: just the operator-configured persona."""
    if not persona_config:
        raise ValueError("persona_config must be non-empty")
    return make_bundle(
        InterfaceKind.OPEN_CHAT, (ChatMessage("system", persona_config),), registry
    )
