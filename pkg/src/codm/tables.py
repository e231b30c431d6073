"""Weighted encounter tables and random encounter rolls."""
from __future__ import annotations

import hashlib
import random
import uuid
from bisect import bisect_right
from dataclasses import dataclass
from datetime import datetime, timezone
from itertools import accumulate
from pathlib import Path
from typing import TYPE_CHECKING, Optional

import yaml

from .dice import DiceExpr, parse_dice, roll_dice
from .errors import EmptyTableError, SchemaError
from .kb import KnowledgeBase, Setting

if TYPE_CHECKING:
    from .store import SessionStore


@dataclass(frozen=True)
class EncounterTableEntry:
    weight: int
    monsters: tuple[tuple[str, DiceExpr], ...]
    flavor: Optional[str] = None


@dataclass(frozen=True)
class Encounter:
    id: str
    setting_id: str
    rolled: tuple[tuple[str, int], ...]
    created_at: str
    rendered: str


def now_utc() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def load_encounter_table(path: Path | str, kb: KnowledgeBase) -> list[EncounterTableEntry]:
    """Load an operator-authored table and resolve every monster id up front."""
    path = Path(path)
    file = str(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise SchemaError(file, "-", "table file does not exist") from None
    except yaml.YAMLError as exc:
        raise SchemaError(file, "-", f"invalid YAML: {exc}") from exc
    if not isinstance(data, list):
        raise SchemaError(file, "-", "top level must be a list of entries")

    entries: list[EncounterTableEntry] = []
    for i, raw in enumerate(data):
        if not isinstance(raw, dict):
            raise SchemaError(file, f"[{i}]", "entry must be a mapping")
        weight = raw.get("weight", 1)
        if isinstance(weight, bool) or not isinstance(weight, int) or weight < 1:
            raise SchemaError(file, f"[{i}].weight", "must be an integer >= 1")
        monsters_raw = raw.get("monsters")
        if not isinstance(monsters_raw, list) or not monsters_raw:
            raise SchemaError(file, f"[{i}].monsters", "must be a non-empty list")
        groups = []
        for j, group in enumerate(monsters_raw):
            if not isinstance(group, dict):
                raise SchemaError(file, f"[{i}].monsters[{j}]", "must be a mapping")
            monster_id = group.get("id")
            if not isinstance(monster_id, str) or not monster_id:
                raise SchemaError(file, f"[{i}].monsters[{j}].id", "must be a non-empty string")
            kb.monster(monster_id)  # raises UnresolvedMonsterError
            quantity = group.get("quantity", "1")
            if isinstance(quantity, int) and not isinstance(quantity, bool):
                quantity = str(quantity)
            if not isinstance(quantity, str):
                raise SchemaError(file, f"[{i}].monsters[{j}].quantity", "must be a dice string")
            groups.append((monster_id, parse_dice(quantity)))
        flavor = raw.get("flavor")
        if flavor is not None and not isinstance(flavor, str):
            raise SchemaError(file, f"[{i}].flavor", "must be a string")
        entries.append(EncounterTableEntry(weight=weight, monsters=tuple(groups), flavor=flavor))
    return entries


def choose_entry(table: list[EncounterTableEntry], rng: random.Random) -> EncounterTableEntry:
    """Pick an entry with probability weight / sum(weights), using integer
    arithmetic so the probabilities are exact."""
    if not table:
        raise EmptyTableError("encounter table is empty")
    cumulative = list(accumulate(entry.weight for entry in table))
    return table[bisect_right(cumulative, rng.randrange(cumulative[-1]))]


def render_groups(rolled: tuple[tuple[str, int], ...], kb: KnowledgeBase) -> str:
    return ", ".join(f"{qty} x {kb.monster(mid).name}" for mid, qty in rolled)


def roll_encounter(
    table: list[EncounterTableEntry],
    setting: Setting,
    kb: KnowledgeBase,
    rng: random.Random,
    *,
    encounter_id: str | None = None,
    store: "SessionStore | None" = None,
) -> Encounter:
    """Roll one random encounter bound to a setting.

    Each quantity expression is rolled independently; groups that roll zero
    are omitted. Persists through the store when one is supplied.
    """
    entry = choose_entry(table, rng)
    rolled = []
    for monster_id, quantity in entry.monsters:
        kb.monster(monster_id)
        count = roll_dice(quantity, rng)
        if count >= 1:
            rolled.append((monster_id, count))
    rolled = tuple(rolled)
    encounter = Encounter(
        id=encounter_id or f"enc-{uuid.uuid4().hex[:12]}",
        setting_id=setting.id,
        rolled=rolled,
        created_at=now_utc(),
        rendered=render_groups(rolled, kb),
    )
    if store is not None:
        encounter = store.save_encounter(encounter)
    return encounter


def seeded_encounter_id(setting_id: str, table_digest: str, seed: int) -> str:
    """Stable id for seeded rolls, so repeating a seed returns the same
    persisted encounter instead of a duplicate row."""
    raw = f"{setting_id}|{table_digest}|{seed}".encode()
    return "enc-" + hashlib.sha256(raw).hexdigest()[:12]


def table_digest(table: list[EncounterTableEntry]) -> str:
    raw = "::".join(
        f"{e.weight}|" + ",".join(f"{mid}x{expr.render()}" for mid, expr in e.monsters)
        for e in table
    )
    return hashlib.sha256(raw.encode()).hexdigest()[:12]


def roll_and_persist(
    table: list[EncounterTableEntry],
    setting: Setting,
    kb: KnowledgeBase,
    store: "SessionStore",
    seed: int | None = None,
) -> Encounter:
    """Roll with optional determinism: a fixed seed always produces the same
    encounter (same id, same groups) and is persisted exactly once."""
    if seed is None:
        return roll_encounter(table, setting, kb, random.Random(), store=store)
    encounter_id = seeded_encounter_id(setting.id, table_digest(table), seed)
    existing = store.get_encounter(encounter_id)
    if existing is not None:
        return existing
    return roll_encounter(
        table, setting, kb, random.Random(seed), encounter_id=encounter_id, store=store
    )
