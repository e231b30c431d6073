"""Monster and setting reference material: loading, validation, statistics.

One YAML file per monster or setting. The knowledge base is immutable after
load and safe to share across request handlers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import (
    DuplicateIdError,
    EmptyCorpusError,
    SchemaError,
    UnknownSettingError,
    UnresolvedMonsterError,
)

ABILITY_NAMES = ("str", "dex", "con", "int", "wis", "cha")


@dataclass(frozen=True)
class Language:
    name: str
    understands_only: bool = False


@dataclass(frozen=True)
class Ability:
    name: str
    text: str


@dataclass(frozen=True)
class MonsterStatBlock:
    id: str
    name: str
    armor_class: int
    hit_points: int
    speeds: Mapping[str, int]
    ability_scores: Mapping[str, int]
    skills: tuple[str, ...] = ()
    languages: tuple[Language, ...] = ()
    abilities: tuple[Ability, ...] = ()
    lore: str = ""
    source: str = ""


@dataclass(frozen=True)
class Setting:
    id: str
    name: str
    description: str
    tags: tuple[str, ...] = ()


@dataclass(frozen=True)
class KnowledgeBase:
    monsters: Mapping[str, MonsterStatBlock] = field(default_factory=dict)
    settings: Mapping[str, Setting] = field(default_factory=dict)

    def monster(self, monster_id: str) -> MonsterStatBlock:
        try:
            return self.monsters[monster_id]
        except KeyError:
            raise UnresolvedMonsterError(monster_id) from None

    def setting(self, setting_id: str) -> Setting:
        try:
            return self.settings[setting_id]
        except KeyError:
            raise UnknownSettingError(f"unknown setting '{setting_id}'") from None


def _field(data: Mapping[str, Any], key: str, kind: type, file: str, *, default: Any = ...) -> Any:
    if key not in data:
        if default is not ...:
            return default
        raise SchemaError(file, key, "missing required field")
    value = data[key]
    # bool is an int subclass; reject it explicitly for numeric fields
    if kind is int and isinstance(value, bool):
        raise SchemaError(file, key, f"expected integer, got {value!r}")
    if not isinstance(value, kind):
        raise SchemaError(file, key, f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _nonempty_str(data: Mapping[str, Any], key: str, file: str) -> str:
    value = _field(data, key, str, file)
    if not value.strip():
        raise SchemaError(file, key, "must be non-empty")
    return value


def _load_yaml(path: Path) -> dict:
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise SchemaError(str(path), "-", f"invalid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError(str(path), "-", "top level must be a mapping")
    return data


def load_monster_file(path: Path) -> MonsterStatBlock:
    """Parse and validate a single monster file."""
    file = str(path)
    data = _load_yaml(path)

    monster_id = _nonempty_str(data, "id", file)
    name = _nonempty_str(data, "name", file)

    armor_class = _field(data, "armor_class", int, file)
    if armor_class < 0:
        raise SchemaError(file, "armor_class", "must be >= 0")
    hit_points = _field(data, "hit_points", int, file)
    if hit_points < 1:
        raise SchemaError(file, "hit_points", "must be >= 1")

    speeds_raw = _field(data, "speeds", dict, file, default={})
    speeds: dict[str, int] = {}
    for mode, feet in speeds_raw.items():
        if not isinstance(mode, str) or isinstance(feet, bool) or not isinstance(feet, int):
            raise SchemaError(file, f"speeds.{mode}", "must map mode name to integer feet")
        if feet < 0:
            raise SchemaError(file, f"speeds.{mode}", "must be >= 0")
        speeds[mode] = feet

    scores_raw = _field(data, "ability_scores", dict, file)
    scores: dict[str, int] = {}
    for ability in ABILITY_NAMES:
        if ability not in scores_raw:
            raise SchemaError(file, f"ability_scores.{ability}", "missing required field")
        value = scores_raw[ability]
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaError(file, f"ability_scores.{ability}", "must be an integer")
        if not 1 <= value <= 30:
            raise SchemaError(file, f"ability_scores.{ability}", "must be in 1..30")
        scores[ability] = value
    for key in scores_raw:
        if key not in ABILITY_NAMES:
            raise SchemaError(file, f"ability_scores.{key}", "unknown ability name")

    skills_raw = _field(data, "skills", list, file, default=[])
    skills = []
    for i, skill in enumerate(skills_raw):
        if not isinstance(skill, str):
            raise SchemaError(file, f"skills[{i}]", "must be a string")
        skills.append(skill)

    languages_raw = _field(data, "languages", list, file, default=[])
    languages = []
    for i, lang in enumerate(languages_raw):
        if not isinstance(lang, dict):
            raise SchemaError(file, f"languages[{i}]", "must be a mapping with 'name'")
        lang_name = _nonempty_str(lang, "name", file)
        understands_only = lang.get("understands_only", False)
        if not isinstance(understands_only, bool):
            raise SchemaError(file, f"languages[{i}].understands_only", "must be a boolean")
        languages.append(Language(lang_name, understands_only))

    abilities_raw = _field(data, "abilities", list, file, default=[])
    abilities = []
    for i, ability in enumerate(abilities_raw):
        if not isinstance(ability, dict):
            raise SchemaError(file, f"abilities[{i}]", "must be a mapping with 'name' and 'text'")
        abilities.append(Ability(_nonempty_str(ability, "name", file), _nonempty_str(ability, "text", file).strip()))

    lore = _field(data, "lore", str, file, default="").strip()
    source = _field(data, "source", str, file, default="")

    return MonsterStatBlock(
        id=monster_id,
        name=name,
        armor_class=armor_class,
        hit_points=hit_points,
        speeds=speeds,
        ability_scores=scores,
        skills=tuple(skills),
        languages=tuple(languages),
        abilities=tuple(abilities),
        lore=lore,
        source=source,
    )


def load_setting_file(path: Path) -> Setting:
    """Parse and validate a single setting file."""
    file = str(path)
    data = _load_yaml(path)
    tags_raw = _field(data, "tags", list, file, default=[])
    for i, tag in enumerate(tags_raw):
        if not isinstance(tag, str):
            raise SchemaError(file, f"tags[{i}]", "must be a string")
    return Setting(
        id=_nonempty_str(data, "id", file),
        name=_nonempty_str(data, "name", file),
        description=_nonempty_str(data, "description", file).strip(),
        tags=tuple(tags_raw),
    )


def _data_files(directory: Path) -> list[Path]:
    return sorted(p for p in directory.iterdir() if p.suffix in (".yaml", ".yml"))


def load_knowledge_base(monster_dir: Path | str, setting_dir: Path | str) -> KnowledgeBase:
    """Load every monster and setting file, rejecting duplicate ids.

    Deterministic: files are read in sorted order, so loading the same
    directories twice yields structurally identical knowledge bases.
    """
    monster_dir = Path(monster_dir)
    setting_dir = Path(setting_dir)
    for directory in (monster_dir, setting_dir):
        if not directory.is_dir():
            raise SchemaError(str(directory), "-", "directory does not exist")

    monsters: dict[str, MonsterStatBlock] = {}
    for path in _data_files(monster_dir):
        monster = load_monster_file(path)
        if monster.id in monsters:
            raise DuplicateIdError("monster", monster.id, str(path))
        monsters[monster.id] = monster

    settings: dict[str, Setting] = {}
    for path in _data_files(setting_dir):
        setting = load_setting_file(path)
        if setting.id in settings:
            raise DuplicateIdError("setting", setting.id, str(path))
        settings[setting.id] = setting

    return KnowledgeBase(monsters=monsters, settings=settings)


def description_word_count(monster: MonsterStatBlock) -> int:
    """Whitespace-delimited token count of the lore plus all ability prose."""
    count = len(monster.lore.split())
    for ability in monster.abilities:
        count += len(ability.text.split())
    return count


@dataclass(frozen=True)
class CorpusStats:
    mean: float
    min: int
    max: int


def corpus_stats(kb: KnowledgeBase) -> CorpusStats:
    """Mean/min/max description word count across all monsters."""
    if not kb.monsters:
        raise EmptyCorpusError("knowledge base has no monsters")
    counts = [description_word_count(m) for m in kb.monsters.values()]
    return CorpusStats(mean=sum(counts) / len(counts), min=min(counts), max=max(counts))
