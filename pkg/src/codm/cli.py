"""Command-line entry points: validate-kb, roll, prompt, export, serve."""
from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Optional

import click

from . import errors
from .config import ApiConfig, build_registry, load_config
from .kb import corpus_stats, load_knowledge_base
from .profiles import InterfaceKind
from .prompts import (
    build_brainstorm_seed,
    build_open_chat_seed,
    build_summarization_prompt,
    build_understanding_prompt,
)
from .store import SessionStore
from .tables import load_encounter_table, roll_and_persist

KIND_ALIASES = {
    "summarize": InterfaceKind.SUMMARIZATION,
    "understand": InterfaceKind.UNDERSTANDING,
    "brainstorm": InterfaceKind.BRAINSTORM,
    "chat": InterfaceKind.OPEN_CHAT,
}


def _config_from(config_path: Optional[str]) -> ApiConfig:
    return load_config(config_path) if config_path else ApiConfig()


@click.group()
def main():
    """Self-hosted co-DM assistant service."""


@main.command("validate-kb")
@click.option("--monsters", required=True, type=click.Path(), help="Monster file directory")
@click.option("--settings", required=True, type=click.Path(), help="Setting file directory")
def validate_kb(monsters: str, settings: str):
    """Validate every data file; exits nonzero on the first schema error."""
    try:
        kb = load_knowledge_base(monsters, settings)
    except errors.CodmError as exc:
        click.echo(f"invalid: {exc}", err=True)
        sys.exit(1)
    click.echo(f"ok: {len(kb.monsters)} monsters, {len(kb.settings)} settings")
    if kb.monsters:
        stats = corpus_stats(kb)
        click.echo(
            f"description words: mean {stats.mean:.1f} (min: {stats.min}, max: {stats.max})"
        )


@main.command()
@click.option("--table", "table_path", required=True, type=click.Path(), help="Encounter table file")
@click.option("--setting", "setting_id", required=True, help="Setting id to bind the encounter to")
@click.option("--seed", type=int, default=None, help="Seed for a reproducible roll")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--monsters", type=click.Path(), default=None, help="Override monster directory")
@click.option("--settings", "settings_dir", type=click.Path(), default=None, help="Override setting directory")
@click.option("--db", type=click.Path(), default=None, help="Override store path")
def roll(table_path, setting_id, seed, config_path, monsters, settings_dir, db):
    """Roll a random encounter and persist it."""
    config = _config_from(config_path)
    kb = load_knowledge_base(monsters or config.monsters_dir, settings_dir or config.settings_dir)
    setting = kb.setting(setting_id)
    table = load_encounter_table(table_path, kb)
    store = SessionStore(db or config.db_path)
    encounter = roll_and_persist(table, setting, kb, store, seed=seed)
    click.echo(encounter.rendered)
    click.echo(f"id: {encounter.id}")


@main.command()
@click.option("--encounter", "encounter_id", required=True, help="Persisted encounter id")
@click.option("--kind", required=True, type=click.Choice(sorted(KIND_ALIASES)), help="Prompt family")
@click.option("--seed", type=int, default=None, help="Seed for phrase sampling")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--monsters", type=click.Path(), default=None)
@click.option("--settings", "settings_dir", type=click.Path(), default=None)
@click.option("--db", type=click.Path(), default=None)
def prompt(encounter_id, kind, seed, config_path, monsters, settings_dir, db):
    """Assemble a prompt bundle for inspection without calling any provider."""
    import random

    config = _config_from(config_path)
    kb = load_knowledge_base(monsters or config.monsters_dir, settings_dir or config.settings_dir)
    store = SessionStore(db or config.db_path)
    registry = build_registry(config)
    rng = random.Random(seed)

    interface = KIND_ALIASES[kind]
    if interface is InterfaceKind.OPEN_CHAT:
        bundle = build_open_chat_seed(config.persona, registry)
    else:
        encounter = store.get_encounter(encounter_id)
        if encounter is None:
            click.echo(f"unknown encounter '{encounter_id}'", err=True)
            sys.exit(1)
        if interface is InterfaceKind.SUMMARIZATION:
            bundle = build_summarization_prompt(encounter, kb, registry)
        elif interface is InterfaceKind.UNDERSTANDING:
            bundle = build_understanding_prompt(encounter, kb, rng, registry)
        else:
            prior = store.latest_understanding(encounter_id)
            bundle = build_brainstorm_seed(
                encounter, kb, prior.output_text if prior else None, rng, registry
            )

    p = bundle.profile
    click.echo(f"kind: {bundle.interface_kind.value}")
    click.echo(
        f"profile: temperature={p.temperature} top_p={p.top_p} "
        f"frequency_penalty={p.frequency_penalty} presence_penalty={p.presence_penalty} "
        f"max_tokens={p.max_tokens} model={p.model_id or '(provider default)'}"
    )
    for message in bundle.messages:
        click.echo(f"--- {message.role} ---")
        click.echo(message.content)


@main.command()
@click.option("--thread", "thread_id", required=True, help="Thread id to export")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--db", type=click.Path(), default=None)
def export(thread_id, config_path, db):
    """Emit a portable JSON transcript of one thread."""
    config = _config_from(config_path)
    store = SessionStore(db or config.db_path)
    record = store.get_thread(thread_id)
    if record is None:
        click.echo(f"unknown thread '{thread_id}'", err=True)
        sys.exit(1)
    transcript = {
        "thread_id": record.id,
        "kind": record.kind,
        "encounter_id": record.encounter_id,
        "visibility": record.visibility,
        "created_at": record.created_at,
        "messages": [
            {
                "role": m.role,
                "content": m.content,
                "created_at": m.created_at,
                "user_id": m.user_id,
            }
            for m in store.list_messages(thread_id)
        ],
    }
    click.echo(json.dumps(transcript, indent=2))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--host", default=None, help="Override bind host")
@click.option("--port", type=int, default=None, help="Override bind port")
def serve(config_path, host, port):
    """Run the HTTP service."""
    import uvicorn

    from .api import create_app

    config = load_config(config_path)
    try:
        app = create_app(config)
    except errors.CodmError as exc:
        click.echo(f"refusing to start: {exc}", err=True)
        sys.exit(1)
    uvicorn.run(app, host=host or config.host, port=port or config.port, log_level="info")


if __name__ == "__main__":
    main()
