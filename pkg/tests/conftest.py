from __future__ import annotations

import random
from pathlib import Path

import pytest

from codm.gateway import Gateway, MockProvider
from codm.kb import load_knowledge_base
from codm.prompts import DEFAULT_PERSONA
from codm.sessions import SessionManager
from codm.store import SessionStore
from codm.tables import Encounter, now_utc

REPO_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = REPO_ROOT / "data"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def kb():
    return load_knowledge_base(DATA_DIR / "monsters", DATA_DIR / "settings")


@pytest.fixture
def fixture_encounter():
    """The canonical golden-file encounter: 12 blink dogs in the Whisperwood."""
    return Encounter(
        id="enc-fixture",
        setting_id="whisperwood",
        rolled=(("blink-dog", 12),),
        created_at=now_utc(),
        rendered="12 x Blink Dog",
    )


@pytest.fixture
def loreless_encounter():
    """Two lore-less monsters, to exercise the fallback line per monster."""
    return Encounter(
        id="enc-loreless",
        setting_id="whisperwood",
        rolled=(("brown-bear", 2), ("snow-golem", 1)),
        created_at=now_utc(),
        rendered="2 x Brown Bear, 1 x Snow Golem",
    )


@pytest.fixture
def store():
    s = SessionStore(":memory:")
    yield s
    s.close()


@pytest.fixture
def gateway(store):
    # sleep stub: retry tests must not wait out real backoff
    return Gateway(MockProvider(), store, sleep=lambda _s: None)


@pytest.fixture
def manager(store, gateway, kb):
    return SessionManager(store, gateway, kb, persona=DEFAULT_PERSONA)


def golden(name: str) -> str:
    return (GOLDEN_DIR / name).read_text(encoding="utf-8")


def seeded(n: int) -> random.Random:
    return random.Random(n)
