from __future__ import annotations

import threading
import time

import pytest

from codm import errors
from codm.gateway import Gateway, MockProvider, wire_payload
from codm.prompts import DEFAULT_PERSONA
from codm.sessions import SessionManager
from codm.store import SessionStore


@pytest.fixture
def persisted_encounter(store, kb, fixture_encounter):
    return store.save_encounter(fixture_encounter)


def test_open_brainstorm_without_summary(manager, persisted_encounter):
    view = manager.open_brainstorm(persisted_encounter.id)
    assert view.kind == "brainstorm"
    assert view.visibility == "private"
    assert view.encounter_id == persisted_encounter.id
    assert view.seed_len == 2
    assert [m.role for m in view.messages] == ["system", "user"]
    assert view.round_count == 0


def test_open_brainstorm_with_summary(manager, gateway, persisted_encounter, kb):
    from codm.prompts import build_understanding_prompt
    import random

    bundle = build_understanding_prompt(persisted_encounter, kb, random.Random(1))
    gateway.generate(bundle, encounter_id=persisted_encounter.id)
    view = manager.open_brainstorm(persisted_encounter.id, include_summary=True)
    assert view.seed_len == 3
    assert view.messages[2].content.startswith("Here's what I have so far:")


def test_open_brainstorm_summary_missing(manager, persisted_encounter):
    with pytest.raises(errors.NoSummaryError):
        manager.open_brainstorm(persisted_encounter.id, include_summary=True)


def test_open_brainstorm_unknown_encounter(manager):
    with pytest.raises(errors.UnknownEncounterError):
        manager.open_brainstorm("enc-nope")


def test_open_chat_seed_is_persona(manager):
    view = manager.open_chat()
    assert view.kind == "open_chat"
    assert view.visibility == "public"
    assert view.encounter_id is None
    assert view.seed_len == 1
    assert view.messages[0].role == "system"
    assert view.messages[0].content == DEFAULT_PERSONA


def test_post_message_grows_history(manager, persisted_encounter):
    view = manager.open_brainstorm(persisted_encounter.id)
    record = manager.post_user_message(view.id, "Describe this scene")
    after = manager.thread_view(view.id)
    assert after.round_count == 1
    assert len(after.messages) == len(view.messages) + 2
    assert after.messages[-2].role == "user"
    assert after.messages[-1].role == "assistant"
    assert after.messages[-1].content == record.output_text


def test_round_count_equals_user_and_assistant_counts(manager, persisted_encounter):
    view = manager.open_brainstorm(persisted_encounter.id)
    for i in range(3):
        manager.post_user_message(view.id, f"round {i}")
    after = manager.thread_view(view.id)
    post_seed = after.messages[after.seed_len:]
    users = sum(1 for m in post_seed if m.role == "user")
    assistants = sum(1 for m in post_seed if m.role == "assistant")
    assert after.round_count == assistants == users == 3


def test_alternation_after_seed(manager, persisted_encounter):
    view = manager.open_brainstorm(persisted_encounter.id)
    for i in range(4):
        manager.post_user_message(view.id, f"idea {i}")
    roles = [m.role for m in manager.thread_view(view.id).messages[view.seed_len:]]
    assert roles == ["user", "assistant"] * 4


def test_empty_message_rejected(manager, persisted_encounter):
    view = manager.open_brainstorm(persisted_encounter.id)
    with pytest.raises(ValueError):
        manager.post_user_message(view.id, "   ")


def test_tool_commands_rejected_with_notice(manager, persisted_encounter):
    view = manager.open_brainstorm(persisted_encounter.id)
    with pytest.raises(errors.ToolCommandError):
        manager.post_user_message(view.id, "!check stealth")
    # nothing was appended or generated
    assert manager.thread_view(view.id).round_count == 0
    assert len(manager.thread_view(view.id).messages) == view.seed_len


def test_unknown_thread(manager):
    with pytest.raises(errors.UnknownThreadError):
        manager.post_user_message("thr-nope", "hello")


def test_fifo_ordering_under_concurrency(manager, persisted_encounter):
    view = manager.open_brainstorm(persisted_encounter.id)
    started = threading.Event()

    def send_first():
        started.set()
        manager.post_user_message(view.id, "first")

    worker = threading.Thread(target=send_first)
    worker.start()
    started.wait()
    time.sleep(0.05)  # let the first post take the thread lock
    manager.post_user_message(view.id, "second")
    worker.join()

    contents = [m.content for m in manager.thread_view(view.id).messages[view.seed_len:]]
    first_pos = contents.index("first")
    second_pos = contents.index("second")
    assert first_pos < second_pos
    # each user turn is directly followed by its reply
    roles = [m.role for m in manager.thread_view(view.id).messages[view.seed_len:]]
    assert roles == ["user", "assistant", "user", "assistant"]


class FailOnceProvider:
    name = "fail-once"

    def __init__(self):
        self.calls = 0

    def complete(self, bundle):
        self.calls += 1
        if self.calls == 1:
            raise errors.ProviderError("transient", retryable=False)
        return "recovered reply"


def test_failed_generation_retains_user_message_for_retry(store, kb, fixture_encounter):
    store.save_encounter(fixture_encounter)
    gateway = Gateway(FailOnceProvider(), store, sleep=lambda _s: None)
    manager = SessionManager(store, gateway, kb, persona=DEFAULT_PERSONA)
    view = manager.open_brainstorm(fixture_encounter.id)

    with pytest.raises(errors.ProviderError):
        manager.post_user_message(view.id, "describe the ford")
    mid = manager.thread_view(view.id)
    assert mid.messages[-1].role == "user"
    assert mid.messages[-1].content == "describe the ford"

    # reposting the same text retries instead of appending a duplicate
    manager.post_user_message(view.id, "describe the ford")
    after = manager.thread_view(view.id)
    contents = [m.content for m in after.messages[after.seed_len:]]
    assert contents == ["describe the ford", "recovered reply"]


def test_thread_busy_when_queue_full(store, gateway, kb, fixture_encounter):
    store.save_encounter(fixture_encounter)
    manager = SessionManager(
        store, gateway, kb, persona=DEFAULT_PERSONA, max_pending_per_thread=1
    )
    view = manager.open_brainstorm(fixture_encounter.id)
    release = threading.Event()

    class SlowProvider:
        name = "slow"

        def complete(self, bundle):
            release.wait(timeout=5)
            return "slow reply"

    manager.gateway = Gateway(SlowProvider(), store, sleep=lambda _s: None)
    worker = threading.Thread(target=manager.post_user_message, args=(view.id, "one"))
    worker.start()
    time.sleep(0.05)
    with pytest.raises(errors.ThreadBusyError):
        manager.post_user_message(view.id, "two")
    release.set()
    worker.join()


def test_token_budget_drops_oldest_pairs_never_seed(store, kb, fixture_encounter):
    store.save_encounter(fixture_encounter)

    class CapturingProvider:
        name = "capturing"

        def __init__(self):
            self.payloads = []

        def complete(self, bundle):
            self.payloads.append(wire_payload(bundle))
            return "short reply"

    provider = CapturingProvider()
    gateway = Gateway(provider, store, sleep=lambda _s: None)
    manager = SessionManager(store, gateway, kb, persona=DEFAULT_PERSONA, token_budget=40)
    view = manager.open_chat()
    for i in range(4):
        manager.post_user_message(view.id, f"message number {i} " + "pad " * 10)

    last = provider.payloads[-1]["messages"]
    # seed survives every trim; oldest exchanges are gone, current turn stays
    assert last[0] == {"role": "system", "content": DEFAULT_PERSONA}
    tail = [m["content"] for m in last[1:]]
    assert any("number 3" in c for c in tail)
    assert not any("number 0" in c for c in tail)


def test_request_replay_matches_wire_payload(store, kb, fixture_encounter):
    store.save_encounter(fixture_encounter)

    class CapturingProvider:
        name = "capturing"

        def __init__(self):
            self.payloads = []

        def complete(self, bundle):
            self.payloads.append(wire_payload(bundle))
            return f"reply {len(self.payloads)}"

    provider = CapturingProvider()
    gateway = Gateway(provider, store, sleep=lambda _s: None)
    manager = SessionManager(store, gateway, kb, persona=DEFAULT_PERSONA)
    view = manager.open_brainstorm(fixture_encounter.id)
    manager.post_user_message(view.id, "Describe this scene")
    manager.post_user_message(view.id, "What do the dogs want?")

    # rebuild each request from the persisted thread and compare to the wire
    stored = store.list_generations(thread_id=view.id)
    assert len(stored) == 2
    for generation, sent in zip(stored, provider.payloads):
        replayed = [{"role": m.role, "content": m.content} for m in generation.request_messages]
        assert replayed == sent["messages"]


def test_brainstorm_replay_fixture_mean_rounds(store, gateway, kb, fixture_encounter):
    """71 scripted threads and 162 total rounds, replayed against the mock."""
    store.save_encounter(fixture_encounter)
    manager = SessionManager(store, gateway, kb, persona=DEFAULT_PERSONA)
    threads = [manager.open_brainstorm(fixture_encounter.id).id for _ in range(71)]
    for i in range(162):
        manager.post_user_message(threads[i % 71], f"scripted round {i}")
    rounds = [manager.thread_view(t).round_count for t in threads]
    assert sum(rounds) == 162
    mean = sum(rounds) / len(rounds)
    assert abs(mean - 2.28) < 0.005


def test_feedback_roundtrip(manager, gateway, persisted_encounter, kb):
    from codm.prompts import build_summarization_prompt

    record = gateway.generate(
        build_summarization_prompt(persisted_encounter, kb), encounter_id=persisted_encounter.id
    )
    feedback = manager.record_feedback(record.id, "positive", "crisp and useful")
    assert feedback.polarity == "positive"
    tally = manager.tally_feedback("summarization")
    assert (tally.positive, tally.negative, tally.total_encounters) == (1, 0, 1)


def test_feedback_duplicate_rejected(manager, gateway, persisted_encounter, kb):
    from codm.prompts import build_summarization_prompt

    record = gateway.generate(
        build_summarization_prompt(persisted_encounter, kb), encounter_id=persisted_encounter.id
    )
    manager.record_feedback(record.id, "positive")
    with pytest.raises(errors.DuplicateFeedbackError):
        manager.record_feedback(record.id, "negative")


def test_feedback_unknown_generation(manager):
    with pytest.raises(errors.UnknownGenerationError):
        manager.record_feedback("gen-nope", "positive")


def test_feedback_invalid_polarity(manager, gateway, persisted_encounter, kb):
    from codm.prompts import build_summarization_prompt

    record = gateway.generate(
        build_summarization_prompt(persisted_encounter, kb), encounter_id=persisted_encounter.id
    )
    with pytest.raises(ValueError):
        manager.record_feedback(record.id, "lukewarm")


def test_empty_tallies(manager):
    tally = manager.tally_feedback("summarization")
    assert (tally.positive, tally.negative, tally.total_encounters) == (0, 0, 0)


def test_export_transcript(manager, persisted_encounter):
    view = manager.open_brainstorm(persisted_encounter.id)
    manager.post_user_message(view.id, "Describe this scene")
    transcript = manager.export_thread(view.id)
    assert transcript["thread_id"] == view.id
    assert transcript["kind"] == "brainstorm"
    assert transcript["round_count"] == 1
    roles = [m["role"] for m in transcript["messages"]]
    assert roles == ["system", "user", "user", "assistant"]
    assert all("created_at" in m for m in transcript["messages"])


def test_persistence_roundtrip_across_reopen(tmp_path, kb, fixture_encounter):
    db = tmp_path / "sessions.db"
    store = SessionStore(db)
    store.save_encounter(fixture_encounter)
    gateway = Gateway(MockProvider(), store, sleep=lambda _s: None)
    manager = SessionManager(store, gateway, kb, persona=DEFAULT_PERSONA)
    view = manager.open_brainstorm(fixture_encounter.id)
    record = manager.post_user_message(view.id, "Describe this scene")
    manager.record_feedback(record.id, "positive")
    before = manager.export_thread(view.id)
    store.close()

    reopened = SessionStore(db)
    manager2 = SessionManager(
        reopened, Gateway(MockProvider(), reopened, sleep=lambda _s: None), kb,
        persona=DEFAULT_PERSONA,
    )
    assert manager2.export_thread(view.id) == before
    tally = manager2.tally_feedback("brainstorm")
    assert (tally.positive, tally.total_encounters) == (1, 1)
    reopened.close()
