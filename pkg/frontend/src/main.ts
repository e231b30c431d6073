// Console wiring: one encounter-centric DM page, plus the open-chat baseline
// on its own tab. State is re-derived from the server on every change and on
// refresh (ids live in the URL hash).

import { ApiError, ConsoleApi } from "./api.js";
import {
  ConsoleSession,
  emptySession,
  giveFeedback,
  requestUnderstanding,
  restoreSession,
  rollEncounter,
  sendMessage,
  startBrainstorm,
  startOpenChat,
} from "./state.js";
import {
  encounterCard,
  errorBanner,
  talliesFooter,
  threadPanel,
  understandingPanel,
} from "./views.js";

const api = new ConsoleApi("");
let session: ConsoleSession = emptySession();
let lastError: { message: string; retryable: boolean; retry: () => void } | null = null;

function hashState(): { encounterId: string | null; threadId: string | null; page: string } {
  const params = new URLSearchParams(window.location.hash.slice(1));
  return {
    encounterId: params.get("encounter"),
    threadId: params.get("thread"),
    page: params.get("page") ?? "dm",
  };
}

function pushHash() {
  const params = new URLSearchParams();
  if (session.encounter) params.set("encounter", session.encounter.id);
  if (session.thread) params.set("thread", session.thread.id);
  params.set("page", hashState().page);
  history.replaceState(null, "", `#${params.toString()}`);
}

async function guarded(action: () => Promise<ConsoleSession>, retry: () => void) {
  lastError = null;
  try {
    session = await action();
  } catch (error) {
    if (error instanceof ApiError) {
      lastError = { message: error.detail, retryable: error.retryable, retry };
    } else {
      lastError = { message: String(error), retryable: false, retry };
    }
  }
  pushHash();
  await render();
}

async function render() {
  const root = document.getElementById("app");
  if (!root) return;
  root.replaceChildren();

  const nav = document.createElement("nav");
  for (const [label, page] of [
    ["DM console", "dm"],
    ["Open chat (baseline)", "chat"],
  ] as const) {
    const link = document.createElement("a");
    link.textContent = label;
    link.href = `#page=${page}`;
    link.className = hashState().page === page ? "active" : "";
    link.onclick = () => setTimeout(boot, 0);
    nav.append(link);
  }
  root.append(nav);

  if (lastError) {
    root.append(errorBanner(lastError.message, lastError.retryable, lastError.retry));
  }

  if (hashState().page === "chat") {
    renderChatPage(root);
    return;
  }

  // roll view
  const rollView = document.createElement("section");
  rollView.className = "card roll-view";
  const heading = document.createElement("h2");
  heading.textContent = "Roll an encounter";
  rollView.append(heading);
  const settingSelect = document.createElement("select");
  const settings = await api.listSettings();
  for (const setting of settings) {
    const option = document.createElement("option");
    option.value = setting.id;
    option.textContent = setting.name;
    settingSelect.append(option);
  }
  const rollButton = document.createElement("button");
  rollButton.textContent = "Roll";
  rollButton.onclick = () => {
    const doRoll = () => guarded(() => rollEncounter(api, session, settingSelect.value), doRoll);
    doRoll();
  };
  rollView.append(settingSelect, rollButton);
  root.append(rollView);

  if (session.encounter) {
    root.append(encounterCard(session.encounter));

    const actions = document.createElement("div");
    actions.className = "actions";
    const understand = document.createElement("button");
    understand.textContent = "Understand this encounter";
    understand.onclick = () => {
      const run = () => guarded(() => requestUnderstanding(api, session, "understand"), run);
      run();
    };
    const includeSummary = document.createElement("input");
    includeSummary.type = "checkbox";
    includeSummary.id = "include-summary";
    includeSummary.checked = session.understanding !== null;
    const includeLabel = document.createElement("label");
    includeLabel.htmlFor = "include-summary";
    includeLabel.textContent = "carry understanding into the thread";
    const brainstorm = document.createElement("button");
    brainstorm.textContent = "Open brainstorm thread";
    brainstorm.onclick = () => {
      const run = () => guarded(() => startBrainstorm(api, session, includeSummary.checked), run);
      run();
    };
    actions.append(understand, brainstorm, includeSummary, includeLabel);
    root.append(actions);

    root.append(
      understandingPanel(session.understanding, session.feedbackSent, {
        onFeedback: (generationId, polarity, comment) => {
          const run = () =>
            guarded(() => giveFeedback(api, session, generationId, polarity, comment), run);
          run();
        },
      }),
    );
  }

  if (session.thread && session.thread.kind === "brainstorm") {
    root.append(
      threadPanel(session.thread, session.pending, {
        onSend: (text) => void sendWithPending(text),
      }),
    );
  }

  root.append(talliesFooter(await api.tallies()));
}

function renderChatPage(root: HTMLElement) {
  const open = document.createElement("button");
  open.textContent = "Start a public chat thread";
  open.onclick = () => {
    const run = () => guarded(() => startOpenChat(api, session), run);
    run();
  };
  root.append(open);
  if (session.thread && session.thread.kind === "open_chat") {
    root.append(
      threadPanel(session.thread, session.pending, {
        onSend: (text) => void sendWithPending(text),
      }),
    );
  }
}

async function sendWithPending(text: string) {
  session = { ...session, pending: true };
  await render();
  await guarded(async () => {
    const next = await sendMessage(api, { ...session, pending: false }, text);
    return { ...next, pending: false };
  }, () => void sendWithPending(text));
}

async function boot() {
  const { encounterId, threadId } = hashState();
  if (encounterId || threadId) {
    try {
      session = { ...(await restoreSession(api, encounterId, threadId)), feedbackSent: session.feedbackSent };
    } catch {
      session = emptySession();
    }
  }
  await render();
}

window.addEventListener("hashchange", () => void boot());
void boot();
