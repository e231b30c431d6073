// DOM components for the console. Plain createElement, no framework.

import type { Encounter, Generation, Thread } from "./api.js";
import { summaryCarriedOver, visibleMessages } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function encounterCard(encounter: Encounter): HTMLElement {
  const card = el("section", "card encounter-card");
  card.append(el("h2", undefined, "Encounter"));
  card.append(el("p", "encounter-rendered", encounter.rendered));
  const meta = el("p", "meta", `setting: ${encounter.setting_id} · id: ${encounter.id}`);
  card.append(meta);
  return card;
}

export interface FeedbackHandlers {
  onFeedback: (generationId: string, polarity: "positive" | "negative", comment: string) => void;
}

export function feedbackControls(
  generation: Generation,
  alreadySent: boolean,
  handlers: FeedbackHandlers,
): HTMLElement {
  const row = el("div", "feedback-row");
  if (alreadySent) {
    row.append(el("span", "feedback-done", "feedback recorded"));
    return row;
  }
  const comment = el("input", "feedback-comment") as HTMLInputElement;
  comment.placeholder = "optional comment";
  const up = el("button", "thumb", "\u{1F44D}");
  const down = el("button", "thumb", "\u{1F44E}");
  up.onclick = () => handlers.onFeedback(generation.id, "positive", comment.value);
  down.onclick = () => handlers.onFeedback(generation.id, "negative", comment.value);
  row.append(up, down, comment);
  return row;
}

export function understandingPanel(
  generation: Generation | null,
  feedbackSent: Set<string>,
  handlers: FeedbackHandlers,
): HTMLElement {
  const panel = el("section", "card understanding-panel");
  panel.append(el("h2", undefined, "Understanding"));
  if (!generation) {
    panel.append(el("p", "placeholder", "Distill the stat blocks to get a read on this encounter."));
    return panel;
  }
  panel.append(el("p", "generation-text", generation.output_text));
  panel.append(feedbackControls(generation, feedbackSent.has(generation.id), handlers));
  return panel;
}

export function messageBubble(role: string, content: string): HTMLElement {
  const bubble = el("article", `bubble bubble-${role}`);
  bubble.append(el("strong", "bubble-role", role === "assistant" ? "calypso" : role));
  bubble.append(el("p", "bubble-text", content));
  return bubble;
}

export interface ThreadHandlers {
  onSend: (text: string) => void;
}

export function threadPanel(
  thread: Thread | null,
  pending: boolean,
  handlers: ThreadHandlers,
): HTMLElement {
  const panel = el("section", "card thread-panel");
  const title = thread?.kind === "open_chat" ? "Open chat (baseline)" : "Brainstorm";
  panel.append(el("h2", undefined, title));
  if (!thread) {
    panel.append(el("p", "placeholder", "Open a thread to start bouncing ideas."));
    return panel;
  }
  if (summaryCarriedOver(thread)) {
    panel.append(el("p", "carryover-chip", "earlier understanding carried into context"));
  }
  const log = el("div", "message-log");
  for (const message of visibleMessages(thread)) {
    log.append(messageBubble(message.role, message.content));
  }
  panel.append(log);

  if (pending) {
    panel.append(el("p", "pending-indicator", "waiting for a reply…"));
  }

  const form = el("form", "composer") as HTMLFormElement;
  const input = el("input", "composer-input") as HTMLInputElement;
  input.placeholder = "Ask about the encounter…";
  input.disabled = pending;
  const send = el("button", "composer-send", "Send") as HTMLButtonElement;
  send.disabled = pending;
  form.append(input, send);
  form.onsubmit = (event) => {
    event.preventDefault();
    if (input.value.trim()) handlers.onSend(input.value.trim());
  };
  panel.append(form);
  return panel;
}

export function errorBanner(message: string, retryable: boolean, onRetry: () => void): HTMLElement {
  const banner = el("div", "error-banner");
  banner.append(el("span", undefined, message));
  if (retryable) {
    const retry = el("button", "retry-button", "Retry");
    retry.onclick = onRetry;
    banner.append(retry);
  }
  return banner;
}

export function talliesFooter(tallies: Record<string, { positive: number; negative: number }>): HTMLElement {
  const footer = el("footer", "tallies");
  const parts = Object.entries(tallies)
    .filter(([, t]) => t.positive + t.negative > 0)
    .map(([kind, t]) => `${kind}: +${t.positive} / -${t.negative}`);
  footer.textContent = parts.length ? `feedback — ${parts.join(" · ")}` : "";
  return footer;
}
