// Console session state. Everything here is derivable from server responses,
// so a page refresh rebuilds the identical view (the server owns all
// ordering and history).

import type { ConsoleApi, Encounter, Generation, Thread } from "./api.js";

export interface ConsoleSession {
  encounter: Encounter | null;
  understanding: Generation | null;
  thread: Thread | null;
  // at most one pending generation per thread, mirroring the server's FIFO
  pending: boolean;
  feedbackSent: Set<string>;
}

export function emptySession(): ConsoleSession {
  return {
    encounter: null,
    understanding: null,
    thread: null,
    pending: false,
    feedbackSent: new Set(),
  };
}

export async function rollEncounter(
  api: ConsoleApi,
  session: ConsoleSession,
  settingId: string,
  seed?: number,
): Promise<ConsoleSession> {
  const encounter = await api.rollEncounter(settingId, seed);
  return { ...emptySession(), feedbackSent: session.feedbackSent, encounter };
}

export async function requestUnderstanding(
  api: ConsoleApi,
  session: ConsoleSession,
  variant: "summarize" | "understand",
): Promise<ConsoleSession> {
  if (!session.encounter) throw new Error("roll an encounter first");
  const understanding = await api.understand(session.encounter.id, variant);
  return { ...session, understanding };
}

export async function startBrainstorm(
  api: ConsoleApi,
  session: ConsoleSession,
  includeSummary: boolean,
): Promise<ConsoleSession> {
  if (!session.encounter) throw new Error("roll an encounter first");
  const thread = await api.openBrainstorm(session.encounter.id, includeSummary);
  return { ...session, thread };
}

export async function startOpenChat(
  api: ConsoleApi,
  session: ConsoleSession,
): Promise<ConsoleSession> {
  const thread = await api.openChat();
  return { ...session, thread };
}

export async function sendMessage(
  api: ConsoleApi,
  session: ConsoleSession,
  text: string,
): Promise<ConsoleSession> {
  if (!session.thread) throw new Error("no open thread");
  if (session.pending) throw new Error("a reply is already pending");
  await api.postMessage(session.thread.id, text);
  // re-fetch so local state stays a pure projection of server state
  const thread = await api.getThread(session.thread.id);
  return { ...session, thread, pending: false };
}

export async function giveFeedback(
  api: ConsoleApi,
  session: ConsoleSession,
  generationId: string,
  polarity: "positive" | "negative",
  comment?: string,
): Promise<ConsoleSession> {
  await api.sendFeedback(generationId, polarity, comment);
  const feedbackSent = new Set(session.feedbackSent);
  feedbackSent.add(generationId);
  return { ...session, feedbackSent };
}

// Rebuild the whole view from ids alone, as after a page refresh.
export async function restoreSession(
  api: ConsoleApi,
  encounterId: string | null,
  threadId: string | null,
): Promise<ConsoleSession> {
  const session = emptySession();
  if (encounterId) session.encounter = await api.getEncounter(encounterId);
  if (threadId) session.thread = await api.getThread(threadId);
  return session;
}

export function visibleMessages(thread: Thread): Thread["messages"] {
  // seed messages carry prompt scaffolding; the DM converses after them
  return thread.messages.slice(thread.seed_len);
}

export function summaryCarriedOver(thread: Thread): boolean {
  return thread.kind === "brainstorm" && thread.seed_len === 3;
}
