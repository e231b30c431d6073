// Typed client for the codm HTTP API. Every console network call goes
// through this module, so the e2e contract test can verify each request
// targets a documented endpoint.

export interface RolledGroup {
  monster_id: string;
  quantity: number;
}

export interface Encounter {
  id: string;
  setting_id: string;
  rolled: RolledGroup[];
  rendered: string;
  created_at: string;
}

export interface Generation {
  id: string;
  kind: string;
  output_text: string;
  provider: string;
  latency_ms: number;
  attempts: number;
  created_at: string;
  thread_id: string | null;
  encounter_id: string | null;
}

export interface ThreadMessage {
  role: "system" | "user" | "assistant";
  content: string;
  created_at: string;
  seq: number;
}

export interface Thread {
  id: string;
  kind: "brainstorm" | "open_chat";
  encounter_id: string | null;
  visibility: "private" | "public";
  seed_len: number;
  round_count: number;
  participants: string[];
  messages: ThreadMessage[];
}

export interface Feedback {
  id: string;
  generation_id: string;
  polarity: "positive" | "negative";
  comment: string | null;
  user_id: string;
  created_at: string;
}

export interface Tally {
  positive: number;
  negative: number;
  total_encounters: number;
}

export interface SettingInfo {
  id: string;
  name: string;
  tags: string[];
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
    public retryable: boolean,
  ) {
    super(`${status}: ${detail}`);
  }
}

export type RequestObserver = (method: string, path: string) => void;

export class ConsoleApi {
  constructor(
    private baseUrl: string = "",
    private observer: RequestObserver | null = null,
  ) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    this.observer?.(method, path);
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const parsed = (await response.json()) as { detail?: unknown };
        if (parsed.detail !== undefined) detail = String(parsed.detail);
      } catch {
        // non-JSON error body; keep the status text
      }
      // 502 = provider trouble, 409 = busy/duplicate; both are worth retrying
      const retryable = response.status === 502 || response.status === 409;
      throw new ApiError(response.status, detail, retryable);
    }
    return (await response.json()) as T;
  }

  healthz(): Promise<{ status: string; provider: string }> {
    return this.call("GET", "/healthz");
  }

  listSettings(): Promise<SettingInfo[]> {
    return this.call("GET", "/settings");
  }

  rollEncounter(settingId: string, seed?: number, table?: string): Promise<Encounter> {
    return this.call("POST", "/encounters/roll", {
      setting_id: settingId,
      seed: seed ?? null,
      table: table ?? null,
    });
  }

  getEncounter(encounterId: string): Promise<Encounter> {
    return this.call("GET", `/encounters/${encounterId}`);
  }

  understand(
    encounterId: string,
    variant: "summarize" | "understand",
    seed?: number,
  ): Promise<Generation> {
    return this.call("POST", `/encounters/${encounterId}/understand`, {
      variant,
      seed: seed ?? null,
    });
  }

  openBrainstorm(encounterId: string, includeSummary: boolean): Promise<Thread> {
    return this.call("POST", `/encounters/${encounterId}/brainstorm`, {
      include_summary: includeSummary,
    });
  }

  openChat(): Promise<Thread> {
    return this.call("POST", "/chat", {});
  }

  getThread(threadId: string): Promise<Thread> {
    return this.call("GET", `/threads/${threadId}`);
  }

  postMessage(threadId: string, text: string): Promise<Generation> {
    return this.call("POST", `/threads/${threadId}/messages`, { text });
  }

  sendFeedback(
    generationId: string,
    polarity: "positive" | "negative",
    comment?: string,
  ): Promise<Feedback> {
    return this.call("POST", `/generations/${generationId}/feedback`, {
      polarity,
      comment: comment || null,
    });
  }

  tallies(): Promise<Record<string, Tally>> {
    return this.call("GET", "/feedback/tallies");
  }

  openapi(): Promise<{ paths: Record<string, unknown> }> {
    return this.call("GET", "/openapi.json");
  }
}
