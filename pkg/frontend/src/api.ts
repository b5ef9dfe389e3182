import type {
  ChatTurnResult,
  HistoryResponse,
  MemeListResponse,
  SamplerSettings,
  SessionInfo,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function parseOrThrow<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

/** Thin typed client for the chat service. */
export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private url(path: string): string {
    return `${this.base}/api/v1${path}`;
  }

  async createSession(settings: SamplerSettings = {}): Promise<SessionInfo> {
    const resp = await this.fetchFn(this.url("/sessions"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(settings),
    });
    return parseOrThrow<SessionInfo>(resp);
  }

  async postMessage(
    sessionId: string,
    message: { text?: string; meme_id?: number },
  ): Promise<ChatTurnResult> {
    const resp = await this.fetchFn(this.url(`/sessions/${sessionId}/messages`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(message),
    });
    return parseOrThrow<ChatTurnResult>(resp);
  }

  async getHistory(sessionId: string): Promise<HistoryResponse> {
    const resp = await this.fetchFn(this.url(`/sessions/${sessionId}/history`));
    return parseOrThrow<HistoryResponse>(resp);
  }

  async getMemes(): Promise<MemeListResponse> {
    const resp = await this.fetchFn(this.url("/memes"));
    return parseOrThrow<MemeListResponse>(resp);
  }

  async deleteSession(sessionId: string): Promise<void> {
    const resp = await this.fetchFn(this.url(`/sessions/${sessionId}`), {
      method: "DELETE",
    });
    if (!resp.ok) throw new ApiError(resp.status, resp.statusText);
  }
}
