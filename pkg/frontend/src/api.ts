import type {
  FeedbackResult,
  OracleLabel,
  PendingEvent,
  SessionSummary,
  StateSnapshot,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the service API; fetch is injectable for tests. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const payload = (await response.json()) as { detail?: string };
        if (payload.detail) detail = payload.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  async listSessions(): Promise<SessionSummary[]> {
    const payload = await this.request<{ sessions: SessionSummary[] }>("GET", "/sessions");
    return payload.sessions;
  }

  getState(sessionId: string, last?: number): Promise<StateSnapshot> {
    const query = last === undefined ? "" : `?last=${last}`;
    return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}/state${query}`);
  }

  async getPending(sessionId: string): Promise<PendingEvent[]> {
    const payload = await this.request<{ pending: PendingEvent[] }>(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/pending`,
    );
    return payload.pending;
  }

  postFeedback(sessionId: string, eventId: string, label: OracleLabel): Promise<FeedbackResult> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/feedback`, {
      event_id: eventId,
      label,
    });
  }
}
