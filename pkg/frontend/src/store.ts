import { ApiClient, ApiError } from "./api.js";
import type {
  HistoryEntry,
  OracleLabel,
  PendingEvent,
  SessionSummary,
  StateSnapshot,
} from "./types.js";

export interface PendingCard {
  event: PendingEvent;
  // in-flight feedback removes the card optimistically; a network failure
  // restores it with the retry affordance set
  inFlight: boolean;
  retryable: boolean;
}

export interface Notice {
  kind: "info" | "conflict" | "error";
  text: string;
}

export interface ConsoleState {
  sessions: SessionSummary[];
  selected: string | null;
  snapshot: StateSnapshot | null;
  cards: PendingCard[];
  notices: Notice[];
}

/** View model for the review console.
 *
 * Every displayed number is copied from a service response: the weight
 * trajectories and error series come straight out of /state history rows,
 * the per-expert bars out of /pending decisions. The store never computes
 * predictions, errors or weights itself.
 */
export class ConsoleStore {
  private sessions: SessionSummary[] = [];
  private selected: string | null = null;
  private snapshot: StateSnapshot | null = null;
  private cards: PendingCard[] = [];
  private notices: Notice[] = [];
  private listeners: Array<() => void> = [];

  constructor(
    private readonly api: ApiClient,
    private readonly historyWindow = 500,
  ) {}

  subscribe(listener: () => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  getState(): ConsoleState {
    return {
      sessions: this.sessions,
      selected: this.selected,
      snapshot: this.snapshot,
      cards: this.cards,
      notices: this.notices,
    };
  }

  /** Weight trajectory series, one per expert, exactly as served. */
  weightSeries(): number[][] {
    if (!this.snapshot) return [];
    const m = this.snapshot.m;
    const series: number[][] = Array.from({ length: m }, () => []);
    for (const entry of this.snapshot.history) {
      for (let i = 0; i < m; i += 1) {
        series[i]!.push(entry.weights[i] ?? 0);
      }
    }
    return series;
  }

  /** Served per-step errors (the chart squares them at render time). */
  errorSeries(): number[] {
    if (!this.snapshot) return [];
    return this.snapshot.history.map((entry: HistoryEntry) => entry.error);
  }

  async refreshSessions(): Promise<void> {
    this.sessions = await this.api.listSessions();
    if (this.selected === null && this.sessions.length > 0) {
      this.selected = this.sessions[0]!.session_id;
    }
    this.emit();
  }

  async select(sessionId: string): Promise<void> {
    this.selected = sessionId;
    this.snapshot = null;
    this.cards = [];
    await this.refresh();
  }

  /** Pull the selected session's state; cards mirror the served pending
   * queue (cards with feedback in flight are left alone until resolved). */
  async refresh(): Promise<void> {
    if (this.selected === null) return;
    const snapshot = await this.api.getState(this.selected, this.historyWindow);
    this.snapshot = snapshot;
    const inFlight = new Set(
      this.cards.filter((c) => c.inFlight).map((c) => c.event.event_id),
    );
    this.cards = snapshot.pending
      .filter((event) => !inFlight.has(event.event_id))
      .map((event) => {
        const existing = this.cards.find((c) => c.event.event_id === event.event_id);
        return existing ?? { event, inFlight: false, retryable: false };
      });
    this.emit();
  }

  confirm(eventId: string): Promise<void> {
    return this.resolve(eventId, 1);
  }

  reject(eventId: string): Promise<void> {
    return this.resolve(eventId, -1);
  }

  private async resolve(eventId: string, label: OracleLabel): Promise<void> {
    if (this.selected === null) return;
    const card = this.cards.find((c) => c.event.event_id === eventId);
    if (!card || card.inFlight) return;
    card.inFlight = true;
    card.retryable = false;
    // optimistic removal; restored below on network failure
    this.cards = this.cards.filter((c) => c.event.event_id !== eventId);
    this.emit();
    try {
      await this.api.postFeedback(this.selected, eventId, label);
      this.pushNotice({
        kind: "info",
        text: `${label === 1 ? "confirmed" : "rejected"} ${eventId}`,
      });
      await this.refresh();
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        // someone else resolved it; the card stays cleared
        this.pushNotice({ kind: "conflict", text: `${eventId} already resolved` });
        await this.refresh();
      } else {
        card.inFlight = false;
        card.retryable = true;
        this.cards = [...this.cards, card];
        this.pushNotice({
          kind: "error",
          text: `feedback for ${eventId} failed; retry available`,
        });
        this.emit();
      }
    }
  }

  pushNotice(notice: Notice): void {
    this.notices = [...this.notices.slice(-19), notice];
    this.emit();
  }

  dismissNotices(): void {
    this.notices = [];
    this.emit();
  }
}
