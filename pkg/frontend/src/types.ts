// Wire types mirroring the oracle service's HTTP/JSON API. The console
// renders these verbatim; it never derives fusion quantities itself.

export interface SessionSummary {
  session_id: string;
  m: number;
  algorithm: string;
  oracle_mode: string;
  events_seen: number;
  pending: number;
  history_length: number;
}

export interface PendingEvent {
  event_id: string;
  step: number;
  decisions: number[];
  preset_id: string;
}

export interface HistoryEntry {
  step: number;
  event_id: string;
  label: number;
  prediction: number;
  error: number;
  decision: number;
  weights: number[];
}

export interface StateSnapshot {
  session_id: string;
  m: number;
  algorithm: string;
  oracle_mode: string;
  weights: number[];
  events_seen: number;
  history_length: number;
  history: HistoryEntry[];
  pending: PendingEvent[];
}

export interface FeedbackResult {
  new_weights: number[];
  prediction_before: number;
  error_before: number;
  lambda: number | null;
  residual_after: number;
  status: string;
}

export type OracleLabel = 1 | -1;
