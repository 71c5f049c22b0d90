// Live updates: server-sent events when the browser provides EventSource,
// with interval polling as the fallback (and as a safety net alongside the
// stream, since a reconnect can drop deltas). Cadence is configurable.

export interface LiveOptions {
  pollMs?: number;
  eventSourceFactory?: (url: string) => EventSource;
}

export interface LiveHandle {
  stop(): void;
}

export function startLiveUpdates(
  baseUrl: string,
  sessionId: string,
  onDelta: () => void,
  options: LiveOptions = {},
): LiveHandle {
  const pollMs = options.pollMs ?? 1000;
  const timer = setInterval(onDelta, pollMs);

  let source: EventSource | null = null;
  const factory =
    options.eventSourceFactory ??
    (typeof EventSource === "undefined" ? null : (url: string) => new EventSource(url));
  if (factory) {
    source = factory(`${baseUrl}/sessions/${encodeURIComponent(sessionId)}/stream`);
    source.onmessage = () => onDelta();
    source.onerror = () => {
      // polling keeps the console alive while the stream reconnects
    };
  }

  return {
    stop() {
      clearInterval(timer);
      source?.close();
    },
  };
}
