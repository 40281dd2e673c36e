/**
 * Server-sent events client for the job progress stream.
 *
 * The server emits `id:`/`event:`/`data:` frames and closes the stream after
 * the terminal state event. This client parses frames incrementally, rejects
 * out-of-order events, and reconnects with the last seen event id so replays
 * resume exactly where they left off.
 */

export interface SseEvent {
  id: number;
  event: string;
  data: Record<string, unknown>;
}

/** Incremental parser; feed it text chunks, collect completed frames. */
export class FrameParser {
  private buffer = '';

  push(chunk: string): SseEvent[] {
    this.buffer += chunk;
    const events: SseEvent[] = [];
    let boundary: number;
    while ((boundary = this.buffer.indexOf('\n\n')) >= 0) {
      const frame = this.buffer.slice(0, boundary);
      this.buffer = this.buffer.slice(boundary + 2);
      const parsed = parseFrame(frame);
      if (parsed) events.push(parsed);
    }
    return events;
  }
}

function parseFrame(frame: string): SseEvent | null {
  let id = 0;
  let event = 'message';
  const dataLines: string[] = [];
  for (const line of frame.split('\n')) {
    if (line.startsWith('id:')) id = Number(line.slice(3).trim());
    else if (line.startsWith('event:')) event = line.slice(6).trim();
    else if (line.startsWith('data:')) dataLines.push(line.slice(5).trim());
  }
  if (dataLines.length === 0) return null;
  try {
    return { id, event, data: JSON.parse(dataLines.join('\n')) as Record<string, unknown> };
  } catch {
    return null;
  }
}

export function isTerminal(ev: SseEvent): boolean {
  return ev.event === 'state' && (ev.data.state === 'done' || ev.data.state === 'failed');
}

/** Opens one connection attempt; yields text chunks until the server closes. */
export type Connector = (lastEventId: number) => AsyncIterable<string>;

export interface StreamOptions {
  maxRetries?: number;
  retryDelayMs?: number;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

/**
 * Consume the progress stream until the terminal event.
 *
 * Returns every accepted event in order. Events whose id is not strictly
 * greater than the last accepted id are dropped (duplicate or out-of-order
 * delivery); reconnection passes the last accepted id so the server replays
 * only what is missing.
 */
export async function consumeEventStream(
  connect: Connector,
  onEvent: (ev: SseEvent) => void,
  options: StreamOptions = {},
): Promise<SseEvent[]> {
  const maxRetries = options.maxRetries ?? 5;
  const retryDelayMs = options.retryDelayMs ?? 500;
  const sleep = options.sleep ?? defaultSleep;

  const accepted: SseEvent[] = [];
  let lastEventId = 0;
  let attempt = 0;

  for (;;) {
    const parser = new FrameParser();
    try {
      for await (const chunk of connect(lastEventId)) {
        for (const ev of parser.push(chunk)) {
          if (ev.id <= lastEventId) continue;
          lastEventId = ev.id;
          accepted.push(ev);
          onEvent(ev);
          if (isTerminal(ev)) return accepted;
        }
      }
      // clean close without a terminal event: reconnect from lastEventId
    } catch (err) {
      if (attempt >= maxRetries) throw err;
    }
    attempt += 1;
    if (attempt > maxRetries) {
      throw new Error(`event stream ended after ${maxRetries} retries without a terminal event`);
    }
    await sleep(retryDelayMs);
  }
}

/** Connector backed by fetch; works in browsers and Node 18+. */
export function fetchConnector(urlFor: (lastEventId: number) => string): Connector {
  return async function* (lastEventId: number) {
    const response = await fetch(urlFor(lastEventId), {
      headers: lastEventId > 0 ? { 'last-event-id': String(lastEventId) } : {},
    });
    if (!response.ok || !response.body) {
      throw new Error(`event stream request failed: HTTP ${response.status}`);
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    for (;;) {
      const { done, value } = await reader.read();
      if (done) return;
      yield decoder.decode(value, { stream: true });
    }
  };
}
