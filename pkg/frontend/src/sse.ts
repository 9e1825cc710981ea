// Server-sent-events client over fetch streaming, so the same code runs
// in the browser and under node-based tests.

export interface SseEvent {
  event: string;
  data: string;
}

// Incremental parser: feed arbitrary chunks, get completed events.
export function createSseParser() {
  let buffer = "";
  return {
    feed(chunk: string): SseEvent[] {
      buffer += chunk;
      const events: SseEvent[] = [];
      let idx;
      while ((idx = buffer.indexOf("\n\n")) >= 0) {
        const block = buffer.slice(0, idx);
        buffer = buffer.slice(idx + 2);
        let event = "message";
        const data: string[] = [];
        for (const line of block.split("\n")) {
          if (line.startsWith("event:")) event = line.slice(6).trim();
          else if (line.startsWith("data:")) data.push(line.slice(5).trim());
          // comments (":" prefix) and retry hints are ignored
        }
        if (data.length > 0) events.push({ event, data: data.join("\n") });
      }
      return events;
    },
  };
}

export type ConnectionStatus = "connecting" | "live" | "lost";

export interface Subscription {
  close(): void;
}

export function subscribeEvents(
  baseUrl: string,
  onEvent: (e: SseEvent) => void,
  onStatus: (s: ConnectionStatus) => void,
  retryMs = 2000,
): Subscription {
  const controller = { aborted: false, abort: new AbortController() };

  async function pump(): Promise<void> {
    while (!controller.aborted) {
      onStatus("connecting");
      try {
        const resp = await fetch(`${baseUrl}/ops/events`, {
          signal: controller.abort.signal,
          headers: { Accept: "text/event-stream" },
        });
        if (!resp.ok || !resp.body) throw new Error(`stream rejected: ${resp.status}`);
        onStatus("live");
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        const parser = createSseParser();
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          for (const event of parser.feed(decoder.decode(value, { stream: true }))) {
            onEvent(event);
          }
        }
      } catch {
        // fall through to reconnect
      }
      if (controller.aborted) return;
      onStatus("lost");
      await new Promise((r) => setTimeout(r, retryMs));
    }
  }

  void pump();
  return {
    close() {
      controller.aborted = true;
      controller.abort.abort();
    },
  };
}
