// Transport abstraction so the session logic is testable without sockets.

export interface Transport {
  send(raw: string): void;
  close(): void;
  onMessage(cb: (raw: string) => void): void;
  onClose(cb: () => void): void;
}

interface WebSocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: string, cb: (ev: { data?: unknown }) => void): void;
}

export class WebSocketTransport implements Transport {
  private ws: WebSocketLike;
  private msgCbs: ((raw: string) => void)[] = [];
  private closeCbs: (() => void)[] = [];
  private queue: string[] = [];
  private open = false;

  constructor(ws: WebSocketLike) {
    this.ws = ws;
    ws.addEventListener("open", () => {
      this.open = true;
      for (const raw of this.queue) this.ws.send(raw);
      this.queue = [];
    });
    ws.addEventListener("message", (ev) => {
      const raw = typeof ev.data === "string" ? ev.data : String(ev.data);
      for (const cb of this.msgCbs) cb(raw);
    });
    ws.addEventListener("close", () => {
      for (const cb of this.closeCbs) cb();
    });
  }

  send(raw: string): void {
    if (this.open) this.ws.send(raw);
    else this.queue.push(raw);
  }

  close(): void {
    this.ws.close();
  }

  onMessage(cb: (raw: string) => void): void {
    this.msgCbs.push(cb);
  }

  onClose(cb: () => void): void {
    this.closeCbs.push(cb);
  }
}

/** In-memory transport for tests: scripted server transcripts in, client
 * messages captured. */
export class FakeTransport implements Transport {
  sent: string[] = [];
  private msgCbs: ((raw: string) => void)[] = [];
  private closeCbs: (() => void)[] = [];
  closed = false;

  send(raw: string): void {
    this.sent.push(raw);
  }

  close(): void {
    this.closed = true;
    for (const cb of this.closeCbs) cb();
  }

  onMessage(cb: (raw: string) => void): void {
    this.msgCbs.push(cb);
  }

  onClose(cb: () => void): void {
    this.closeCbs.push(cb);
  }

  deliver(raw: string): void {
    for (const cb of this.msgCbs) cb(raw);
  }
}
