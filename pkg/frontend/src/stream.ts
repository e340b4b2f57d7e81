/**
 * WebSocket session stream with reconnect-and-resync.
 *
 * Messages are handled strictly in arrival order. On disconnect the console
 * disables actions, retries with backoff and, once reconnected, performs a
 * full-state resync via GET /state before trusting pushes again (the
 * replacement socket's first message is a fresh snapshot anyway, but the
 * explicit resync keeps the contract obvious).
 */

import type { StateSnapshot, StreamMessage } from "./types.js";

export interface SocketLike {
  onmessage: ((event: { data: string }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  onopen: (() => void) | null;
  close(): void;
}

export interface StreamOptions {
  openSocket: () => SocketLike;
  fetchState: () => Promise<StateSnapshot>;
  onState: (snapshot: StateSnapshot) => void;
  onConnection: (connected: boolean) => void;
  /** Delay scheduler, injectable for tests. */
  schedule?: (fn: () => void, ms: number) => void;
  maxBackoffMs?: number;
}

export class SessionStream {
  private socket: SocketLike | null = null;
  private attempts = 0;
  private stopped = false;
  private readonly schedule: (fn: () => void, ms: number) => void;

  constructor(private readonly options: StreamOptions) {
    this.schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
  }

  start(): void {
    this.stopped = false;
    this.connect();
  }

  stop(): void {
    this.stopped = true;
    this.socket?.close();
    this.socket = null;
  }

  backoffMs(): number {
    const cap = this.options.maxBackoffMs ?? 5000;
    return Math.min(cap, 250 * 2 ** Math.min(this.attempts, 6));
  }

  private connect(): void {
    if (this.stopped) {
      return;
    }
    const socket = this.options.openSocket();
    this.socket = socket;
    socket.onopen = () => {
      this.attempts = 0;
      this.options.onConnection(true);
      void this.options
        .fetchState()
        .then((snapshot) => this.options.onState(snapshot))
        .catch(() => {
          // The push channel will deliver the snapshot; resync is best effort.
        });
    };
    socket.onmessage = (event) => {
      const message = JSON.parse(event.data) as StreamMessage;
      this.options.onState(message.delta);
    };
    const lost = () => {
      if (this.socket !== socket) {
        return;
      }
      this.socket = null;
      this.options.onConnection(false);
      if (!this.stopped) {
        this.attempts += 1;
        this.schedule(() => this.connect(), this.backoffMs());
      }
    };
    socket.onclose = lost;
    socket.onerror = lost;
  }
}
