/**
 * Thin browser-socket wrapper: one callback per parsed frame, explicit
 * connection state changes, and sends that report failure instead of
 * throwing. No reconnection: a dropped link is rendered, not papered over.
 */

import { Command, ParseResult, parseTelemetry, serializeCommand } from "./wire.js";
import { ConnectionState } from "./state.js";

export interface SocketCallbacks {
  onFrame: (parsed: ParseResult) => void;
  onConnection: (state: ConnectionState) => void;
}

export class ConsoleSocket {
  private ws: WebSocket;
  private queue: ParseResult[] = [];
  private draining = false;
  private callbacks: SocketCallbacks;

  constructor(url: string, callbacks: SocketCallbacks) {
    this.callbacks = callbacks;
    this.ws = new WebSocket(url);
    this.ws.onopen = () => callbacks.onConnection("open");
    this.ws.onclose = () => callbacks.onConnection("closed");
    this.ws.onerror = () => callbacks.onConnection("closed");
    this.ws.onmessage = (ev: MessageEvent) => {
      if (typeof ev.data === "string") {
        this.enqueue(parseTelemetry(ev.data));
      }
    };
  }

  /** Frames are dispatched strictly in arrival order, one at a time. */
  private enqueue(parsed: ParseResult): void {
    this.queue.push(parsed);
    if (this.draining) {
      return;
    }
    this.draining = true;
    try {
      let item: ParseResult | undefined;
      while ((item = this.queue.shift()) !== undefined) {
        this.callbacks.onFrame(item);
      }
    } finally {
      this.draining = false;
    }
  }

  /** True if the command went out; false means the link is not open. */
  send(cmd: Command): boolean {
    if (this.ws.readyState !== WebSocket.OPEN) {
      return false;
    }
    this.ws.send(serializeCommand(cmd));
    return true;
  }

  close(): void {
    this.ws.close();
  }
}
