/** WebSocket client for the session service.
 *
 * Sends a schema handshake on open and dispatches parsed server messages
 * to callbacks. The socket is injected through a minimal interface so the
 * protocol logic is testable without a network.
 */

import {
  type ClientMessage,
  parseServerMessage,
  SCHEMA_VERSION,
  type ServerMessage,
} from "./messages.js";

/** Subset of the WebSocket API the client needs. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  // `any` parameters keep the browser WebSocket structurally assignable
  onopen: ((ev?: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  onclose: ((ev?: any) => void) | null;
}

export interface ClientCallbacks {
  onServerMessage(msg: ServerMessage): void;
  onProtocolError(text: string): void;
  onClose?(): void;
}

export class SessionClient {
  private open = false;

  constructor(
    private socket: SocketLike,
    private callbacks: ClientCallbacks,
  ) {
    socket.onopen = () => {
      this.open = true;
      this.sendRaw({ type: "hello", schema: SCHEMA_VERSION });
    };
    socket.onmessage = (ev: { data: unknown }) => {
      if (typeof ev.data !== "string") {
        this.callbacks.onProtocolError("binary frame from server");
        return;
      }
      let msg: ServerMessage;
      try {
        msg = parseServerMessage(ev.data);
      } catch (err) {
        this.callbacks.onProtocolError(String(err));
        return;
      }
      this.callbacks.onServerMessage(msg);
    };
    socket.onclose = () => {
      this.open = false;
      this.callbacks.onClose?.();
    };
  }

  get isOpen(): boolean {
    return this.open;
  }

  send(msg: ClientMessage): void {
    if (!this.open) {
      this.callbacks.onProtocolError("socket not open");
      return;
    }
    this.sendRaw(msg);
  }

  close(): void {
    this.socket.close();
  }

  private sendRaw(msg: ClientMessage): void {
    this.socket.send(JSON.stringify(msg));
  }
}
