/**
 * Session protocol client: handshake, typed commands, inbound dispatch.
 *
 * Holds the outbound sequence counter — every message it sends carries a
 * strictly larger seq than the one before, and nothing else on the page is
 * allowed to write to the transport.
 */

import {
  PROTOCOL_VERSION,
  ProtocolError,
  WireMessage,
  decodeFrame,
  encodeFrame,
} from "./protocol.js";
import { Transport } from "./transport.js";

export interface HelloInfo {
  protocol: number;
  package: string;
  mode: string;
}

export interface PointerSample {
  t_ms: number;
  x: number;
  y: number;
  valid: boolean;
}

export class SessionClient {
  private outSeq = 0;
  private messageHandlers: Array<(msg: WireMessage) => void> = [];
  private decodeErrors: Array<(err: ProtocolError) => void> = [];
  private helloResolve: ((info: HelloInfo) => void) | null = null;
  private helloReject: ((err: Error) => void) | null = null;
  private readonly helloPromise: Promise<HelloInfo>;
  serverHello: HelloInfo | null = null;

  constructor(private readonly transport: Transport) {
    this.helloPromise = new Promise((resolve, reject) => {
      this.helloResolve = resolve;
      this.helloReject = reject;
    });
    transport.onLine((line) => this.handleLine(line));
    transport.onClose(() => {
      this.helloReject?.(new Error("connection closed before Hello"));
      this.helloReject = null;
      this.helloResolve = null;
    });
  }

  /** Resolves once the server's Hello arrived and ours went back. */
  ready(): Promise<HelloInfo> {
    return this.helloPromise;
  }

  onMessage(handler: (msg: WireMessage) => void): void {
    this.messageHandlers.push(handler);
  }

  onDecodeError(handler: (err: ProtocolError) => void): void {
    this.decodeErrors.push(handler);
  }

  get lastOutSeq(): number {
    return this.outSeq;
  }

  send(type: string, payload: Record<string, unknown> = {}): number {
    this.outSeq += 1;
    this.transport.send(encodeFrame(type, this.outSeq, payload));
    return this.outSeq;
  }

  startStage(stage: "directed" | "freeform", target?: string): number {
    const payload: Record<string, unknown> = { stage };
    if (target !== undefined) payload.target = target;
    return this.send("StartStage", payload);
  }

  pointerSample(sample: PointerSample): number {
    return this.send("PointerSample", { ...sample });
  }

  selectionSubmit(cells: number[]): number {
    return this.send("SelectionSubmit", { cells });
  }

  snapshot(): number {
    return this.send("Snapshot");
  }

  terminate(reason: string): number {
    return this.send("Terminate", { reason });
  }

  questionnaire(reason: string): number {
    return this.send("Questionnaire", { reason });
  }

  close(): void {
    this.transport.close();
  }

  private handleLine(line: string): void {
    let msg: WireMessage;
    try {
      msg = decodeFrame(line);
    } catch (err) {
      for (const handler of this.decodeErrors) handler(err as ProtocolError);
      return;
    }
    if (msg.type === "Hello" && this.serverHello === null) {
      this.serverHello = {
        protocol: Number(msg.payload.protocol),
        package: String(msg.payload.package ?? ""),
        mode: String(msg.payload.mode ?? ""),
      };
      this.send("Hello", { protocol: PROTOCOL_VERSION });
      this.helloResolve?.(this.serverHello);
      this.helloResolve = null;
      this.helloReject = null;
    }
    for (const handler of this.messageHandlers) handler(msg);
  }
}
