/** Line-oriented stream transports the protocol client rides on. */

import { LineCodec } from "./protocol.js";

export interface Transport {
  send(line: string): void;
  onLine(handler: (line: string) => void): void;
  onClose(handler: () => void): void;
  close(): void;
}

/**
 * In-memory transport for tests: the "server" side feeds lines in and reads
 * what the client sent from `sent`.
 */
export class MemoryTransport implements Transport {
  readonly sent: string[] = [];
  private lineHandlers: Array<(line: string) => void> = [];
  private closeHandlers: Array<() => void> = [];
  private codec = new LineCodec();
  closed = false;

  send(line: string): void {
    if (this.closed) throw new Error("transport closed");
    this.sent.push(line);
  }

  onLine(handler: (line: string) => void): void {
    this.lineHandlers.push(handler);
  }

  onClose(handler: () => void): void {
    this.closeHandlers.push(handler);
  }

  close(): void {
    if (this.closed) return;
    this.closed = true;
    for (const handler of this.closeHandlers) handler();
  }

  /** Test hook: deliver raw stream data as if it arrived from the server. */
  feed(data: string): void {
    for (const line of this.codec.push(data)) {
      for (const handler of this.lineHandlers) handler(line);
    }
  }
}

/**
 * TCP transport over node's net module, imported lazily so the module can be
 * bundled for environments without node builtins (where a different
 * Transport is supplied).
 */
export async function connectTcp(host: string, port: number): Promise<Transport> {
  const net = await import("node:net");
  const socket: import("node:net").Socket = await new Promise((resolve, reject) => {
    const s = net.createConnection({ host, port }, () => {
      s.off("error", reject);
      resolve(s);
    });
    s.once("error", reject);
  });
  socket.setNoDelay(true);

  const codec = new LineCodec();
  const lineHandlers: Array<(line: string) => void> = [];
  const closeHandlers: Array<() => void> = [];
  socket.on("data", (chunk: Buffer) => {
    for (const line of codec.push(chunk.toString("utf-8"))) {
      for (const handler of lineHandlers) handler(line);
    }
  });
  socket.on("close", () => {
    for (const handler of closeHandlers) handler();
  });
  socket.on("error", () => {
    /* surfaced via close */
  });

  return {
    send(line: string): void {
      socket.write(line);
    },
    onLine(handler): void {
      lineHandlers.push(handler);
    },
    onClose(handler): void {
      closeHandlers.push(handler);
    },
    close(): void {
      socket.end();
      socket.destroy();
    },
  };
}
