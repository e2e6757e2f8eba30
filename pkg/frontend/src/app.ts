/**
 * Studio: wires transport, client, view state, renderer and input together.
 *
 * Single-threaded and event-driven: the message handler only folds messages
 * into the state; the render loop reads the latest payload on its own clock,
 * so a slow frame never backs up the socket.
 */

import { SessionClient } from "./client.js";
import { InputController, InputOptions } from "./input.js";
import { GridElements, buildGrid, renderFrame } from "./render.js";
import { Transport } from "./transport.js";
import {
  DEFAULT_UI_CONFIG,
  UiConfig,
  ViewState,
  applyMessage,
  initialViewState,
} from "./viewstate.js";

export interface StudioOptions {
  config?: Partial<UiConfig>;
  input?: InputOptions;
  /** frame scheduler; defaults to requestAnimationFrame with a timer fallback */
  schedule?: (cb: () => void) => void;
  now?: () => number;
}

export class Studio {
  readonly config: UiConfig;
  readonly state: ViewState;
  readonly client: SessionClient;
  readonly els: GridElements;
  readonly input: InputController;
  private readonly now: () => number;
  private readonly schedule: (cb: () => void) => void;
  private running = false;

  constructor(root: HTMLElement, transport: Transport, options: StudioOptions = {}) {
    this.config = { ...DEFAULT_UI_CONFIG, ...options.config };
    this.state = initialViewState();
    this.client = new SessionClient(transport);
    this.els = buildGrid(root);
    this.now = options.now ?? (() => Date.now());
    this.schedule =
      options.schedule ??
      (typeof requestAnimationFrame === "function"
        ? (cb) => requestAnimationFrame(() => cb())
        : (cb) => void setTimeout(cb, 1000 / 60));

    this.client.onMessage((msg) => applyMessage(this.state, msg));
    transport.onClose(() => {
      this.state.connection = "closed";
    });
    this.input = new InputController(
      this.els,
      this.client,
      this.state,
      this.config,
      { now: this.now, ...options.input },
    );
  }

  /** Handshake, then start input capture and the render loop. */
  async start(): Promise<void> {
    const hello = await this.client.ready();
    this.state.connection = "ready";
    this.state.mode = hello.mode === "mouse" ? "mouse" : "gaze";
    this.input.start();
    this.running = true;
    const loop = () => {
      if (!this.running) return;
      this.frame();
      this.schedule(loop);
    };
    this.schedule(loop);
  }

  /** Draw one frame now; exposed so tests can step the clock by hand. */
  frame(tMs?: number): void {
    renderFrame(this.els, this.state, tMs ?? this.now(), this.config);
  }

  stop(): void {
    this.running = false;
    this.input.stop();
    this.client.close();
  }
}

export function mountStudio(
  root: HTMLElement,
  transport: Transport,
  options: StudioOptions = {},
): Studio {
  return new Studio(root, transport, options);
}
