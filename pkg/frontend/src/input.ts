/**
 * Input capture: pointer-as-gaze streaming, mouse-mode selection, trial
 * controls, and the trial-end reason prompt.
 *
 * Gaze mode streams normalized PointerSample messages at a fixed cadence —
 * the server's PointerProxy source is the actual gaze authority; the client
 * just reports coordinates, including valid=false once the pointer leaves
 * the window (which is what makes the engine pause).
 */

import { SessionClient } from "./client.js";
import { GridElements } from "./render.js";
import { UiConfig, ViewState, takeSubmission, toggleSelection } from "./viewstate.js";

export interface Metrics {
  left: number;
  top: number;
  width: number;
  height: number;
}

export interface InputOptions {
  /** coordinate frame for normalizing pointer positions */
  metrics?: () => Metrics;
  /** wall clock, injectable for tests */
  now?: () => number;
}

export class InputController {
  private pointer = { x: 0.5, y: 0.5, valid: false };
  private timer: ReturnType<typeof setInterval> | null = null;
  private readonly metrics: () => Metrics;
  private readonly now: () => number;
  private readonly teardown: Array<() => void> = [];

  constructor(
    private readonly els: GridElements,
    private readonly client: SessionClient,
    private readonly state: ViewState,
    private readonly config: UiConfig,
    options: InputOptions = {},
  ) {
    this.metrics =
      options.metrics ??
      (() => {
        const rect = this.els.grid.getBoundingClientRect();
        return rect.width > 0
          ? { left: rect.left, top: rect.top, width: rect.width, height: rect.height }
          : { left: 0, top: 0, width: this.config.logicalWidth, height: this.config.logicalHeight };
      });
    this.now = options.now ?? (() => Date.now());
  }

  start(): void {
    const listen = <K extends keyof DocumentEventMap>(
      target: EventTarget,
      type: string,
      handler: (ev: Event) => void,
    ) => {
      target.addEventListener(type, handler);
      this.teardown.push(() => target.removeEventListener(type, handler));
    };

    listen(this.els.root, "pointermove", (ev) => {
      const mouse = ev as MouseEvent;
      const m = this.metrics();
      const x = (mouse.clientX - m.left) / m.width;
      const y = (mouse.clientY - m.top) / m.height;
      const inside = x >= 0 && x <= 1 && y >= 0 && y <= 1;
      this.pointer = { x, y, valid: inside };
    });
    listen(this.els.root, "pointerleave", () => {
      this.pointer = { ...this.pointer, valid: false };
    });

    // right-click toggles selection (mouse mode)
    listen(this.els.grid, "contextmenu", (ev) => {
      ev.preventDefault();
      if (this.state.mode !== "mouse") return;
      const cell = this.cellOf(ev);
      if (cell !== null) toggleSelection(this.state, cell);
    });

    // left-click anywhere on the grid submits the selected set
    listen(this.els.grid, "click", () => {
      if (this.state.mode !== "mouse") return;
      this.submitSelection();
    });

    listen(this.els.doneButton, "click", () => this.done("target reached"));
    listen(this.els.restartButton, "click", () => this.done("restart"));
    listen(this.els.snapshotButton, "click", () => this.client.snapshot());
    listen(this.els.promptSubmit, "click", () => this.sendReason());
    listen(this.els.promptInput, "keydown", (ev) => {
      const key = (ev as KeyboardEvent).key;
      if (key === "Enter") {
        ev.stopPropagation();
        this.sendReason();
      }
    });

    // keyboard mirrors: Enter = done, S = snapshot
    listen(this.els.root.ownerDocument, "keydown", (ev) => {
      const keyEv = ev as KeyboardEvent;
      if (keyEv.target === this.els.promptInput) return;
      if (keyEv.key === "Enter") this.done("target reached");
      else if (keyEv.key === "s" || keyEv.key === "S") this.client.snapshot();
    });

    if (this.timer === null) {
      this.timer = setInterval(
        () => this.streamPointer(),
        1000 / this.config.pointerHz,
      );
    }
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
    for (const off of this.teardown.splice(0)) off();
  }

  /** One cadence beat: report where the pointer is (or that it is gone). */
  private streamPointer(): void {
    if (this.state.mode !== "gaze") return;
    if (this.state.connection !== "ready" || this.state.payload === null) return;
    this.client.pointerSample({
      t_ms: this.now(),
      x: this.pointer.x,
      y: this.pointer.y,
      valid: this.pointer.valid,
    });
  }

  private submitSelection(): void {
    const cells = takeSubmission(this.state);
    if (cells === null) return; // warning set; nothing sent
    this.client.selectionSubmit(cells);
  }

  private done(reason: string): void {
    this.client.terminate(reason);
    this.state.prompt = { open: true, text: "" };
  }

  private sendReason(): void {
    if (!this.state.prompt.open) return;
    const text = this.els.promptInput.value.trim();
    this.client.questionnaire(text.length > 0 ? text : "no reason given");
    this.els.promptInput.value = "";
    this.state.prompt = { open: false, text: "" };
  }

  private cellOf(ev: Event): number | null {
    let node = ev.target as HTMLElement | null;
    while (node !== null && node !== this.els.grid) {
      if (node.dataset?.cell !== undefined) return Number(node.dataset.cell);
      node = node.parentElement;
    }
    return null;
  }
}
