/**
 * Client-side view of the session.  Pure data plus a message reducer —
 * everything about evolution lives server-side; the view only mirrors the
 * latest payload, so a client that reconnects mid-session renders correctly
 * from the very next message it receives.
 */

import { GenerationPayload, WireMessage } from "./protocol.js";

/**
 * Presentation defaults the protocol does not dictate.  The choices live
 * here, in config, rather than as magic numbers in the renderer.
 */
export interface UiConfig {
  /** spin about the vertical axis, degrees per second */
  rotationDegPerSec: number;
  /** view-space light direction for flat shading */
  lightDirection: [number, number, number];
  /** ambient floor so unlit faces stay legible */
  ambient: number;
  /** pointer-as-gaze streaming cadence */
  pointerHz: number;
  /** logical canvas for normalizing pointer coordinates */
  logicalWidth: number;
  logicalHeight: number;
}

export const DEFAULT_UI_CONFIG: UiConfig = {
  rotationDegPerSec: 30,
  lightDirection: [0.4, 0.75, 0.53],
  ambient: 0.35,
  pointerHz: 60,
  logicalWidth: 1200,
  logicalHeight: 720,
};

export type Mode = "gaze" | "mouse";

export interface PromptState {
  open: boolean;
  text: string;
}

export interface TrialEndInfo {
  trialId: number;
  reason: string;
  generations: number;
}

export interface ErrorInfo {
  code: string;
  message: string;
}

export interface ViewState {
  connection: "connecting" | "ready" | "closed";
  mode: Mode | null;
  payload: GenerationPayload | null;
  highlight: number | null;
  selected: Set<number>;
  paused: boolean;
  warning: string | null;
  prompt: PromptState;
  lastTrialEnd: TrialEndInfo | null;
  stageComplete: string | null;
  lastError: ErrorInfo | null;
  snapshots: number;
}

export function initialViewState(): ViewState {
  return {
    connection: "connecting",
    mode: null,
    payload: null,
    highlight: null,
    selected: new Set(),
    paused: false,
    warning: null,
    prompt: { open: false, text: "" },
    lastTrialEnd: null,
    stageComplete: null,
    lastError: null,
    snapshots: 0,
  };
}

/**
 * Fold one server message into the state.  The payload slot holds only the
 * latest generation; the render loop reads it on its own clock.
 */
export function applyMessage(state: ViewState, msg: WireMessage): void {
  switch (msg.type) {
    case "Hello":
      state.connection = "ready";
      state.mode = msg.payload.mode === "mouse" ? "mouse" : "gaze";
      break;
    case "NewGeneration":
      state.payload = msg.payload as unknown as GenerationPayload;
      state.highlight = null; // stale highlight would point at a dead object
      state.selected.clear();
      state.warning = null;
      break;
    case "HighlightCell":
      state.highlight = Number(msg.payload.cell);
      break;
    case "Paused":
      state.paused = Boolean(msg.payload.paused);
      break;
    case "TrialEnd":
      state.lastTrialEnd = {
        trialId: Number(msg.payload.trial_id),
        reason: String(msg.payload.reason),
        generations: Number(msg.payload.generations),
      };
      break;
    case "StageComplete":
      state.stageComplete = String(msg.payload.stage);
      break;
    case "Error":
      state.lastError = {
        code: String(msg.payload.code),
        message: String(msg.payload.message),
      };
      break;
    case "Ack":
      if (msg.payload.command === "Snapshot") state.snapshots += 1;
      break;
    default:
      // unknown pushes are ignored; the server versions the catalog via Hello
      break;
  }
}

export function toggleSelection(state: ViewState, cell: number): void {
  if (state.selected.has(cell)) state.selected.delete(cell);
  else state.selected.add(cell);
}

/**
 * Selection the client may submit, or null (with the inline warning set)
 * when nothing is selected — an empty submit never reaches the wire.
 */
export function takeSubmission(state: ViewState): number[] | null {
  if (state.selected.size === 0) {
    state.warning = "select at least one object first (right-click)";
    return null;
  }
  const cells = [...state.selected].sort((a, b) => a - b);
  state.selected.clear();
  state.warning = null;
  return cells;
}
