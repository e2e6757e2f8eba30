import { describe, expect, it } from "vitest";

import { WireMessage } from "../src/protocol.js";
import {
  applyMessage,
  initialViewState,
  takeSubmission,
  toggleSelection,
} from "../src/viewstate.js";

function msg(type: string, payload: Record<string, unknown> = {}, seq = 0): WireMessage {
  return { type, seq, payload };
}

function generation(gen: number): WireMessage {
  return msg("NewGeneration", {
    trial_id: 1,
    generation: gen,
    stage: { kind: "directed", target: "small,red,cone" },
    timers: { now_ms: 0, stage_elapsed_ms: null, dwell_ms: Array(15).fill(0) },
    cells: [],
  });
}

describe("message reducer", () => {
  it("learns the interaction mode from Hello", () => {
    const state = initialViewState();
    applyMessage(state, msg("Hello", { protocol: 1, mode: "mouse" }));
    expect(state.mode).toBe("mouse");
    expect(state.connection).toBe("ready");
  });

  it("replaces the payload slot and clears per-generation view state", () => {
    const state = initialViewState();
    applyMessage(state, msg("HighlightCell", { cell: 4 }));
    toggleSelection(state, 2);
    state.warning = "old warning";
    applyMessage(state, generation(2));
    expect(state.payload?.generation).toBe(2);
    expect(state.highlight).toBeNull();
    expect(state.selected.size).toBe(0);
    expect(state.warning).toBeNull();
  });

  it("tracks the latest highlight and pause flag", () => {
    const state = initialViewState();
    applyMessage(state, msg("HighlightCell", { cell: 7 }));
    expect(state.highlight).toBe(7);
    applyMessage(state, msg("HighlightCell", { cell: 11 }));
    expect(state.highlight).toBe(11);
    applyMessage(state, msg("Paused", { paused: true }));
    expect(state.paused).toBe(true);
    applyMessage(state, msg("Paused", { paused: false, paused_ms: 300 }));
    expect(state.paused).toBe(false);
  });

  it("records trial end, stage completion, and errors", () => {
    const state = initialViewState();
    applyMessage(state, msg("TrialEnd", { trial_id: 1, reason: "done", generations: 5 }));
    expect(state.lastTrialEnd).toEqual({ trialId: 1, reason: "done", generations: 5 });
    applyMessage(state, msg("StageComplete", { stage: "directed", trials: 3 }));
    expect(state.stageComplete).toBe("directed");
    applyMessage(state, msg("Error", { code: "EmptySelection", message: "nope" }));
    expect(state.lastError?.code).toBe("EmptySelection");
  });

  it("is stateless over reconnects: one payload fully determines the grid", () => {
    // a fresh client that missed the whole session so far
    const late = initialViewState();
    applyMessage(late, msg("Hello", { protocol: 1, mode: "gaze" }));
    applyMessage(late, generation(17));
    // versus one that watched everything
    const veteran = initialViewState();
    applyMessage(veteran, msg("Hello", { protocol: 1, mode: "gaze" }));
    for (let g = 1; g <= 17; g++) applyMessage(veteran, generation(g));
    expect(late.payload).toEqual(veteran.payload);
    expect(late.highlight).toEqual(veteran.highlight);
  });
});

describe("selection", () => {
  it("right-click toggling is an involution", () => {
    const state = initialViewState();
    toggleSelection(state, 9);
    expect([...state.selected]).toEqual([9]);
    toggleSelection(state, 9);
    expect(state.selected.size).toBe(0);
  });

  it("submitting an empty selection warns and sends nothing", () => {
    const state = initialViewState();
    expect(takeSubmission(state)).toBeNull();
    expect(state.warning).toMatch(/select at least one/);
  });

  it("submission drains the set in ascending order and clears the warning", () => {
    const state = initialViewState();
    state.warning = "stale";
    toggleSelection(state, 11);
    toggleSelection(state, 2);
    toggleSelection(state, 7);
    expect(takeSubmission(state)).toEqual([2, 7, 11]);
    expect(state.selected.size).toBe(0);
    expect(state.warning).toBeNull();
  });
});
