// @vitest-environment jsdom
import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { Studio } from "../src/app.js";
import { decodeFrame, encodeFrame } from "../src/protocol.js";
import { MemoryTransport } from "../src/transport.js";

const METRICS = { left: 0, top: 0, width: 1200, height: 720 };

function sentFrames(mem: MemoryTransport) {
  return mem.sent.map((line) => decodeFrame(line.trim()));
}

function feedHello(mem: MemoryTransport, mode: "gaze" | "mouse") {
  mem.feed(encodeFrame("Hello", 0, { protocol: 1, package: "0.1.0", mode }));
}

function feedGeneration(mem: MemoryTransport, seq: number, generation = 1) {
  mem.feed(
    encodeFrame("NewGeneration", seq, {
      trial_id: 1,
      generation,
      stage: { kind: "freeform", target: null },
      timers: { now_ms: 0, stage_elapsed_ms: 0, dwell_ms: Array(15).fill(0) },
      cells: [],
    }),
  );
}

describe("input capture", () => {
  let root: HTMLElement;
  let mem: MemoryTransport;
  let studio: Studio;
  let clock: number;

  beforeEach(() => {
    vi.useFakeTimers();
    clock = 100_000;
    document.body.innerHTML = "";
    root = document.createElement("div");
    document.body.appendChild(root);
    mem = new MemoryTransport();
    studio = new Studio(root, mem, {
      input: { metrics: () => METRICS },
      now: () => clock,
      schedule: () => {}, // frames stepped by hand
    });
  });

  afterEach(() => {
    studio.stop();
    vi.useRealTimers();
  });

  async function start(mode: "gaze" | "mouse") {
    const ready = studio.start();
    feedHello(mem, mode);
    await ready;
    mem.sent.length = 0; // drop the client Hello; tests watch commands
  }

  it("streams normalized pointer samples at the configured cadence", async () => {
    await start("gaze");
    feedGeneration(mem, 1);
    root.dispatchEvent(
      new MouseEvent("pointermove", { clientX: 1080, clientY: 360, bubbles: true }),
    );
    vi.advanceTimersByTime(100); // six beats at 60 Hz
    const samples = sentFrames(mem).filter((m) => m.type === "PointerSample");
    expect(samples.length).toBeGreaterThanOrEqual(5);
    for (const s of samples) {
      expect(s.payload.x).toBeCloseTo(0.9, 10);
      expect(s.payload.y).toBeCloseTo(0.5, 10);
      expect(s.payload.valid).toBe(true);
      expect(s.payload.t_ms).toBe(clock);
    }
  });

  it("reports valid=false once the pointer leaves the window", async () => {
    await start("gaze");
    feedGeneration(mem, 1);
    root.dispatchEvent(
      new MouseEvent("pointermove", { clientX: 600, clientY: 300, bubbles: true }),
    );
    vi.advanceTimersByTime(40);
    root.dispatchEvent(new MouseEvent("pointerleave", { bubbles: false }));
    vi.advanceTimersByTime(40);
    const samples = sentFrames(mem).filter((m) => m.type === "PointerSample");
    expect(samples.some((s) => s.payload.valid === true)).toBe(true);
    expect(samples[samples.length - 1].payload.valid).toBe(false);
  });

  it("does not stream before a trial exists", async () => {
    await start("gaze");
    vi.advanceTimersByTime(200);
    expect(sentFrames(mem).filter((m) => m.type === "PointerSample")).toHaveLength(0);
  });

  it("never streams pointer samples in mouse mode", async () => {
    await start("mouse");
    feedGeneration(mem, 1);
    vi.advanceTimersByTime(200);
    expect(sentFrames(mem).filter((m) => m.type === "PointerSample")).toHaveLength(0);
  });

  it("right-click toggles selection; left-click submits the set", async () => {
    await start("mouse");
    feedGeneration(mem, 1);
    studio.els.cells[2].dispatchEvent(new MouseEvent("contextmenu", { bubbles: true }));
    studio.els.cells[9].dispatchEvent(new MouseEvent("contextmenu", { bubbles: true }));
    studio.frame(0);
    expect(studio.els.cells[2].classList.contains("selected")).toBe(true);
    expect(studio.els.cells[9].classList.contains("selected")).toBe(true);
    studio.els.grid.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    const submits = sentFrames(mem).filter((m) => m.type === "SelectionSubmit");
    expect(submits).toHaveLength(1);
    expect(submits[0].payload.cells).toEqual([2, 9]);
  });

  it("toggling a cell twice deselects it", async () => {
    await start("mouse");
    feedGeneration(mem, 1);
    const cell = studio.els.cells[4];
    cell.dispatchEvent(new MouseEvent("contextmenu", { bubbles: true }));
    cell.dispatchEvent(new MouseEvent("contextmenu", { bubbles: true }));
    studio.els.cells[1].dispatchEvent(new MouseEvent("contextmenu", { bubbles: true }));
    studio.els.grid.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    const submits = sentFrames(mem).filter((m) => m.type === "SelectionSubmit");
    expect(submits[0].payload.cells).toEqual([1]);
  });

  it("empty submission warns inline and sends nothing", async () => {
    await start("mouse");
    feedGeneration(mem, 1);
    studio.els.grid.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    expect(sentFrames(mem).filter((m) => m.type === "SelectionSubmit")).toHaveLength(0);
    studio.frame(0);
    expect(studio.els.warning.hidden).toBe(false);
    expect(studio.els.warning.textContent).toMatch(/select at least one/);
  });

  it("ignores selection gestures entirely in gaze mode", async () => {
    await start("gaze");
    feedGeneration(mem, 1);
    studio.els.cells[3].dispatchEvent(new MouseEvent("contextmenu", { bubbles: true }));
    studio.els.grid.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    const frames = sentFrames(mem);
    expect(frames.filter((m) => m.type === "SelectionSubmit")).toHaveLength(0);
    expect(studio.state.selected.size).toBe(0);
  });

  it("Done sends Terminate then collects the reason as a questionnaire", async () => {
    await start("mouse");
    feedGeneration(mem, 1);
    studio.els.doneButton.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    let frames = sentFrames(mem);
    expect(frames.filter((m) => m.type === "Terminate")).toHaveLength(1);
    expect(frames.filter((m) => m.type === "Questionnaire")).toHaveLength(0);
    expect(studio.state.prompt.open).toBe(true);

    studio.els.promptInput.value = "  it looked right  ";
    studio.els.promptSubmit.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    frames = sentFrames(mem);
    const q = frames.filter((m) => m.type === "Questionnaire");
    expect(q).toHaveLength(1);
    expect(q[0].payload.reason).toBe("it looked right");
    expect(studio.state.prompt.open).toBe(false);
  });

  it("Enter mirrors Done and S mirrors Snapshot", async () => {
    await start("mouse");
    feedGeneration(mem, 1);
    document.dispatchEvent(new KeyboardEvent("keydown", { key: "Enter", bubbles: true }));
    document.dispatchEvent(new KeyboardEvent("keydown", { key: "s", bubbles: true }));
    const frames = sentFrames(mem);
    expect(frames.filter((m) => m.type === "Terminate")).toHaveLength(1);
    expect(frames.filter((m) => m.type === "Snapshot")).toHaveLength(1);
  });

  it("typing in the reason prompt never triggers trial controls", async () => {
    await start("mouse");
    feedGeneration(mem, 1);
    studio.els.doneButton.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    mem.sent.length = 0;
    studio.els.promptInput.value = "so";
    studio.els.promptInput.dispatchEvent(
      new KeyboardEvent("keydown", { key: "s", bubbles: true }),
    );
    expect(sentFrames(mem).filter((m) => m.type === "Snapshot")).toHaveLength(0);
    studio.els.promptInput.dispatchEvent(
      new KeyboardEvent("keydown", { key: "Enter", bubbles: true }),
    );
    const frames = sentFrames(mem);
    expect(frames.filter((m) => m.type === "Questionnaire")).toHaveLength(1);
    expect(frames.filter((m) => m.type === "Terminate")).toHaveLength(0);
  });

  it("Restart terminates with a restart reason", async () => {
    await start("mouse");
    feedGeneration(mem, 1);
    studio.els.restartButton.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    const ends = sentFrames(mem).filter((m) => m.type === "Terminate");
    expect(ends).toHaveLength(1);
    expect(ends[0].payload.reason).toBe("restart");
  });

  it("every outbound frame carries a strictly increasing seq", async () => {
    await start("gaze");
    feedGeneration(mem, 1);
    root.dispatchEvent(
      new MouseEvent("pointermove", { clientX: 600, clientY: 300, bubbles: true }),
    );
    vi.advanceTimersByTime(100);
    document.dispatchEvent(new KeyboardEvent("keydown", { key: "s", bubbles: true }));
    document.dispatchEvent(new KeyboardEvent("keydown", { key: "Enter", bubbles: true }));
    const seqs = sentFrames(mem).map((m) => m.seq);
    expect(seqs.length).toBeGreaterThan(3);
    for (let i = 1; i < seqs.length; i++) {
      expect(seqs[i]).toBeGreaterThan(seqs[i - 1]);
    }
  });
});
