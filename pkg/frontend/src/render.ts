/**
 * DOM grid renderer: 15 cells in 3 rows x 5 columns, each an SVG the
 * display list is painted into.  The renderer owns no session state — every
 * frame is drawn fresh from the ViewState's latest-payload slot, which is
 * what lets a reconnecting client pick up mid-session.
 */

import { buildDisplayList, rotationAngle } from "./geometry.js";
import { UiConfig, ViewState } from "./viewstate.js";

export const ROWS = 3;
export const COLS = 5;
const SVG_NS = "http://www.w3.org/2000/svg";

export interface GridElements {
  root: HTMLElement;
  grid: HTMLElement;
  cells: HTMLElement[];
  status: HTMLElement;
  warning: HTMLElement;
  doneButton: HTMLButtonElement;
  snapshotButton: HTMLButtonElement;
  restartButton: HTMLButtonElement;
  prompt: HTMLElement;
  promptInput: HTMLInputElement;
  promptSubmit: HTMLButtonElement;
}

export function buildGrid(root: HTMLElement): GridElements {
  root.innerHTML = "";
  root.classList.add("studio");

  const status = document.createElement("div");
  status.className = "status";
  root.appendChild(status);

  const grid = document.createElement("div");
  grid.className = "grid";
  grid.style.display = "grid";
  grid.style.gridTemplateColumns = `repeat(${COLS}, 1fr)`;
  grid.style.gridTemplateRows = `repeat(${ROWS}, 1fr)`;
  root.appendChild(grid);

  const cells: HTMLElement[] = [];
  for (let i = 0; i < ROWS * COLS; i++) {
    const cell = document.createElement("div");
    cell.className = "cell";
    cell.dataset.cell = String(i);

    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("viewBox", "0 0 100 100");
    svg.classList.add("object");
    cell.appendChild(svg);

    const badge = document.createElement("div");
    badge.className = "badge";
    badge.hidden = true;
    cell.appendChild(badge);

    const mark = document.createElement("div");
    mark.className = "mark";
    mark.hidden = true;
    mark.textContent = "✓";
    cell.appendChild(mark);

    grid.appendChild(cell);
    cells.push(cell);
  }

  const warning = document.createElement("div");
  warning.className = "warning";
  warning.hidden = true;
  root.appendChild(warning);

  const controls = document.createElement("div");
  controls.className = "controls";
  const doneButton = document.createElement("button");
  doneButton.textContent = "Target reached / Done";
  doneButton.className = "done";
  const snapshotButton = document.createElement("button");
  snapshotButton.textContent = "Snapshot";
  snapshotButton.className = "snapshot";
  const restartButton = document.createElement("button");
  restartButton.textContent = "Restart";
  restartButton.className = "restart";
  controls.append(doneButton, snapshotButton, restartButton);
  root.appendChild(controls);

  const prompt = document.createElement("div");
  prompt.className = "prompt";
  prompt.hidden = true;
  const promptLabel = document.createElement("label");
  promptLabel.textContent = "Why did you end this trial?";
  const promptInput = document.createElement("input");
  promptInput.type = "text";
  const promptSubmit = document.createElement("button");
  promptSubmit.textContent = "Send";
  prompt.append(promptLabel, promptInput, promptSubmit);
  root.appendChild(prompt);

  return {
    root,
    grid,
    cells,
    status,
    warning,
    doneButton,
    snapshotButton,
    restartButton,
    prompt,
    promptInput,
    promptSubmit,
  };
}

function paintCell(
  cellEl: HTMLElement,
  list: ReturnType<typeof buildDisplayList>,
): void {
  const svg = cellEl.querySelector("svg")!;
  const badge = cellEl.querySelector<HTMLElement>(".badge")!;
  while (svg.firstChild) svg.removeChild(svg.firstChild);
  if (list.kind === "error") {
    badge.hidden = false;
    badge.textContent = `⚠ ${list.problem}`;
    cellEl.classList.add("malformed");
    return;
  }
  badge.hidden = true;
  cellEl.classList.remove("malformed");
  if (list.kind === "empty") {
    cellEl.classList.add("empty");
    return;
  }
  cellEl.classList.remove("empty");
  for (const path of list.paths) {
    const el = document.createElementNS(SVG_NS, "path");
    el.setAttribute("d", path.d);
    el.setAttribute("fill", path.fill);
    svg.appendChild(el);
  }
}

/** Draw one frame at wall-clock tMs from whatever payload is current. */
export function renderFrame(
  els: GridElements,
  state: ViewState,
  tMs: number,
  config: UiConfig,
): void {
  const angle = rotationAngle(tMs, config);
  const payload = state.payload;
  for (let i = 0; i < els.cells.length; i++) {
    const cellEl = els.cells[i];
    const entry = payload?.cells[i];
    if (entry === undefined) {
      paintCell(cellEl, { kind: "empty" });
    } else {
      paintCell(cellEl, buildDisplayList(entry, angle, config));
    }
    cellEl.classList.toggle("highlight", state.highlight === i);
    const mark = cellEl.querySelector<HTMLElement>(".mark")!;
    mark.hidden = !state.selected.has(i);
    cellEl.classList.toggle("selected", state.selected.has(i));
  }

  const bits: string[] = [];
  if (state.mode !== null) bits.push(`mode ${state.mode}`);
  if (payload !== null) {
    bits.push(`trial ${payload.trial_id}`, `generation ${payload.generation}`);
    if (payload.stage.target) bits.push(`target ${payload.stage.target}`);
    if (payload.timers.stage_elapsed_ms != null) {
      bits.push(`stage ${(payload.timers.stage_elapsed_ms / 60000).toFixed(1)} min`);
    }
  }
  if (state.paused) bits.push("PAUSED");
  if (state.stageComplete !== null) bits.push(`stage ${state.stageComplete} complete`);
  els.status.textContent = bits.join(" · ");
  els.root.classList.toggle("paused", state.paused);

  els.warning.hidden = state.warning === null;
  els.warning.textContent = state.warning ?? "";
  els.prompt.hidden = !state.prompt.open;
}
