export {
  PROTOCOL_VERSION,
  ProtocolError,
  LineCodec,
  encodeFrame,
  decodeFrame,
  cellProblem,
} from "./protocol.js";
export type {
  WireMessage,
  MeshPayload,
  CellPayload,
  GenerationPayload,
  StageDescriptor,
  GenerationTimers,
} from "./protocol.js";
export { MemoryTransport, connectTcp } from "./transport.js";
export type { Transport } from "./transport.js";
export { SessionClient } from "./client.js";
export type { HelloInfo, PointerSample } from "./client.js";
export {
  DEFAULT_UI_CONFIG,
  initialViewState,
  applyMessage,
  toggleSelection,
  takeSubmission,
} from "./viewstate.js";
export type { UiConfig, ViewState, Mode, PromptState } from "./viewstate.js";
export { rotationAngle, buildDisplayList, isEmptyMesh } from "./geometry.js";
export type { DisplayList, ShadedPath } from "./geometry.js";
export { buildGrid, renderFrame, ROWS, COLS } from "./render.js";
export type { GridElements } from "./render.js";
export { InputController } from "./input.js";
export type { Metrics, InputOptions } from "./input.js";
export { Studio, mountStudio } from "./app.js";
export type { StudioOptions } from "./app.js";
