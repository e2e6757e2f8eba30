/**
 * Wire protocol: one JSON object per line, {"type", "seq", "payload"}.
 *
 * The server speaks first with Hello and expects a Hello back carrying the
 * same protocol version before it will take commands.  Sequence numbers
 * increase strictly per direction; the client never reuses or rewinds one.
 */

export const PROTOCOL_VERSION = 1;

export interface WireMessage {
  type: string;
  seq: number;
  payload: Record<string, unknown>;
}

export interface MeshPayload {
  /** rows of [x, y, z]; empty for an empty phenotype */
  vertices: number[][];
  /** rows of [a, b, c] vertex indices */
  indices: number[][];
}

export interface CellPayload {
  cell: number;
  mesh: MeshPayload;
  color: [number, number, number];
  summary: Record<string, unknown>;
}

export interface StageDescriptor {
  kind: string;
  target: string | null;
}

export interface GenerationTimers {
  now_ms: number;
  stage_elapsed_ms: number | null;
  dwell_ms: number[];
}

export interface GenerationPayload {
  trial_id: number;
  generation: number;
  stage: StageDescriptor;
  timers: GenerationTimers;
  cells: CellPayload[];
}

export class ProtocolError extends Error {}

export function encodeFrame(
  type: string,
  seq: number,
  payload: Record<string, unknown> = {},
): string {
  return JSON.stringify({ type, seq, payload }) + "\n";
}

export function decodeFrame(line: string): WireMessage {
  let parsed: unknown;
  try {
    parsed = JSON.parse(line);
  } catch (err) {
    throw new ProtocolError(`undecodable frame: ${(err as Error).message}`);
  }
  if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
    throw new ProtocolError("frame must be a JSON object");
  }
  const obj = parsed as Record<string, unknown>;
  if (typeof obj.type !== "string" || !Number.isInteger(obj.seq)) {
    throw new ProtocolError("frame must carry string 'type' and integer 'seq'");
  }
  const payload = obj.payload ?? {};
  if (typeof payload !== "object" || payload === null || Array.isArray(payload)) {
    throw new ProtocolError("'payload' must be an object");
  }
  return { type: obj.type, seq: obj.seq as number, payload: payload as Record<string, unknown> };
}

/** Reassembles LF-delimited frames from arbitrarily chunked stream data. */
export class LineCodec {
  private buffer = "";

  push(chunk: string): string[] {
    this.buffer += chunk;
    const lines: string[] = [];
    let at: number;
    while ((at = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, at);
      this.buffer = this.buffer.slice(at + 1);
      if (line.trim().length > 0) lines.push(line);
    }
    return lines;
  }
}

/** Structural check for one grid cell; malformed cells get an error badge. */
export function cellProblem(cell: unknown): string | null {
  if (typeof cell !== "object" || cell === null) return "cell entry is not an object";
  const c = cell as Record<string, unknown>;
  if (!Number.isInteger(c.cell)) return "missing cell index";
  const mesh = c.mesh as MeshPayload | undefined;
  if (typeof mesh !== "object" || mesh === null) return "missing mesh";
  if (!Array.isArray(mesh.vertices) || !Array.isArray(mesh.indices)) {
    return "mesh lacks vertices/indices arrays";
  }
  for (const row of mesh.vertices) {
    if (!Array.isArray(row) || row.length !== 3 || !row.every(Number.isFinite)) {
      return "vertex row is not three finite numbers";
    }
  }
  for (const tri of mesh.indices) {
    if (!Array.isArray(tri) || tri.length !== 3) return "index row is not a triple";
    if (!tri.every((i) => Number.isInteger(i) && i >= 0 && i < mesh.vertices.length)) {
      return "triangle index out of range";
    }
  }
  const color = c.color;
  if (!Array.isArray(color) || color.length !== 3 || !color.every(Number.isFinite)) {
    return "color is not an [r, g, b] triple";
  }
  return null;
}
