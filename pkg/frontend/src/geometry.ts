/**
 * Mesh → 2-D display list: rotate about the vertical axis, orthographic
 * projection, painter's sort, flat shading.
 *
 * The output is plain data (SVG path strings with fills) so tests can assert
 * on it and the DOM layer stays a dumb painter.
 */

import { CellPayload, MeshPayload, cellProblem } from "./protocol.js";
import { UiConfig } from "./viewstate.js";

export interface ShadedPath {
  d: string;
  fill: string;
}

export type DisplayList =
  | { kind: "empty" }
  | { kind: "error"; problem: string }
  | { kind: "mesh"; paths: ShadedPath[]; triangles: number };

/** Continuous spin: angle in radians after tMs of wall-clock time. */
export function rotationAngle(tMs: number, config: UiConfig): number {
  return ((tMs / 1000) * config.rotationDegPerSec * Math.PI) / 180;
}

const VIEW = 100; // svg viewBox is 0..100 in both axes
const SHADE_LEVELS = 6;

function normalize(v: [number, number, number]): [number, number, number] {
  const n = Math.hypot(v[0], v[1], v[2]) || 1;
  return [v[0] / n, v[1] / n, v[2] / n];
}

/**
 * Build the painted representation of one cell at one instant.
 *
 * Camera looks down −z after the mesh is spun by `angle` around y (the
 * vertical axis).  Triangles facing away are culled, the rest are sorted
 * far-to-near and grouped into runs of equal shade so a cell stays a
 * handful of path elements rather than thousands.
 */
export function buildDisplayList(
  cell: CellPayload,
  angle: number,
  config: UiConfig,
): DisplayList {
  const problem = cellProblem(cell);
  if (problem !== null) return { kind: "error", problem };
  const mesh = cell.mesh;
  if (mesh.indices.length === 0) return { kind: "empty" };

  const cos = Math.cos(angle);
  const sin = Math.sin(angle);
  const n = mesh.vertices.length;
  const sx = new Float64Array(n);
  const sy = new Float64Array(n);
  const sz = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    const [x, y, z] = mesh.vertices[i];
    const rx = x * cos + z * sin;
    const rz = -x * sin + z * cos;
    // meshes live in [-1,1]^3; leave a margin so rotation never clips
    sx[i] = ((rx + 1.25) / 2.5) * VIEW;
    sy[i] = ((1.25 - y) / 2.5) * VIEW;
    sz[i] = rz;
  }

  const light = normalize(config.lightDirection);
  const visible: Array<{ depth: number; level: number; tri: number[] }> = [];
  for (const tri of mesh.indices) {
    const [a, b, c] = tri;
    const ux = sx[b] - sx[a];
    const uy = sy[b] - sy[a];
    const uz = sz[b] - sz[a];
    const vx = sx[c] - sx[a];
    const vy = sy[c] - sy[a];
    const vz = sz[c] - sz[a];
    // screen y points down, so this cross product's z faces the camera
    // for counter-clockwise screen triangles
    const nx = uy * vz - uz * vy;
    const ny = uz * vx - ux * vz;
    const nz = ux * vy - uy * vx;
    if (nz >= 0) continue; // back face
    const len = Math.hypot(nx, ny, nz) || 1;
    const lambert = Math.max(
      0,
      (-nx / len) * light[0] + (ny / len) * light[1] + (-nz / len) * light[2],
    );
    const intensity = config.ambient + (1 - config.ambient) * lambert;
    const level = Math.min(SHADE_LEVELS - 1, Math.floor(intensity * SHADE_LEVELS));
    visible.push({ depth: sz[a] + sz[b] + sz[c], level, tri });
  }
  if (visible.length === 0) return { kind: "empty" };
  visible.sort((p, q) => p.depth - q.depth); // far first

  const [r, g, b] = cell.color;
  const paths: ShadedPath[] = [];
  let runLevel = -1;
  let run: string[] = [];
  const flush = () => {
    if (run.length > 0) {
      const shade = (runLevel + 1) / SHADE_LEVELS;
      const fill = `rgb(${Math.round(r * 255 * shade)},${Math.round(
        g * 255 * shade,
      )},${Math.round(b * 255 * shade)})`;
      paths.push({ d: run.join(""), fill });
      run = [];
    }
  };
  for (const { level, tri } of visible) {
    if (level !== runLevel) {
      flush();
      runLevel = level;
    }
    const [a, b2, c] = tri;
    run.push(
      `M${sx[a].toFixed(2)} ${sy[a].toFixed(2)}L${sx[b2].toFixed(2)} ${sy[
        b2
      ].toFixed(2)}L${sx[c].toFixed(2)} ${sy[c].toFixed(2)}Z`,
    );
  }
  flush();
  return { kind: "mesh", paths, triangles: visible.length };
}

export function isEmptyMesh(mesh: MeshPayload): boolean {
  return mesh.indices.length === 0;
}
