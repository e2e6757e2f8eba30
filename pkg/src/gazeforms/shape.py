"""Genome -> voxel field -> colored triangle mesh.

The presence output is sampled on a cell-centered lattice over [-1, 1]^3,
reduced to its largest face-connected blob, and surfaced with marching
cubes at iso-level 0.  The scalar field itself is resolution-independent;
only the sampling grid changes with resolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from skimage import measure

from .cppn import Genome, evaluate, evaluate_batch

__all__ = [
    "LatticeSpec",
    "ScalarGrid",
    "ColorTriple",
    "Mesh",
    "sample_field",
    "query_color",
    "largest_component",
    "marching_cubes",
    "genome_to_mesh",
    "occupancy",
    "volume_fraction",
]

MAX_RESOLUTION = 256


@dataclass(frozen=True)
class ColorTriple:
    r: float
    g: float
    b: float


GRAY = ColorTriple(0.5, 0.5, 0.5)


@dataclass(frozen=True)
class LatticeSpec:
    """Cell-centered cubic lattice over [-1, 1]^3."""

    resolution: int = 16

    def __post_init__(self):
        if not 2 <= self.resolution <= MAX_RESOLUTION:
            raise ValueError(f"resolution must be in [2, {MAX_RESOLUTION}]")

    def axis_coords(self) -> np.ndarray:
        i = np.arange(self.resolution)
        return -1.0 + (2 * i + 1) / self.resolution

    @property
    def spacing(self) -> float:
        return 2.0 / self.resolution


@dataclass(frozen=True)
class ScalarGrid:
    spec: LatticeSpec
    values: np.ndarray  # (res, res, res) float64

    def __post_init__(self):
        r = self.spec.resolution
        if self.values.shape != (r, r, r):
            raise ValueError(f"values shape {self.values.shape} != resolution {r}")


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray  # (V, 3) float64
    triangles: np.ndarray  # (F, 3) int64, outward winding
    color: ColorTriple

    @property
    def is_empty(self) -> bool:
        return len(self.triangles) == 0


def sample_field(genome: Genome, spec: LatticeSpec) -> ScalarGrid:
    """Presence value at every lattice cell center."""
    coords = spec.axis_coords()
    xs, ys, zs = np.meshgrid(coords, coords, coords, indexing="ij")
    x, y, z = xs.ravel(), ys.ravel(), zs.ravel()
    d = np.sqrt(x * x + y * y + z * z)
    presence = evaluate_batch(genome, x, y, z, d)[0]
    r = spec.resolution
    return ScalarGrid(spec, presence.reshape(r, r, r))


def query_color(genome: Genome) -> ColorTriple:
    """One color per object, taken at the center point."""
    out = evaluate(genome, 0.0, 0.0, 0.0, 0.0)
    return ColorTriple((out.red + 1) / 2, (out.green + 1) / 2, (out.blue + 1) / 2)


def occupancy(grid: ScalarGrid) -> np.ndarray:
    return grid.values > 0.0


def volume_fraction(grid: ScalarGrid) -> float:
    return float(occupancy(grid).mean())


_SIX_CONNECTED = ndimage.generate_binary_structure(3, 1)


def largest_component(grid: ScalarGrid) -> ScalarGrid:
    """Keep only the largest face-connected occupied blob.

    Everything else is forced to -1.  Ties go to the component containing
    the lexicographically smallest cell index, which is exactly the
    lowest-numbered label under a raster-order labeling scan.
    """
    occupied = occupancy(grid)
    labels, count = ndimage.label(occupied, structure=_SIX_CONNECTED)
    if count <= 1:
        return grid
    sizes = np.bincount(labels.ravel())[1:]
    keep = int(np.argmax(sizes)) + 1
    values = np.where(occupied & (labels != keep), -1.0, grid.values)
    return ScalarGrid(grid.spec, values)


def marching_cubes(grid: ScalarGrid, color: ColorTriple = GRAY) -> Mesh:
    """Iso-surface of the raw field at level 0, closed by a -1 border.

    Vertices live in the same [-1, 1]^3 coordinates the field was sampled
    in.  An all-non-positive grid gives an empty mesh.
    """
    # The value 0 itself counts as unoccupied, so push exact zeros just
    # below the level; otherwise the extractor would seat vertices exactly
    # on lattice points and emit degenerate triangles.
    values = np.where(grid.values == 0.0, -1e-12, grid.values)
    if values.max() <= 0.0:
        return Mesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), color)
    padded = np.pad(values, 1, constant_values=-1.0)
    h = grid.spec.spacing
    verts, faces, _normals, _vals = measure.marching_cubes(padded, level=0.0, spacing=(h, h, h))
    # Padded index 0 sits one spacing before the first cell center.
    origin = (-1.0 + h / 2.0) - h
    verts = verts.astype(np.float64) + origin
    # The extractor winds faces inward for positive-inside fields; flip to
    # the outward convention expected by printers.
    faces = faces[:, [0, 2, 1]].astype(np.int64)
    return Mesh(verts, faces, color)


def genome_to_mesh(genome: Genome, spec: LatticeSpec) -> Mesh:
    """Full pipeline: sample, prune to one blob, surface, color."""
    grid = largest_component(sample_field(genome, spec))
    return marching_cubes(grid, query_color(genome))
