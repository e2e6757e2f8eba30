"""Size / color / shape judgments over voxel phenotypes.

This module stands in for the human judge: it reduces a phenotype to a
coarse attribute triple and scores how well it matches a requested target.
The heuristics are deliberately simple, fully deterministic, and documented
in code; they are stand-ins, with every threshold exposed as a parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import stats

from .shape import ColorTriple, ScalarGrid, occupancy, volume_fraction

__all__ = [
    "Size",
    "Color",
    "Shape",
    "Target",
    "ALL_TARGETS",
    "AttributeSummary",
    "classify_size",
    "classify_color",
    "classify_shape",
    "summarize",
    "target_score",
    "parse_target",
]


class Size(Enum):
    SMALL = "small"
    LARGE = "large"


class Color(Enum):
    RED = "red"
    BLUE = "blue"
    GREEN = "green"


class Shape(Enum):
    CONE = "cone"
    OVAL = "oval"
    RECTANGLE = "rectangle"


@dataclass(frozen=True)
class Target:
    size: Size
    color: Color
    shape: Shape

    def to_dict(self) -> dict:
        return {"size": self.size.value, "color": self.color.value, "shape": self.shape.value}

    @classmethod
    def from_dict(cls, doc: dict) -> "Target":
        return cls(Size(doc["size"]), Color(doc["color"]), Shape(doc["shape"]))

    def label(self) -> str:
        return f"{self.size.value},{self.color.value},{self.shape.value}"


ALL_TARGETS: tuple[Target, ...] = tuple(
    Target(s, c, h) for s in Size for c in Color for h in Shape
)


def parse_target(text: str) -> Target:
    """Parse "small,red,cone" style labels (any separator in ',/ ')."""
    parts = [p for p in text.replace("/", ",").replace(" ", ",").split(",") if p]
    if len(parts) != 3:
        raise ValueError(f"expected size,color,shape - got {text!r}")
    return Target(Size(parts[0].lower()), Color(parts[1].lower()), Shape(parts[2].lower()))


# Size bands over volume fraction: (lo, hi) half-open on the right except
# LARGE, which is closed at 1.  Scoring uses each band's center and width.
SMALL_BAND = (0.0, 0.15)
LARGE_BAND = (0.15, 1.0)

# Color prototypes, in tie-break order.
_PROTOTYPES = (
    (Color.RED, np.array([1.0, 0.0, 0.0])),
    (Color.GREEN, np.array([0.0, 1.0, 0.0])),
    (Color.BLUE, np.array([0.0, 0.0, 1.0])),
)

# Below this many occupied cells every shape heuristic saturates (a 2x2x2
# cubelet is simultaneously a perfect box, ball, and cone), so no shape is
# ruled at all.
MIN_SHAPE_CELLS = 32


@dataclass(frozen=True)
class AttributeSummary:
    volume_fraction: float
    color: ColorTriple
    shape_scores: dict
    classified: tuple[Optional[Size], Optional[Color], Optional[Shape]]

    def to_dict(self) -> dict:
        return {
            "volume_fraction": self.volume_fraction,
            "color": [self.color.r, self.color.g, self.color.b],
            "shape_scores": {s.value: v for s, v in self.shape_scores.items()},
            "classified": [a.value if a is not None else None for a in self.classified],
        }


def classify_size(grid: ScalarGrid, threshold: float = SMALL_BAND[1]) -> Optional[Size]:
    f = volume_fraction(grid)
    if f == 0.0:
        return None
    return Size.SMALL if f < threshold else Size.LARGE


def classify_color(c: ColorTriple) -> Color:
    """Nearest prototype; exact ties resolve Red, then Green, then Blue."""
    point = np.array([c.r, c.g, c.b])
    best, best_d = None, math.inf
    for color, proto in _PROTOTYPES:
        d = float(np.linalg.norm(point - proto))
        if d < best_d:
            best, best_d = color, d
    return best


def _spearman(xs: np.ndarray, ys: np.ndarray) -> float:
    if len(xs) < 2 or np.all(xs == xs[0]) or np.all(ys == ys[0]):
        return 0.0
    return float(stats.spearmanr(xs, ys).statistic)


def _cone_score(occupied: np.ndarray) -> float:
    """Best over axes of: taper monotonicity x slice roundness.

    Along the chosen axis, slice areas should fall off steadily from the
    wide end (rank correlation -> monotone term) and each slice should fill
    the ellipse inscribed in its own tight bounding box (disc term).
    """
    best = 0.0
    for axis in range(3):
        moved = np.moveaxis(occupied, axis, 0)
        areas = moved.reshape(moved.shape[0], -1).sum(axis=1)
        nz = np.nonzero(areas)[0]
        lo, hi = nz[0], nz[-1] + 1
        areas = areas[lo:hi].astype(float)
        slices = moved[lo:hi]
        if areas[0] < areas[-1]:
            areas = areas[::-1]
            slices = slices[::-1]
        monotone = max(0.0, -_spearman(np.arange(len(areas)), areas))
        fills = []
        for k in range(len(areas)):
            cells = np.argwhere(slices[k])
            if len(cells) == 0:  # multi-blob grids can have hollow slices
                fills.append(0.0)
                continue
            w = cells[:, 0].max() - cells[:, 0].min() + 1
            h = cells[:, 1].max() - cells[:, 1].min() + 1
            ellipse_area = math.pi / 4.0 * w * h
            fills.append(min(1.0, len(cells) / ellipse_area))
        best = max(best, monotone * float(np.mean(fills)))
    return best


def _oval_score(occupied: np.ndarray) -> float:
    """Jaccard overlap between the occupied set and its moment-fit ellipsoid.

    A uniform solid ellipsoid with semi-axis a has E[x^2] = a^2/5, so the
    axis-aligned fit uses sqrt(5) times the per-axis standard deviation.
    """
    cells = np.argwhere(occupied).astype(float)
    mu = cells.mean(axis=0)
    semi = np.maximum(np.sqrt(5.0) * cells.std(axis=0), 0.5)
    idx = np.indices(occupied.shape).reshape(3, -1).T.astype(float)
    inside = (((idx - mu) / semi) ** 2).sum(axis=1) <= 1.0
    inside = inside.reshape(occupied.shape)
    intersection = float(np.logical_and(inside, occupied).sum())
    union = float(np.logical_or(inside, occupied).sum())
    return intersection / union if union > 0 else 0.0


def _rectangle_score(occupied: np.ndarray) -> float:
    """Jaccard overlap with the moment-fit axis-aligned box, mirroring the
    ellipsoid fit: a uniform box with half-extent a has E[x^2] = a^2/3.
    A fitted box (rather than the bounding box) keeps one stray cell from
    wrecking the score of an otherwise clean slab."""
    cells = np.argwhere(occupied).astype(float)
    mu = cells.mean(axis=0)
    half = np.maximum(np.sqrt(3.0) * cells.std(axis=0), 0.5)
    idx = np.indices(occupied.shape).reshape(3, -1).T.astype(float)
    inside = (np.abs(idx - mu) <= half).all(axis=1)
    inside = inside.reshape(occupied.shape)
    intersection = float(np.logical_and(inside, occupied).sum())
    union = float(np.logical_or(inside, occupied).sum())
    return intersection / union if union > 0 else 0.0


def classify_shape(
    grid: ScalarGrid, min_cells: int = MIN_SHAPE_CELLS
) -> tuple[dict, Optional[Shape]]:
    """Heuristic shape scores plus the argmax (ties: Cone, Oval, Rectangle).

    Fewer than min_cells occupied cells is too little geometry to judge:
    all scores are 0 and the label is Unknown (None).
    """
    occupied = occupancy(grid)
    if int(occupied.sum()) < min_cells:
        return {s: 0.0 for s in Shape}, None
    scores = {
        Shape.CONE: _cone_score(occupied),
        Shape.OVAL: _oval_score(occupied),
        Shape.RECTANGLE: _rectangle_score(occupied),
    }
    best = max(Shape, key=lambda s: scores[s])  # enum declaration order = tie order
    return scores, best


def summarize(grid: ScalarGrid, color: ColorTriple, min_cells: int = MIN_SHAPE_CELLS) -> AttributeSummary:
    f = volume_fraction(grid)
    shape_scores, shape_label = classify_shape(grid, min_cells)
    if f == 0.0:
        classified = (None, None, None)
    else:
        classified = (classify_size(grid), classify_color(color), shape_label)
    return AttributeSummary(f, color, shape_scores, classified)


def _size_axis_score(summary: AttributeSummary, want: Size) -> float:
    if summary.classified[0] is want:
        return 1.0
    lo, hi = SMALL_BAND if want is Size.SMALL else LARGE_BAND
    center, width = (lo + hi) / 2.0, hi - lo
    return max(0.0, 1.0 - abs(summary.volume_fraction - center) / width)


def _color_axis_score(summary: AttributeSummary, want: Color) -> float:
    proto = dict(_PROTOTYPES)[want]
    point = np.array([summary.color.r, summary.color.g, summary.color.b])
    score = 1.0 - float(np.linalg.norm(point - proto)) / math.sqrt(2.0)
    return min(1.0, max(0.0, score))


def _shape_axis_score(summary: AttributeSummary, want: Shape) -> float:
    """Credit the margin over the competing shapes, since the ruling is an
    argmax: 0.5 at a dead heat, 1.0 once the wanted shape leads by half the
    scale.  Blobs too small to rule get nothing, which pushes them to grow."""
    if summary.classified[2] is None:
        return 0.0
    wanted = summary.shape_scores[want]
    rival = max(v for k, v in summary.shape_scores.items() if k != want)
    return float(min(max(0.5 + (wanted - rival), 0.0), 1.0))


def target_score(summary: AttributeSummary, target: Target) -> float:
    """Graded resemblance in [0, 1]; the synthetic user's preference signal."""
    if summary.volume_fraction == 0.0:
        return 0.0
    return (
        _size_axis_score(summary, target.size)
        + _color_axis_score(summary, target.color)
        + _shape_axis_score(summary, target.shape)
    ) / 3.0
