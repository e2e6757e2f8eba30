"""Point-of-regard ingestion and screen-grid geometry.

Samples arrive from one of four interchangeable sources: a live tracker
socket, a recorded log, a pointer-as-gaze proxy, or a scripted synthetic
gazer.  All of them deliver timestamp-ordered GazeSamples; the session
engine is the single consumer.
"""

from __future__ import annotations

import json
import math
import socket
import threading
import time
import xml.etree.ElementTree as ET
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

__all__ = [
    "GazeSample",
    "GridLayout",
    "StreamStats",
    "SourceKind",
    "GazeSourceDescriptor",
    "MalformedRecord",
    "ConnectionFailed",
    "StreamEnded",
    "map_point_to_cell",
    "parse_tracker_record",
    "open_source",
    "SyntheticGazePolicy",
    "synthetic_policy_step",
    "ReplaySource",
    "NetworkTrackerSource",
    "PointerProxySource",
    "SyntheticPolicySource",
]


class MalformedRecord(ValueError):
    pass


class ConnectionFailed(OSError):
    pass


class StreamEnded(StopIteration):
    """Source exhausted.  Subclasses StopIteration so for-loops just end."""


@dataclass(frozen=True)
class GazeSample:
    t_ms: float
    x: float
    y: float
    valid: bool


@dataclass(frozen=True)
class GridLayout:
    """Row-major 3x5 grid over the unit square with thin inter-cell gutters.

    The gutter fraction is measured in cell widths/heights and carved
    symmetrically around interior boundaries; outer screen edges are not
    inset, so the corners belong to the corner cells.
    """

    rows: int = 3
    cols: int = 5
    gutter: float = 0.02

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or not 0.0 <= self.gutter < 1.0:
            raise ValueError("bad layout")

    @property
    def cell_count(self) -> int:
        return self.rows * self.cols

    def cell_size(self) -> tuple[float, float]:
        return 1.0 / self.cols, 1.0 / self.rows

    def cell_rect(self, index: int) -> tuple[float, float, float, float]:
        """Inset rectangle (x0, y0, x1, y1) of a cell, gutters excluded."""
        row, col = divmod(index, self.cols)
        w, h = self.cell_size()
        dx, dy = self.gutter / 2 * w, self.gutter / 2 * h
        x0 = col * w + (dx if col > 0 else 0.0)
        x1 = (col + 1) * w - (dx if col < self.cols - 1 else 0.0)
        y0 = row * h + (dy if row > 0 else 0.0)
        y1 = (row + 1) * h - (dy if row < self.rows - 1 else 0.0)
        return x0, y0, x1, y1

    def cell_center(self, index: int) -> tuple[float, float]:
        row, col = divmod(index, self.cols)
        w, h = self.cell_size()
        return (col + 0.5) * w, (row + 0.5) * h


def map_point_to_cell(sample: GazeSample, layout: GridLayout) -> Optional[int]:
    """Cell index under the point of regard, or None.

    None for invalid samples, off-screen points, and gutter regions; a look
    between objects must not credit either neighbor.
    """
    if not sample.valid:
        return None
    if not (0.0 <= sample.x <= 1.0 and 0.0 <= sample.y <= 1.0):
        return None
    col = min(int(sample.x * layout.cols), layout.cols - 1)
    row = min(int(sample.y * layout.rows), layout.rows - 1)
    index = row * layout.cols + col
    x0, y0, x1, y1 = layout.cell_rect(index)
    if x0 <= sample.x <= x1 and y0 <= sample.y <= y1:
        return index
    return None


def parse_tracker_record(
    line: bytes | str,
    *,
    tag: str = "REC",
    time_key: str = "TIME",
    x_key: str = "FPOGX",
    y_key: str = "FPOGY",
    valid_key: str = "FPOGV",
) -> GazeSample:
    """One `<REC TIME=".." FPOGX=".." FPOGY=".." FPOGV=".." />` line.

    Key names are aliases for other tracker vendors.  TIME is seconds on
    the wire, milliseconds in the sample.  A validity flag of 0, or a
    "valid" point that is off-screen, both yield valid=False.
    """
    if isinstance(line, bytes):
        try:
            line = line.decode("ascii")
        except UnicodeDecodeError as exc:
            raise MalformedRecord(str(exc)) from exc
    line = line.strip()
    try:
        element = ET.fromstring(line)
    except ET.ParseError as exc:
        raise MalformedRecord(f"unparseable record: {line[:60]!r}") from exc
    if element.tag != tag:
        raise MalformedRecord(f"unexpected tag {element.tag!r}")
    try:
        t_s = float(element.attrib[time_key])
        x = float(element.attrib[x_key])
        y = float(element.attrib[y_key])
        valid = float(element.attrib[valid_key]) != 0.0
    except (KeyError, ValueError) as exc:
        raise MalformedRecord(f"bad fields in {line[:60]!r}") from exc
    if valid and not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0 and math.isfinite(x) and math.isfinite(y)):
        valid = False
    return GazeSample(t_ms=t_s * 1000.0, x=x, y=y, valid=valid)


@dataclass
class StreamStats:
    samples: int = 0
    malformed: int = 0
    dropped: int = 0


class SourceKind(Enum):
    NETWORK_TRACKER = "network_tracker"
    REPLAY = "replay"
    POINTER_PROXY = "pointer_proxy"
    SYNTHETIC_POLICY = "synthetic_policy"


@dataclass(frozen=True)
class GazeSourceDescriptor:
    kind: SourceKind
    endpoint: Optional[tuple[str, int]] = None
    path: Optional[str] = None
    speed: Optional[float] = None  # replay pacing; None = as fast as possible
    policy: Optional["SyntheticGazePolicy"] = None


class SampleStream:
    """Iterator of GazeSamples with non-blocking draining for the tick loop."""

    def __init__(self):
        self.stats = StreamStats()
        self._last_t = -math.inf

    def __iter__(self):
        return self

    def __next__(self) -> GazeSample:
        raise NotImplementedError

    def _order(self, sample: GazeSample) -> GazeSample:
        # Enforce the per-stream ordering invariant at the boundary.
        if sample.t_ms < self._last_t:
            sample = GazeSample(self._last_t, sample.x, sample.y, sample.valid)
        self._last_t = sample.t_ms
        self.stats.samples += 1
        return sample

    def drain(self, limit: int = 1000) -> list[GazeSample]:
        """All samples available right now, up to limit, without blocking."""
        raise NotImplementedError

    def close(self):
        pass


class ReplaySource(SampleStream):
    """Recorded log: one JSON object per line (t_ms, x, y, valid).

    speed=None streams as fast as the consumer asks; a positive speed paces
    delivery against the wall clock (1.0 = real time).  One record of
    lookahead keeps drain() non-blocking under pacing.
    """

    def __init__(self, path: str, speed: Optional[float] = None):
        super().__init__()
        if speed is not None and speed <= 0:
            raise ValueError("replay speed must be positive")
        self._lines = open(path, "r", encoding="utf-8")
        self._speed = speed
        self._wall_start: Optional[float] = None
        self._t0: Optional[float] = None
        self._pending: Optional[GazeSample] = None
        self._exhausted = False

    def _fill_pending(self):
        while self._pending is None and not self._exhausted:
            line = self._lines.readline()
            if not line:
                self._exhausted = True
                break
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                self._pending = GazeSample(
                    float(doc["t_ms"]), float(doc["x"]), float(doc["y"]), bool(doc["valid"])
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                self.stats.malformed += 1

    def _due_in(self, sample: GazeSample) -> float:
        """Seconds until the sample should be delivered (<= 0: now)."""
        if self._speed is None:
            return 0.0
        if self._t0 is None:
            self._t0 = sample.t_ms
            self._wall_start = time.monotonic()
        due = self._wall_start + (sample.t_ms - self._t0) / 1000.0 / self._speed
        return due - time.monotonic()

    def _take_pending(self) -> GazeSample:
        sample, self._pending = self._pending, None
        return self._order(sample)

    def __next__(self) -> GazeSample:
        self._fill_pending()
        if self._pending is None:
            raise StreamEnded("replay log exhausted")
        delay = self._due_in(self._pending)
        if delay > 0:
            time.sleep(delay)
        return self._take_pending()

    def drain(self, limit: int = 1000) -> list[GazeSample]:
        out = []
        while len(out) < limit:
            self._fill_pending()
            if self._pending is None or self._due_in(self._pending) > 0:
                break
            out.append(self._take_pending())
        return out

    def close(self):
        self._lines.close()


class _QueueStream(SampleStream):
    """Shared machinery for push-fed sources with a bounded drop-oldest queue."""

    def __init__(self, queue_size: int = 1024):
        super().__init__()
        self._queue: deque[GazeSample] = deque()
        self._queue_size = queue_size
        self._lock = threading.Lock()
        self._ready = threading.Condition(self._lock)
        self._closed = False

    def _push(self, sample: GazeSample):
        with self._ready:
            if len(self._queue) >= self._queue_size:
                self._queue.popleft()
                self.stats.dropped += 1
            self._queue.append(sample)
            self._ready.notify()

    def _mark_closed(self):
        with self._ready:
            self._closed = True
            self._ready.notify_all()

    def __next__(self) -> GazeSample:
        with self._ready:
            while not self._queue:
                if self._closed:
                    raise StreamEnded("stream closed")
                self._ready.wait(timeout=0.1)
            return self._order(self._queue.popleft())

    def drain(self, limit: int = 1000) -> list[GazeSample]:
        with self._lock:
            out = []
            while self._queue and len(out) < limit:
                out.append(self._order(self._queue.popleft()))
            return out

    def close(self):
        self._mark_closed()


class NetworkTrackerSource(_QueueStream):
    """Live tracker: LF-delimited records over a byte-stream socket."""

    def __init__(self, host: str, port: int, queue_size: int = 1024, timeout: float = 5.0):
        super().__init__(queue_size)
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise ConnectionFailed(f"cannot reach tracker at {host}:{port}: {exc}") from exc
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self):
        buffer = b""
        try:
            while True:
                chunk = self._sock.recv(4096)
                if not chunk:
                    break
                buffer += chunk
                while b"\n" in buffer:
                    line, buffer = buffer.split(b"\n", 1)
                    if not line.strip():
                        continue
                    try:
                        self._push(parse_tracker_record(line))
                    except MalformedRecord:
                        self.stats.malformed += 1
        except OSError:
            pass
        finally:
            self._mark_closed()

    def close(self):
        try:
            self._sock.close()
        except OSError:
            pass
        self._mark_closed()


class PointerProxySource(_QueueStream):
    """Pointer-as-gaze: the UI pushes cursor positions, we treat them as
    fixations."""

    def push(self, sample: GazeSample):
        self._push(sample)


@dataclass
class SyntheticGazePolicy:
    """Scripted gazer chasing a target.

    Mostly fixates the cell of the best-scoring phenotype (ties: lowest
    index) with Normal(0, sigma) jitter measured in cell sizes; with
    probability epsilon it gets distracted by a uniformly random cell.
    """

    target: object
    epsilon: float = 0.05
    sigma: float = 0.1
    rng_seed: int = 0
    score_fn: Optional[Callable] = None
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0 or self.sigma < 0.0:
            raise ValueError("bad policy noise parameters")
        self.rng = np.random.default_rng(self.rng_seed)
        if self.score_fn is None:
            from .attributes import target_score

            self.score_fn = target_score

    def step(self, summaries, layout: GridLayout, now_ms: float) -> GazeSample:
        if self.rng.random() < self.epsilon:
            cell = int(self.rng.integers(layout.cell_count))
        else:
            scores = np.array([self.score_fn(s, self.target) for s in summaries])
            cell = int(np.argmax(scores))
        cx, cy = layout.cell_center(cell)
        w, h = layout.cell_size()
        x = cx + self.rng.normal(0.0, self.sigma * w)
        y = cy + self.rng.normal(0.0, self.sigma * h)
        # Valid samples carry on-screen coordinates by contract.
        return GazeSample(now_ms, float(np.clip(x, 0.0, 1.0)), float(np.clip(y, 0.0, 1.0)), True)


def synthetic_policy_step(policy: SyntheticGazePolicy, summaries, layout: GridLayout, now_ms: float) -> GazeSample:
    return policy.step(summaries, layout, now_ms)


class SyntheticPolicySource(SampleStream):
    """Adapter so a scripted gazer fits the stream interface.

    The engine feeds it fresh attribute summaries each generation; every
    drain() emits one fixation at the current virtual time.
    """

    def __init__(self, policy: SyntheticGazePolicy, layout: GridLayout | None = None):
        super().__init__()
        self.policy = policy
        self.layout = layout or GridLayout()
        self.summaries = None
        self.now_ms = 0.0

    def update(self, summaries, now_ms: float):
        self.summaries = summaries
        self.now_ms = now_ms

    def step(self) -> GazeSample:
        sample = self.policy.step(self.summaries, self.layout, self.now_ms)
        return self._order(sample)

    def drain(self, limit: int = 1000) -> list[GazeSample]:
        if self.summaries is None:
            return []
        return [self.step()]

    def __next__(self) -> GazeSample:
        if self.summaries is None:
            raise StreamEnded("no phenotypes provided yet")
        return self.step()


def open_source(descriptor: GazeSourceDescriptor) -> SampleStream:
    """Construct the stream a descriptor names.

    Raises ConnectionFailed for unreachable trackers and FileNotFoundError
    for missing replay logs.
    """
    if descriptor.kind is SourceKind.NETWORK_TRACKER:
        host, port = descriptor.endpoint
        return NetworkTrackerSource(host, port)
    if descriptor.kind is SourceKind.REPLAY:
        return ReplaySource(descriptor.path, descriptor.speed)
    if descriptor.kind is SourceKind.POINTER_PROXY:
        return PointerProxySource()
    if descriptor.kind is SourceKind.SYNTHETIC_POLICY:
        return SyntheticPolicySource(descriptor.policy)
    raise ValueError(f"unknown source kind {descriptor.kind!r}")
