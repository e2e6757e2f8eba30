"""Session persistence: event log, genome archives, snapshot exports.

A session directory is append-only once opened: config.json written at
start, events.jsonl grown one line per state transition, generations/ and
snapshots/ filled as the session runs.  MemoryStore keeps the same shape
in RAM for headless simulation and replay verification.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

__all__ = ["StorageFailure", "MemoryStore", "SessionStore", "read_config", "iter_events"]


class StorageFailure(Exception):
    """Wraps OS-level errors so callers see one failure type."""


class MemoryStore:
    """In-memory stand-in with the same interface as SessionStore."""

    def __init__(self):
        self.config: dict | None = None
        self.events: list[dict] = []
        self.generations: dict[tuple[int, int], dict] = {}
        self.snapshots: list[tuple[dict, dict[int, bytes]]] = []

    def write_config(self, config: dict):
        self.config = config

    def log_event(self, event: dict):
        self.events.append(event)

    def archive_generation(self, trial_id: int, generation: int, archive: dict):
        self.generations[(trial_id, generation)] = archive

    def write_snapshot(self, meta: dict, stl_blobs: dict[int, bytes]):
        self.snapshots.append((meta, stl_blobs))

    def close(self):
        pass


class SessionStore:
    """Directory-backed store.  Refuses to reuse a directory that already
    holds a recorded session, preserving append-only semantics."""

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            if (self.root / "events.jsonl").exists():
                raise StorageFailure(f"{self.root} already holds a session")
            (self.root / "generations").mkdir(exist_ok=True)
            (self.root / "snapshots").mkdir(exist_ok=True)
            self._events = open(self.root / "events.jsonl", "w", encoding="utf-8")
        except OSError as exc:
            raise StorageFailure(f"cannot open session store at {root}: {exc}") from exc

    def write_config(self, config: dict):
        try:
            with open(self.root / "config.json", "w", encoding="utf-8") as fh:
                json.dump(config, fh, indent=2, sort_keys=True)
                fh.write("\n")
        except OSError as exc:
            raise StorageFailure(str(exc)) from exc

    def log_event(self, event: dict):
        try:
            self._events.write(json.dumps(event, sort_keys=True) + "\n")
            self._events.flush()
        except OSError as exc:
            raise StorageFailure(str(exc)) from exc

    def archive_generation(self, trial_id: int, generation: int, archive: dict):
        path = self.root / "generations" / f"trial{trial_id:03d}_gen{generation:05d}.json"
        try:
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(archive, fh, indent=2, sort_keys=True)
                fh.write("\n")
        except OSError as exc:
            raise StorageFailure(str(exc)) from exc

    def write_snapshot(self, meta: dict, stl_blobs: dict[int, bytes]):
        name = f"trial{meta['trial_id']:03d}_snap{meta['snapshot_id']:03d}"
        folder = self.root / "snapshots" / name
        try:
            folder.mkdir(parents=True, exist_ok=True)
            with open(folder / "meta.json", "w", encoding="utf-8") as fh:
                json.dump(meta, fh, indent=2, sort_keys=True)
                fh.write("\n")
            for cell, blob in stl_blobs.items():
                with open(folder / f"cell_{cell:02d}.stl", "wb") as fh:
                    fh.write(blob)
        except OSError as exc:
            raise StorageFailure(str(exc)) from exc

    def close(self):
        try:
            self._events.close()
        except OSError:
            pass


def read_config(session_dir: str | os.PathLike) -> dict:
    with open(Path(session_dir) / "config.json", "r", encoding="utf-8") as fh:
        return json.load(fh)


def iter_events(session_dir: str | os.PathLike):
    with open(Path(session_dir) / "events.jsonl", "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)
