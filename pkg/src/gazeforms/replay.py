"""Deterministic re-execution of a recorded session.

The event log is both an audit trail and a program: replay re-runs every
command against a fresh engine seeded from the session config and demands
that the replica produces bit-identical populations (genome digests) and
snapshots (mesh hashes).  Per-tick gaze traffic is not logged, so a gaze
generation close is verified arithmetically — the logged fitness vector
must be exactly the mapping implied by the logged dwell vector — and then
applied to the replica as-is.  Any edit to the log surfaces either as a
failed consistency check at that event or as a digest mismatch downstream.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .attributes import Target
from .session import (
    FITNESS_CEIL,
    FITNESS_FLOOR,
    FITNESS_WINNER,
    EmptySelection,
    IllegalTransition,
    SessionConfig,
    SessionEngine,
    WrongMode,
)
from .store import MemoryStore

__all__ = ["LogCorrupt", "DivergenceDetected", "ReplayReport", "replay"]

# events that only ticks produce; the replica never re-ticks
_COSMETIC = {"paused", "resumed", "highlight"}

_MATCH_KEYS = {
    "session_start": ("subject_id", "mode", "condition_order"),
    "trial_start": ("trial_id", "stage", "target", "target_sampled", "generation", "genomes"),
    "generation_closed": ("trial_id", "generation", "fitness"),
    "new_generation": ("trial_id", "generation", "genomes"),
    "snapshot": ("trial_id", "snapshot_id", "kind", "generation", "genomes", "mesh_sha256"),
    "trial_end": ("trial_id", "stage", "reason", "generations", "elapsed_ms"),
    "stage_complete": ("stage", "trials"),
    "questionnaire": ("trial_id", "reason"),
}


class LogCorrupt(Exception):
    """The session directory cannot even be parsed as a session."""


class DivergenceDetected(Exception):
    """Replica disagrees with the log at a specific event."""

    def __init__(self, seq: int, message: str):
        super().__init__(f"seq {seq}: {message}")
        self.seq = seq


@dataclass(frozen=True)
class ReplayReport:
    events: int
    trials: int
    generations: int
    snapshots: int


def _load(session_dir) -> tuple[SessionConfig, list[dict]]:
    root = Path(session_dir)
    try:
        with open(root / "config.json", "r", encoding="utf-8") as fh:
            config = SessionConfig.from_dict(json.load(fh))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise LogCorrupt(f"unreadable config: {exc}") from exc
    events = []
    try:
        with open(root / "events.jsonl", "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    events.append(json.loads(line))
    except (OSError, json.JSONDecodeError) as exc:
        raise LogCorrupt(f"unreadable event log: {exc}") from exc
    if not events:
        raise LogCorrupt("event log is empty")
    return config, events


def _check_match(logged: dict, produced: dict):
    seq = logged.get("seq", -1)
    if produced["type"] != logged["type"]:
        raise DivergenceDetected(
            seq, f"expected {produced['type']}, log says {logged['type']}")
    for key in _MATCH_KEYS.get(logged["type"], ()):
        if logged.get(key) != produced.get(key):
            raise DivergenceDetected(
                seq, f"{logged['type']}.{key} mismatch: "
                     f"log {logged.get(key)!r} vs replica {produced.get(key)!r}")


def _verify_gaze_close(engine: SessionEngine, ev: dict):
    """A gaze close is determined by its dwell vector; recompute and compare."""
    seq = ev["seq"]
    trial = engine.trial
    if trial is None or trial.trial_id != ev.get("trial_id") or trial.generation != ev.get("generation"):
        raise DivergenceDetected(seq, "generation_closed does not match replica trial state")
    dwell = np.asarray(ev.get("dwell_ms", []), dtype=np.float64)
    if dwell.shape != (len(trial.population),):
        raise DivergenceDetected(seq, "dwell vector has wrong length")
    if float(dwell.max(initial=0.0)) < engine.config.dwell_threshold_ms:
        raise DivergenceDetected(seq, "close logged before any cell reached threshold")
    winner = int(np.argmax(dwell))
    if ev.get("winner") != winner:
        raise DivergenceDetected(seq, f"winner should be {winner}")
    expect = [FITNESS_WINNER if i == winner
              else int(min(max(round(float(d)), FITNESS_FLOOR), FITNESS_CEIL))
              for i, d in enumerate(dwell)]
    if list(ev.get("fitness", [])) != expect:
        raise DivergenceDetected(seq, "fitness vector inconsistent with dwell")
    trial.closed = True
    trial.pending_fitness = expect


def _terminal_reason(events: list[dict], start: int) -> str:
    for ev in events[start:]:
        if ev.get("type") == "trial_end":
            return ev.get("reason", "")
    raise LogCorrupt("terminal snapshot with no trial_end after it")


def replay(session_dir) -> ReplayReport:
    """Re-execute a session directory; raise on the first disagreement."""
    config, logged = _load(session_dir)
    engine = SessionEngine(config, MemoryStore())
    pending = deque(engine.store.events)  # init emits session_start
    trials = generations = snapshots = 0

    for idx, ev in enumerate(logged):
        etype = ev.get("type")
        seq = ev.get("seq", idx)
        if etype in _COSMETIC:
            continue
        if pending:
            _check_match(ev, pending.popleft())
            continue
        try:
            if etype == "trial_start":
                t = ev.get("t_ms")
                if ev.get("stage") == "freeform":
                    out = engine.start_freeform(now_ms=t)
                elif ev.get("target_sampled"):
                    out = engine.start_directed(now_ms=t)
                else:
                    out = engine.start_directed(
                        target=Target.from_dict(ev["target"]), now_ms=t)
            elif etype == "generation_closed":
                if "selected" in ev:
                    out = engine.submit_mouse_selection(ev["selected"], now_ms=ev.get("t_ms"))
                else:
                    _verify_gaze_close(engine, ev)
                    continue
            elif etype == "new_generation":
                generations += 1
                out = engine.advance_generation(now_ms=ev.get("t_ms"))
            elif etype == "snapshot":
                snapshots += 1
                if ev.get("kind") == "terminal":
                    trials += 1
                    reason = _terminal_reason(logged, idx)
                    out = engine.terminate(reason, now_ms=ev.get("t_ms"))
                else:
                    out = engine.snapshot(now_ms=ev.get("t_ms"))
            elif etype == "questionnaire":
                out = engine.record_questionnaire_reason(ev["reason"], now_ms=ev.get("t_ms"))
            elif etype in _MATCH_KEYS:
                # session_start / trial_end / stage_complete are only ever
                # produced as side effects; finding one as a command means
                # the log skipped the event that should have produced it
                raise DivergenceDetected(seq, f"unexpected {etype} with no pending command")
            else:
                raise LogCorrupt(f"unknown event type {etype!r} at seq {seq}")
        except (IllegalTransition, WrongMode, EmptySelection, ValueError, KeyError) as exc:
            raise DivergenceDetected(seq, f"command rejected by replica: {exc}") from exc
        pending.extend(out)
        _check_match(ev, pending.popleft())

    if pending:
        raise DivergenceDetected(logged[-1].get("seq", len(logged) - 1),
                                 "log ends before replica finished its last command")
    return ReplayReport(events=len(logged), trials=trials,
                        generations=generations, snapshots=snapshots)
