"""TCP gateway: newline-delimited JSON between the engine and one UI.

Wire format: one JSON object per line, shaped {"type": str, "seq": int,
"payload": object}.  Sequence numbers increase strictly per direction.
The server speaks first with Hello and expects Hello back before any
command.  Malformed JSON or an unknown type earns an Error message —
never silence — and the connection stays open.

The engine is single-writer, so every command handler and the 30 Hz tick
loop take the same lock before touching it.
"""

from __future__ import annotations

import json
import socket
import threading
import time
from typing import Optional

import numpy as np

from . import __version__
from .attributes import parse_target
from .gaze import (
    GazeSample,
    GazeSourceDescriptor,
    PointerProxySource,
    SourceKind,
    SyntheticGazePolicy,
    SyntheticPolicySource,
    open_source,
)
from .session import (
    EmptySelection,
    IllegalTransition,
    InteractionMode,
    SessionConfig,
    SessionEngine,
    StageKind,
    WrongMode,
)
from .store import MemoryStore, SessionStore, StorageFailure

__all__ = ["PortInUse", "SessionStoreUnwritable", "ProtocolError", "GatewayServer",
           "encode_message", "decode_message", "PROTOCOL_VERSION"]

PROTOCOL_VERSION = 1


class PortInUse(OSError):
    pass


class SessionStoreUnwritable(Exception):
    pass


class ProtocolError(Exception):
    pass


def encode_message(mtype: str, seq: int, payload: Optional[dict] = None) -> bytes:
    line = json.dumps({"type": mtype, "seq": seq, "payload": payload or {}},
                      sort_keys=True)
    return line.encode("utf-8") + b"\n"


def decode_message(line: bytes) -> dict:
    try:
        msg = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"undecodable message: {exc}") from exc
    if not isinstance(msg, dict) or not isinstance(msg.get("type"), str) \
            or not isinstance(msg.get("seq"), int):
        raise ProtocolError("message must carry string 'type' and integer 'seq'")
    msg.setdefault("payload", {})
    if not isinstance(msg["payload"], dict):
        raise ProtocolError("'payload' must be an object")
    return msg


def parse_source_string(text: str, seed: int = 0) -> GazeSourceDescriptor:
    """Translate a command-line gaze-source spec into a descriptor.

    Forms: "pointer", "tracker:HOST:PORT", "replay:PATH" (paced at real
    time), "synthetic:SIZE,COLOR,SHAPE".
    """
    if text == "pointer":
        return GazeSourceDescriptor(kind=SourceKind.POINTER_PROXY)
    kind, _, rest = text.partition(":")
    if kind == "tracker":
        host, _, port = rest.rpartition(":")
        if not host or not port.isdigit():
            raise ValueError("tracker source needs tracker:HOST:PORT")
        return GazeSourceDescriptor(kind=SourceKind.NETWORK_TRACKER,
                                    endpoint=(host, int(port)))
    if kind == "replay":
        if not rest:
            raise ValueError("replay source needs replay:PATH")
        return GazeSourceDescriptor(kind=SourceKind.REPLAY, path=rest, speed=1.0)
    if kind == "synthetic":
        policy = SyntheticGazePolicy(target=parse_target(rest), rng_seed=[seed, 1])
        return GazeSourceDescriptor(kind=SourceKind.SYNTHETIC_POLICY, policy=policy)
    raise ValueError(f"unknown gaze source {text!r}")


def _mesh_payload(mesh) -> dict:
    if mesh.is_empty:
        return {"vertices": [], "indices": []}
    # committed f32 coordinates: exactly what the snapshot STL stores
    v32 = mesh.vertices.astype(np.float32)
    return {
        "vertices": [[float(c) for c in row] for row in v32],
        "indices": [[int(i) for i in tri] for tri in mesh.triangles],
    }


class GatewayServer:
    """One listening socket, one UI connection at a time, one session."""

    def __init__(self, config: SessionConfig, *, session_dir=None,
                 gaze_source: str = "pointer", host: str = "127.0.0.1",
                 port: int = 0):
        if session_dir is not None:
            try:
                self.store = SessionStore(session_dir)
            except StorageFailure as exc:
                raise SessionStoreUnwritable(str(exc)) from exc
        else:
            self.store = MemoryStore()
        self.engine = SessionEngine(config, store=self.store)
        self.engine_lock = threading.Lock()
        self.source_name = gaze_source
        self.source = None
        if config.interaction_mode == InteractionMode.GAZE:
            descriptor = parse_source_string(gaze_source, seed=config.evolution.rng_seed)
            self.source = open_source(descriptor)
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            self._listener.bind((host, port))
        except OSError as exc:
            self._listener.close()
            raise PortInUse(f"cannot bind {host}:{port}: {exc}") from exc
        self._listener.listen(1)
        self.host, self.port = self._listener.getsockname()
        self._client: Optional[socket.socket] = None
        self._client_ready = False  # handshake done
        self._send_lock = threading.Lock()
        self._out_seq = 0
        self._in_seq = -1
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []

    # -- lifecycle -------------------------------------------------------

    def start(self):
        accept = threading.Thread(target=self._accept_loop, daemon=True)
        accept.start()
        self._threads.append(accept)
        if self.engine.config.interaction_mode == InteractionMode.GAZE:
            ticker = threading.Thread(target=self._tick_loop, daemon=True)
            ticker.start()
            self._threads.append(ticker)
        return self

    def stop(self):
        self._stop.set()
        try:
            self._listener.close()
        except OSError:
            pass
        if self._client is not None:
            try:
                self._client.close()
            except OSError:
                pass
        for t in self._threads:
            t.join(timeout=2.0)
        if self.source is not None:
            self.source.close()
        self.store.close()

    def serve_forever(self):
        self.start()
        try:
            while not self._stop.is_set():
                time.sleep(0.2)
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    # -- socket plumbing ---------------------------------------------------

    def _accept_loop(self):
        while not self._stop.is_set():
            try:
                conn, _ = self._listener.accept()
            except OSError:
                return
            if self._client is not None:
                # one UI per session; tell the intruder why
                try:
                    conn.sendall(encode_message("Error", 0, {
                        "code": "SessionBusy",
                        "message": "another client is already attached",
                        "in_reply_to": None,
                    }))
                    conn.close()
                except OSError:
                    pass
                continue
            self._client = conn
            self._client_ready = False
            self._in_seq = -1
            self._send("Hello", {
                "protocol": PROTOCOL_VERSION,
                "package": __version__,
                "mode": self.engine.config.interaction_mode.value,
            })
            reader = threading.Thread(target=self._client_session, args=(conn,),
                                      daemon=True)
            reader.start()
            self._threads.append(reader)

    def _client_session(self, conn: socket.socket):
        try:
            self._reader(conn)
        finally:
            try:
                conn.close()
            except OSError:
                pass
            self._client = None
            self._client_ready = False

    def _reader(self, conn: socket.socket):
        buffer = b""
        conn.settimeout(0.2)
        while not self._stop.is_set():
            try:
                chunk = conn.recv(65536)
            except socket.timeout:
                continue
            except OSError:
                break
            if not chunk:
                break
            buffer += chunk
            while b"\n" in buffer:
                line, buffer = buffer.split(b"\n", 1)
                if line.strip():
                    self._handle_line(line)

    def _send(self, mtype: str, payload: dict):
        client = self._client
        if client is None:
            return
        with self._send_lock:
            data = encode_message(mtype, self._out_seq, payload)
            self._out_seq += 1
            try:
                client.sendall(data)
            except OSError:
                pass

    def _error(self, code: str, message: str, in_reply_to):
        self._send("Error", {"code": code, "message": message,
                             "in_reply_to": in_reply_to})

    # -- message handling ---------------------------------------------------

    def _handle_line(self, line: bytes):
        try:
            msg = decode_message(line)
        except ProtocolError as exc:
            self._error("Malformed", str(exc), self._in_seq if self._in_seq >= 0 else None)
            return
        seq = msg["seq"]
        if seq <= self._in_seq:
            self._error("SeqRegression",
                        f"seq {seq} not above {self._in_seq}", seq)
            return
        self._in_seq = seq
        mtype, payload = msg["type"], msg["payload"]
        if not self._client_ready:
            if mtype != "Hello":
                self._error("HandshakeRequired", "send Hello first", seq)
                return
            if payload.get("protocol") != PROTOCOL_VERSION:
                self._error("VersionMismatch",
                            f"server speaks protocol {PROTOCOL_VERSION}", seq)
                return
            self._client_ready = True
            with self.engine_lock:
                if self.engine.trial is not None:
                    self._push_generation()
            return
        handler = {
            "StartStage": self._cmd_start_stage,
            "PointerSample": self._cmd_pointer_sample,
            "SelectionSubmit": self._cmd_selection_submit,
            "Terminate": self._cmd_terminate,
            "Snapshot": self._cmd_snapshot,
            "Questionnaire": self._cmd_questionnaire,
        }.get(mtype)
        if handler is None:
            self._error("UnknownType", f"no such command: {mtype}", seq)
            return
        try:
            handler(payload, seq)
        except (IllegalTransition, WrongMode, EmptySelection, ValueError) as exc:
            self._error(type(exc).__name__, str(exc), seq)

    # -- commands ------------------------------------------------------------

    def _cmd_start_stage(self, payload: dict, seq: int):
        stage = payload.get("stage")
        with self.engine_lock:
            if stage == StageKind.DIRECTED.value:
                raw = payload.get("target")
                target = parse_target(raw) if raw else None
                self.engine.start_directed(target=target)
            elif stage == StageKind.FREEFORM.value:
                self.engine.start_freeform()
            else:
                raise ValueError(f"unknown stage {stage!r}")
            self._sync_policy_source()
            self._push_generation()

    def _cmd_pointer_sample(self, payload: dict, seq: int):
        if not isinstance(self.source, PointerProxySource):
            raise WrongMode("this session does not take pointer gaze")
        sample = GazeSample(
            t_ms=float(payload["t_ms"]),
            x=float(payload["x"]),
            y=float(payload["y"]),
            valid=bool(payload.get("valid", True)),
        )
        self.source.push(sample)

    def _cmd_selection_submit(self, payload: dict, seq: int):
        cells = payload.get("cells", [])
        with self.engine_lock:
            self.engine.submit_mouse_selection(cells)
            self.engine.advance_generation()
            self._push_generation()

    def _cmd_terminate(self, payload: dict, seq: int):
        reason = str(payload.get("reason", ""))
        with self.engine_lock:
            events = self.engine.terminate(reason)
            self._relay(events)
            if self.engine.trial is not None:  # free-form rolled straight over
                self._sync_policy_source()
                self._push_generation()

    def _cmd_snapshot(self, payload: dict, seq: int):
        with self.engine_lock:
            events = self.engine.snapshot()
        self._send("Ack", {"command": "Snapshot", "in_reply_to": seq,
                           "snapshot_id": events[0]["snapshot_id"]})

    def _cmd_questionnaire(self, payload: dict, seq: int):
        # the free-text reason the UI prompts for after a Terminate
        with self.engine_lock:
            self.engine.record_questionnaire_reason(str(payload.get("reason", "")))
        self._send("Ack", {"command": "Questionnaire", "in_reply_to": seq})

    # -- engine event relay ----------------------------------------------------

    def _relay(self, events: list[dict]):
        """Translate engine events into pushes (lock held by caller)."""
        for ev in events:
            if ev["type"] == "highlight":
                self._send("HighlightCell", {"cell": ev["cell"]})
            elif ev["type"] == "paused":
                self._send("Paused", {"paused": True})
            elif ev["type"] == "resumed":
                self._send("Paused", {"paused": False, "paused_ms": ev["paused_ms"]})
            elif ev["type"] == "trial_end":
                self._send("TrialEnd", {"trial_id": ev["trial_id"],
                                        "reason": ev["reason"],
                                        "generations": ev["generations"]})
            elif ev["type"] == "stage_complete":
                self._send("StageComplete", {"stage": ev["stage"],
                                             "trials": ev["trials"]})

    def _push_generation(self):
        """Send the full 15-cell payload for the current population."""
        trial = self.engine.trial
        if trial is None:
            return
        stage_elapsed = None
        if trial.stage == StageKind.FREEFORM and self.engine.freeform_stage_start_ms is not None:
            stage_elapsed = self.engine.now_ms - self.engine.freeform_stage_start_ms
        cells = []
        for i, phenotype in enumerate(trial.population):
            cells.append({
                "cell": i,
                "mesh": _mesh_payload(phenotype.mesh()),
                "color": [phenotype.color.r, phenotype.color.g, phenotype.color.b],
                "summary": phenotype.summary.to_dict(),
            })
        self._send("NewGeneration", {
            "trial_id": trial.trial_id,
            "generation": trial.generation,
            "stage": {
                "kind": trial.stage.value,
                "target": trial.target.label() if trial.target else None,
            },
            "timers": {
                "now_ms": self.engine.now_ms,
                "stage_elapsed_ms": stage_elapsed,
                "dwell_ms": [float(d) for d in trial.ledger.dwell_ms],
            },
            "cells": cells,
        })

    def _sync_policy_source(self):
        if isinstance(self.source, SyntheticPolicySource):
            self.source.update([p.summary for p in self.engine.trial.population],
                               self.engine.now_ms)

    # -- gaze tick loop -----------------------------------------------------------

    def _tick_loop(self):
        tick_s = self.engine.config.tick_ms / 1000.0
        while not self._stop.is_set():
            start = time.monotonic()
            if self._client_ready and self.engine.trial is not None:
                samples = self.source.drain()
                with self.engine_lock:
                    if self.engine.trial is not None:
                        events = self.engine.tick(samples)
                        self._relay(events)
                        if self.engine.trial.closed:
                            self.engine.advance_generation()
                            self._sync_policy_source()
                            self._push_generation()
            elapsed = time.monotonic() - start
            time.sleep(max(0.0, tick_s - elapsed))
