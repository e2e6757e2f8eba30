"""Session engine: ledger law, pausing, trial lifecycle, replay."""

import json

import numpy as np
import pytest

from gazeforms.attributes import ALL_TARGETS, Target
from gazeforms.evolve import EvolutionConfig
from gazeforms.gaze import GazeSample, GridLayout
from gazeforms.replay import DivergenceDetected, LogCorrupt, replay
from gazeforms.session import (
    EmptySelection,
    FitnessLedger,
    IllegalTransition,
    InteractionMode,
    LedgerNotClosed,
    SessionConfig,
    SessionEngine,
    TargetSpaceExhausted,
    WrongMode,
    assign_fitness,
    sample_target,
)
from gazeforms.store import SessionStore, StorageFailure

LAYOUT = GridLayout()


def quick_config(mode=InteractionMode.GAZE, seed=11, **kw):
    # low resolution keeps phenotype builds cheap in tests
    return SessionConfig(
        evolution=EvolutionConfig(rng_seed=seed),
        resolution=8,
        interaction_mode=mode,
        **kw,
    )


def look_at(cell, t=0.0):
    x, y = LAYOUT.cell_center(cell)
    return GazeSample(t_ms=t, x=x, y=y, valid=True)


INVALID = GazeSample(t_ms=0.0, x=0.5, y=0.5, valid=False)


def drive_to_close(engine, cell, dt=250.0):
    """Tick one cell until its generation closes; returns emitted events."""
    events = []
    for _ in range(100):
        events += engine.tick([look_at(cell)], dt_ms=dt)
        if engine.trial.closed:
            return events
    raise AssertionError("generation never closed")


# -- ledger arithmetic -------------------------------------------------------


def test_assign_fitness_floor_example():
    ledger = FitnessLedger()
    ledger.credit(0, 1000.0)
    ledger.credit(1, 432.0)
    assert ledger.try_close()
    fitness = assign_fitness(ledger)
    assert fitness[0] == 1000
    assert fitness[1] == 432
    assert fitness[2:] == [1] * 13  # zero dwell floors at 1, never 0


def test_assign_fitness_double_crossing_example():
    # both cells crossed on the same tick: runner-up clamps to 999
    ledger = FitnessLedger()
    ledger.credit(0, 1005.0)
    ledger.credit(1, 1001.0)
    assert ledger.try_close()
    assert ledger.winner == 0
    assert assign_fitness(ledger)[:2] == [1000, 999]


def test_assign_fitness_requires_close():
    ledger = FitnessLedger()
    ledger.credit(3, 640.0)
    assert not ledger.try_close()
    with pytest.raises(LedgerNotClosed):
        assign_fitness(ledger)


def test_winner_tie_takes_lowest_index():
    ledger = FitnessLedger()
    ledger.credit(9, 1000.0)
    ledger.credit(4, 1000.0)
    ledger.try_close()
    assert ledger.winner == 4


def test_exactly_one_winner_fitness_fuzz():
    rng = np.random.default_rng(0)
    for _ in range(500):
        ledger = FitnessLedger()
        for cell in rng.integers(0, 15, size=rng.integers(1, 60)):
            ledger.credit(int(cell), float(rng.uniform(0, 400)))
        ledger.credit(int(rng.integers(15)), 1100.0)  # force a crossing
        assert ledger.try_close()
        fitness = assign_fitness(ledger)
        assert fitness.count(1000) == 1
        assert all(1 <= f <= 999 for i, f in enumerate(fitness) if i != ledger.winner)


# -- target sampling ---------------------------------------------------------


def test_sample_target_rejects_history():
    rng = np.random.default_rng(3)
    history = []
    for _ in range(18):
        t = sample_target(rng, history)
        assert t not in history
        history.append(t)
    assert sorted(history, key=lambda t: t.label()) == sorted(
        ALL_TARGETS, key=lambda t: t.label())
    with pytest.raises(TargetSpaceExhausted):
        sample_target(rng, history)


def test_sample_target_roughly_uniform():
    rng = np.random.default_rng(4)
    counts = {}
    n = 5400
    for _ in range(n):
        t = sample_target(rng, [])
        counts[t] = counts.get(t, 0) + 1
    assert len(counts) == 18
    for c in counts.values():
        assert abs(c - n / 18) < 5 * np.sqrt(n / 18)


# -- gaze ticks and pausing --------------------------------------------------


def test_tick_credits_latest_sample_cell():
    engine = SessionEngine(quick_config())
    engine.start_directed(target=ALL_TARGETS[0])
    engine.tick([look_at(2), look_at(7)], dt_ms=100.0)
    assert engine.trial.ledger.dwell_ms[7] == 100.0
    assert engine.trial.ledger.dwell_ms[2] == 0.0


def test_invalid_sample_pauses_and_credits_nothing():
    engine = SessionEngine(quick_config())
    engine.start_directed(target=ALL_TARGETS[0])
    engine.tick([look_at(5)], dt_ms=100.0)
    ev = engine.tick([INVALID], dt_ms=100.0)
    assert [e["type"] for e in ev] == ["paused"]
    assert engine.trial.paused
    engine.tick([INVALID], dt_ms=100.0)  # still paused, no second event
    ev = engine.tick([look_at(5)], dt_ms=100.0)
    assert ev[0]["type"] == "resumed"
    assert ev[0]["paused_ms"] == 200.0
    assert engine.trial.ledger.dwell_ms[5] == 200.0
    # session clock kept running through the pause
    assert engine.now_ms == 400.0


def test_empty_batch_counts_as_invalid():
    engine = SessionEngine(quick_config())
    engine.start_directed(target=ALL_TARGETS[0])
    ev = engine.tick([], dt_ms=50.0)
    assert ev[0]["type"] == "paused"
    assert float(engine.trial.ledger.dwell_ms.sum()) == 0.0


def test_dwell_conservation_under_random_stream():
    engine = SessionEngine(quick_config(dwell_threshold_ms=50_000.0))
    engine.start_directed(target=ALL_TARGETS[0])
    rng = np.random.default_rng(8)
    valid_ticks = 0
    for _ in range(300):
        if rng.random() < 0.3:
            engine.tick([INVALID], dt_ms=10.0)
        else:
            engine.tick([look_at(int(rng.integers(15)))], dt_ms=10.0)
            valid_ticks += 1
    credited = float(engine.trial.ledger.dwell_ms.sum())
    assert credited == valid_ticks * 10.0
    assert engine.trial.paused_total_ms == (300 - valid_ticks) * 10.0
    assert engine.now_ms == 3000.0


def test_close_stops_credit_but_clock_runs():
    engine = SessionEngine(quick_config())
    engine.start_directed(target=ALL_TARGETS[0])
    ev = drive_to_close(engine, cell=3)
    closed = [e for e in ev if e["type"] == "generation_closed"]
    assert len(closed) == 1
    assert closed[0]["winner"] == 3
    assert closed[0]["fitness"][3] == 1000
    before = engine.trial.ledger.dwell_ms.copy()
    engine.tick([look_at(3)], dt_ms=100.0)
    assert np.array_equal(engine.trial.ledger.dwell_ms, before)
    assert engine.now_ms == 1000.0 + 100.0


def test_highlight_emitted_on_cell_change_only():
    engine = SessionEngine(quick_config(dwell_threshold_ms=50_000.0))
    engine.start_directed(target=ALL_TARGETS[0])
    ev = engine.tick([look_at(1)], dt_ms=10.0)
    ev += engine.tick([look_at(1)], dt_ms=10.0)
    ev += engine.tick([look_at(2)], dt_ms=10.0)
    highlights = [e["cell"] for e in ev if e["type"] == "highlight"]
    assert highlights == [1, 2]


# -- generation advance ------------------------------------------------------


def test_advance_generation_resets_ledger_and_increments():
    engine = SessionEngine(quick_config())
    engine.start_directed(target=ALL_TARGETS[0])
    first = [p.genome for p in engine.trial.population]
    drive_to_close(engine, cell=6)
    ev = engine.advance_generation()
    assert ev[0]["type"] == "new_generation"
    assert ev[0]["generation"] == 2
    assert engine.trial.generation == 2
    assert not engine.trial.closed
    assert float(engine.trial.ledger.dwell_ms.sum()) == 0.0
    assert len(engine.trial.population) == len(first)
    assert len(ev[0]["genomes"]) == 15


def test_advance_requires_closed_ledger():
    engine = SessionEngine(quick_config())
    engine.start_directed(target=ALL_TARGETS[0])
    with pytest.raises(IllegalTransition):
        engine.advance_generation()


# -- mouse mode --------------------------------------------------------------


def test_mouse_selection_fitness_vector():
    engine = SessionEngine(quick_config(mode=InteractionMode.MOUSE))
    engine.start_directed(target=ALL_TARGETS[0])
    ev = engine.submit_mouse_selection([11, 2, 7, 7])
    assert ev[0]["type"] == "generation_closed"
    assert ev[0]["selected"] == [2, 7, 11]
    expect = [1000 if i in (2, 7, 11) else 1 for i in range(15)]
    assert ev[0]["fitness"] == expect
    assert engine.trial.closed
    engine.advance_generation()
    assert engine.trial.generation == 2


def test_mouse_mode_guards():
    engine = SessionEngine(quick_config(mode=InteractionMode.MOUSE))
    engine.start_directed(target=ALL_TARGETS[0])
    with pytest.raises(WrongMode):
        engine.tick([look_at(0)], dt_ms=10.0)
    with pytest.raises(EmptySelection):
        engine.submit_mouse_selection([])
    with pytest.raises(ValueError):
        engine.submit_mouse_selection([15])
    engine.submit_mouse_selection([0])
    with pytest.raises(IllegalTransition):
        engine.submit_mouse_selection([1])  # already closed


def test_gaze_mode_rejects_selection():
    engine = SessionEngine(quick_config())
    engine.start_directed(target=ALL_TARGETS[0])
    with pytest.raises(WrongMode):
        engine.submit_mouse_selection([3])


# -- trial lifecycle ---------------------------------------------------------


def test_directed_stage_allows_exactly_three_trials():
    engine = SessionEngine(quick_config())
    for i in range(3):
        engine.start_directed()
        assert engine.trial.trial_id == i + 1
        engine.terminate("done")
    assert engine.trial is None
    complete = [e for e in engine.store.events if e["type"] == "stage_complete"]
    assert len(complete) == 1 and complete[0]["stage"] == "directed"
    with pytest.raises(IllegalTransition):
        engine.start_directed()


def test_directed_targets_never_repeat():
    engine = SessionEngine(quick_config())
    seen = []
    for _ in range(3):
        engine.start_directed()
        assert engine.trial.target not in seen
        seen.append(engine.trial.target)
        engine.terminate("next")


def test_start_while_running_is_illegal():
    engine = SessionEngine(quick_config())
    engine.start_directed(target=ALL_TARGETS[0])
    with pytest.raises(IllegalTransition):
        engine.start_directed(target=ALL_TARGETS[1])
    with pytest.raises(IllegalTransition):
        engine.start_freeform()


def test_freeform_restarts_until_stage_clock_runs_out():
    engine = SessionEngine(quick_config())
    engine.start_freeform(now_ms=0.0)
    first_id = engine.trial.trial_id
    # 19:59 on the stage clock: terminate restarts a fresh trial
    ev = engine.terminate("bored", now_ms=19 * 60_000.0 + 59_000.0)
    assert engine.trial is not None
    assert engine.trial.trial_id == first_id + 1
    assert engine.freeform_resets == 1
    assert any(e["type"] == "trial_start" for e in ev)
    # 20:01: the first termination past the mark completes the stage
    ev = engine.terminate("enough", now_ms=20 * 60_000.0 + 1_000.0)
    assert engine.trial is None
    assert engine.freeform_complete
    assert engine.freeform_resets == 2
    assert ev[-1]["type"] == "stage_complete"
    with pytest.raises(IllegalTransition):
        engine.start_freeform()


def test_freeform_stage_clock_spans_trials_not_trial_starts():
    engine = SessionEngine(quick_config())
    engine.start_freeform(now_ms=0.0)
    engine.terminate("one", now_ms=600_000.0)
    # second trial starts at 10:00; clock still counts from stage start
    engine.terminate("two", now_ms=1_300_000.0)
    assert engine.freeform_complete


def test_questionnaire_reason_attaches_to_last_trial():
    engine = SessionEngine(quick_config())
    with pytest.raises(IllegalTransition):
        engine.record_questionnaire_reason("too early")
    engine.start_directed(target=ALL_TARGETS[0])
    engine.terminate("it looked like a pear")
    engine.record_questionnaire_reason("kept the round ones")
    assert engine.records[-1].termination_reason == "it looked like a pear"
    assert engine.records[-1].questionnaire_reason == "kept the round ones"


def test_guards_without_trial():
    engine = SessionEngine(quick_config())
    with pytest.raises(IllegalTransition):
        engine.tick([look_at(0)], dt_ms=10.0)
    with pytest.raises(IllegalTransition):
        engine.snapshot()
    with pytest.raises(IllegalTransition):
        engine.terminate("nothing running")


# -- snapshots ---------------------------------------------------------------


def test_terminate_writes_exactly_one_terminal_snapshot(tmp_path):
    store = SessionStore(tmp_path / "sess")
    engine = SessionEngine(quick_config(), store=store)
    engine.start_directed(target=ALL_TARGETS[0])
    engine.snapshot()
    engine.snapshot()
    engine.terminate("done")
    store.close()
    dirs = sorted((tmp_path / "sess" / "snapshots").iterdir())
    assert len(dirs) == 3
    kinds = []
    for d in dirs:
        meta = json.loads((d / "meta.json").read_text())
        kinds.append(meta["kind"])
        assert len(meta["mesh_sha256"]) == 15
    assert kinds.count("terminal") == 1
    assert kinds.count("manual") == 2


def test_snapshot_event_hashes_match_store_blobs(tmp_path):
    import hashlib

    store = SessionStore(tmp_path / "s2")
    engine = SessionEngine(quick_config(seed=20), store=store)
    engine.start_directed(target=ALL_TARGETS[0])
    ev = engine.snapshot()[0]
    meta, blobs = None, None
    snap_dir = next((tmp_path / "s2" / "snapshots").iterdir())
    meta = json.loads((snap_dir / "meta.json").read_text())
    assert meta["mesh_sha256"] == ev["mesh_sha256"]
    real = 0
    for cell, digest in enumerate(ev["mesh_sha256"]):
        stl = snap_dir / f"cell_{cell:02d}.stl"
        if digest is None:
            assert not stl.exists()  # empty meshes are skipped, noted as null
        else:
            assert hashlib.sha256(stl.read_bytes()).hexdigest() == digest
            real += 1
    assert real > 0  # a random first generation is never all-empty
    store.close()


def test_store_refuses_reuse(tmp_path):
    SessionStore(tmp_path / "dup").close()
    # a second engine writing into the same directory would shred the log
    (tmp_path / "dup" / "events.jsonl").write_text("{}\n")
    with pytest.raises(StorageFailure):
        SessionStore(tmp_path / "dup")


# -- event log hygiene -------------------------------------------------------


def test_event_log_is_monotonic():
    engine = SessionEngine(quick_config())
    engine.start_directed(target=ALL_TARGETS[0])
    drive_to_close(engine, cell=1)
    engine.advance_generation()
    drive_to_close(engine, cell=9)
    engine.advance_generation()
    engine.terminate("done")
    events = engine.store.events
    seqs = [e["seq"] for e in events]
    assert seqs == list(range(len(events)))
    times = [e["t_ms"] for e in events]
    assert all(b >= a for a, b in zip(times, times[1:]))


# -- determinism and replay --------------------------------------------------


def run_scripted_session(root, seed=33):
    """Record a small two-trial gaze session and return its directory."""
    store = SessionStore(root)
    engine = SessionEngine(quick_config(seed=seed), store=store)
    engine.start_directed()
    for cell in (4, 9):
        drive_to_close(engine, cell)
        engine.advance_generation()
    engine.tick([INVALID], dt_ms=40.0)  # leave a pause in the log
    engine.tick([look_at(2)], dt_ms=40.0)
    engine.snapshot()
    engine.terminate("first done")
    engine.record_questionnaire_reason("chose the biggest")
    engine.start_directed(target=ALL_TARGETS[5])
    drive_to_close(engine, cell=0)
    engine.advance_generation()
    engine.terminate("second done")
    store.close()
    return root


def test_identical_scripts_give_identical_logs(tmp_path):
    a = run_scripted_session(tmp_path / "a")
    b = run_scripted_session(tmp_path / "b")
    assert (a / "events.jsonl").read_text() == (b / "events.jsonl").read_text()


def test_replay_accepts_fresh_session(tmp_path):
    root = run_scripted_session(tmp_path / "sess")
    report = replay(root)
    assert report.trials == 2
    assert report.generations == 3
    assert report.snapshots == 3  # one manual + two terminal


def test_replay_accepts_mouse_session(tmp_path):
    store = SessionStore(tmp_path / "mouse")
    engine = SessionEngine(quick_config(mode=InteractionMode.MOUSE, seed=7), store=store)
    engine.start_directed(target=ALL_TARGETS[2])
    engine.submit_mouse_selection([1, 13], now_ms=900.0)
    engine.advance_generation(now_ms=950.0)
    engine.terminate("picked enough", now_ms=2_000.0)
    store.close()
    report = replay(tmp_path / "mouse")
    assert report.trials == 1 and report.generations == 1


def test_replay_detects_edited_fitness(tmp_path):
    root = run_scripted_session(tmp_path / "tamper")
    lines = (root / "events.jsonl").read_text().splitlines()
    target_seq = None
    for i, line in enumerate(lines):
        ev = json.loads(line)
        if ev["type"] == "generation_closed":
            victim = (ev["winner"] + 1) % 15
            ev["fitness"][victim] += 1  # nudge a non-winner without touching dwell
            lines[i] = json.dumps(ev, sort_keys=True)
            target_seq = ev["seq"]
            break
    (root / "events.jsonl").write_text("\n".join(lines) + "\n")
    with pytest.raises(DivergenceDetected) as err:
        replay(root)
    assert err.value.seq == target_seq


def test_replay_detects_edited_genome_digest(tmp_path):
    root = run_scripted_session(tmp_path / "tamper2")
    lines = (root / "events.jsonl").read_text().splitlines()
    for i, line in enumerate(lines):
        ev = json.loads(line)
        if ev["type"] == "new_generation":
            ev["genomes"][0] = "0" * 64
            lines[i] = json.dumps(ev, sort_keys=True)
            seq = ev["seq"]
            break
    (root / "events.jsonl").write_text("\n".join(lines) + "\n")
    with pytest.raises(DivergenceDetected) as err:
        replay(root)
    assert err.value.seq == seq


def test_replay_rejects_empty_dir(tmp_path):
    (tmp_path / "hollow").mkdir()
    with pytest.raises(LogCorrupt):
        replay(tmp_path / "hollow")


def test_replay_rejects_log_cut_mid_command(tmp_path):
    # drop the trial_end that belongs to the final terminal snapshot
    root = run_scripted_session(tmp_path / "cut")
    lines = (root / "events.jsonl").read_text().splitlines()
    assert json.loads(lines[-1])["type"] == "trial_end"
    (root / "events.jsonl").write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises((DivergenceDetected, LogCorrupt)):
        replay(root)


def test_config_round_trip():
    cfg = quick_config(mode=InteractionMode.MOUSE, seed=99, gutter=0.05)
    assert SessionConfig.from_dict(cfg.to_dict()) == cfg
