"""Acceptance gate: every top-level behavioral guarantee, at full size.

Each test prints one PASS/FAIL line so the suite doubles as a checklist.
Run order matches the numbering; the convergence suite is the long pole
and carries its own wall-clock budget.
"""

import json
import time

import numpy as np
from scipy import stats

from conftest import random_genome, random_minimal_genome
from oracle import oracle_evaluate, oracle_is_watertight
from gazeforms.attributes import ALL_TARGETS
from gazeforms.cppn import evaluate, validate
from gazeforms.evolve import (
    EvolutionConfig,
    InnovationRegistry,
    ScoredIndividual,
    crossover,
    init_population,
    mutate,
)
from gazeforms.gaze import GazeSample, GridLayout
from gazeforms.meshio import MeshFormat, export_mesh, parse_stl
from gazeforms.replay import replay
from gazeforms.session import (
    FitnessLedger,
    InteractionMode,
    SessionConfig,
    SessionEngine,
    assign_fitness,
    sample_target,
    selection_fitness,
)
from gazeforms.shape import LatticeSpec, marching_cubes, sample_field
from gazeforms.simulate import simulate
from gazeforms.store import SessionStore


def report(number, label, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number} ({label}): {detail}")
    assert ok, f"criterion {number} ({label}): {detail}"


def test_a1_directed_design_convergence():
    rng = np.random.default_rng(2026)
    history = []
    targets = []
    for _ in range(6):
        t = sample_target(rng, history)
        history.append(t)
        targets.append(t)
    started = time.time()
    reports = [simulate(t, seed=seed, max_generations=200)
               for t in targets for seed in range(20)]
    elapsed = time.time() - started
    wins = [r.generations for r in reports if r.success]
    rate = len(wins) / len(reports)
    median = float(np.median(wins)) if wins else float("inf")
    ok = rate >= 0.70 and median <= 60.0 and elapsed <= 600.0
    report(1, "directed-design convergence", ok,
           f"{len(wins)}/{len(reports)} runs succeeded ({rate:.1%}, need >=70%), "
           f"median success generation {median:.1f} (need <=60), "
           f"suite took {elapsed:.0f}s (budget 600s) over targets "
           f"{[t.label() for t in targets]}")


def test_a2_fitness_ledger_law():
    rng = np.random.default_rng(7)
    generations = 10_000
    violations = 0
    for _ in range(generations):
        ledger = FitnessLedger()
        for _ in range(int(rng.integers(0, 40))):
            ledger.credit(int(rng.integers(15)), float(rng.uniform(0.0, 900.0)))
        ledger.credit(int(rng.integers(15)), float(rng.uniform(1000.0, 1500.0)))
        if not ledger.try_close():
            violations += 1
            continue
        fitness = assign_fitness(ledger)
        if fitness.count(1000) != 1:
            violations += 1
        elif not all(1 <= f <= 999 for i, f in enumerate(fitness) if i != ledger.winner):
            violations += 1
    report(2, "fitness ledger law", violations == 0,
           f"{generations} simulated generations, {violations} violations "
           f"(exactly one 1000, all others in [1, 999])")


def test_a3_pause_law():
    layout = GridLayout()
    config = SessionConfig(evolution=EvolutionConfig(rng_seed=1), resolution=8,
                           interaction_mode=InteractionMode.GAZE,
                           dwell_threshold_ms=10_000_000.0)
    engine = SessionEngine(config)
    engine.start_directed(target=ALL_TARGETS[0])
    dt = config.tick_ms
    rng = np.random.default_rng(11)
    # interval lengths in whole ticks; validity flips each interval
    valid_ticks = 0
    invalid_leaks = 0
    valid = True
    t = 0.0
    for _ in range(400):
        ticks = int(rng.integers(1, 12))
        before = float(engine.trial.ledger.dwell_ms.sum())
        for _ in range(ticks):
            if valid:
                cell = int(rng.integers(15))
                x, y = layout.cell_center(cell)
                engine.tick([GazeSample(t, x, y, True)], dt_ms=dt)
                valid_ticks += 1
            else:
                engine.tick([GazeSample(t, 0.5, 0.5, False)], dt_ms=dt)
            t += dt
        after = float(engine.trial.ledger.dwell_ms.sum())
        if not valid and after != before:
            invalid_leaks += 1
        valid = not valid
    credited = float(engine.trial.ledger.dwell_ms.sum())
    unpaused = valid_ticks * dt
    ok = invalid_leaks == 0 and abs(credited - unpaused) <= dt
    report(3, "pause law", ok,
           f"{invalid_leaks} invalid intervals credited dwell; "
           f"credited {credited:.3f}ms vs unpaused {unpaused:.3f}ms "
           f"(|diff| {abs(credited - unpaused):.3f}ms <= one tick {dt:.3f}ms)")


def test_a4_mouse_mapping():
    rng = np.random.default_rng(13)
    bad = 0
    for _ in range(1000):
        k = int(rng.integers(1, 16))
        chosen = set(rng.choice(15, size=k, replace=False).tolist())
        fitness = selection_fitness(sorted(chosen))
        expect = [1000 if i in chosen else 1 for i in range(15)]
        if fitness != expect:
            bad += 1
    # and once through the live engine for the end-to-end path
    config = SessionConfig(evolution=EvolutionConfig(rng_seed=2), resolution=8,
                           interaction_mode=InteractionMode.MOUSE)
    engine = SessionEngine(config)
    engine.start_directed(target=ALL_TARGETS[1])
    ev = engine.submit_mouse_selection([2, 7, 11])[0]
    if ev["fitness"] != [1000 if i in (2, 7, 11) else 1 for i in range(15)]:
        bad += 1
    report(4, "mouse mapping", bad == 0,
           f"1000 random selection sets + 1 live engine submission, "
           f"{bad} not exactly 1000/1")


def test_a5_closure_fuzz():
    rng = np.random.default_rng(17)
    config = EvolutionConfig(rng_seed=0)
    registry = InnovationRegistry.initial()
    pool = list(init_population(config, rng))
    ops = 100_000
    failures = 0
    for i in range(ops):
        if rng.random() < 0.5:
            parent = pool[int(rng.integers(len(pool)))]
            child = mutate(parent, config, registry, rng)
        else:
            a = ScoredIndividual(pool[int(rng.integers(len(pool)))],
                                 int(rng.integers(1, 1001)))
            b = ScoredIndividual(pool[int(rng.integers(len(pool)))],
                                 int(rng.integers(1, 1001)))
            child = crossover(a, b, rng)
        if validate(child):  # includes cycle detection over all genes
            failures += 1
        else:
            pool[int(rng.integers(len(pool)))] = child
    report(5, "closure fuzz", failures == 0,
           f"{ops} mutate/crossover operations, {failures} validation failures or cycles")


def test_a6_cppn_oracle_equivalence():
    rng = np.random.default_rng(19)
    worst = 0.0
    genomes = 1000
    coords = 100
    for _ in range(genomes):
        genome = random_genome(rng, max_hidden=3)
        pts = rng.uniform(-1.0, 1.0, size=(coords, 3))
        for x, y, z in pts:
            d = float(np.sqrt(x * x + y * y + z * z))
            got = evaluate(genome, float(x), float(y), float(z), d)
            want = oracle_evaluate(genome, float(x), float(y), float(z), d)
            worst = max(worst, max(
                abs(got.presence - want[0]), abs(got.red - want[1]),
                abs(got.green - want[2]), abs(got.blue - want[3])))
    ok = worst <= 1e-12
    report(6, "cppn oracle equivalence", ok,
           f"{genomes} genomes x {coords} coordinates, "
           f"worst |diff| {worst:.2e} (need <= 1e-12)")


def test_a7_mesh_integrity():
    rng = np.random.default_rng(23)
    checked = 0
    leaky = 0
    unstable = 0
    for i in range(100):
        genome = random_genome(rng, max_hidden=2) if i % 2 else random_minimal_genome(rng)
        for res in (8, 16, 32):
            mesh = marching_cubes(sample_field(genome, LatticeSpec(res)))
            if mesh.is_empty:
                continue
            checked += 1
            if not oracle_is_watertight(mesh.vertices.tolist(), mesh.triangles.tolist()):
                leaky += 1
            blob = export_mesh(mesh, MeshFormat.STL_BINARY)
            again = export_mesh(parse_stl(blob), MeshFormat.STL_BINARY)
            if blob != again:
                unstable += 1
    ok = leaky == 0 and unstable == 0 and checked >= 100
    report(7, "mesh integrity", ok,
           f"{checked} non-empty meshes over resolutions 8/16/32: "
           f"{leaky} not watertight, {unstable} round-trips not byte-identical")


def test_a8_replay_determinism(tmp_path):
    def script(root, seed=41):
        layout = GridLayout()
        store = SessionStore(root)
        config = SessionConfig(evolution=EvolutionConfig(rng_seed=seed), resolution=8,
                               interaction_mode=InteractionMode.GAZE)
        engine = SessionEngine(config, store=store)
        engine.start_directed()
        for cell in (3, 8, 12):
            x, y = layout.cell_center(cell)
            while not engine.trial.closed:
                engine.tick([GazeSample(engine.now_ms, x, y, True)], dt_ms=250.0)
            engine.advance_generation()
        engine.snapshot()
        engine.terminate("scripted stop")
        engine.start_directed(target=ALL_TARGETS[7])
        x, y = layout.cell_center(1)
        while not engine.trial.closed:
            engine.tick([GazeSample(engine.now_ms, x, y, True)], dt_ms=250.0)
        engine.advance_generation()
        engine.terminate("all done")
        store.close()

    script(tmp_path / "one")
    script(tmp_path / "two")
    log_one = (tmp_path / "one" / "events.jsonl").read_bytes()
    log_two = (tmp_path / "two" / "events.jsonl").read_bytes()
    identical = log_one == log_two
    verdict = replay(tmp_path / "one")
    snap_metas = sorted((tmp_path / "one" / "snapshots").glob("*/meta.json"))
    hashes_one = [json.loads(p.read_text())["mesh_sha256"] for p in snap_metas]
    snap_metas_two = sorted((tmp_path / "two" / "snapshots").glob("*/meta.json"))
    hashes_two = [json.loads(p.read_text())["mesh_sha256"] for p in snap_metas_two]
    ok = identical and hashes_one == hashes_two and verdict.trials == 2
    report(8, "replay determinism", ok,
           f"two identical scripts: logs byte-identical={identical}, "
           f"snapshot mesh hashes identical={hashes_one == hashes_two}, "
           f"replay verified {verdict.generations} generations and "
           f"{verdict.snapshots} snapshots bit-identical")


def test_a9_target_sampler():
    rng = np.random.default_rng(29)
    draws = 100_000
    counts = {t: 0 for t in ALL_TARGETS}
    for _ in range(draws):
        counts[sample_target(rng, [])] += 1
    chi = stats.chisquare(list(counts.values()))
    # history rejection: every partial history only ever yields fresh targets
    repeats = 0
    for _ in range(500):
        k = int(rng.integers(0, 18))
        history = [ALL_TARGETS[i] for i in rng.choice(18, size=k, replace=False)]
        if sample_target(rng, history) in history:
            repeats += 1
    ok = chi.pvalue > 0.01 and repeats == 0
    report(9, "target sampler", ok,
           f"{draws} draws: chi-square p={chi.pvalue:.4f} (need > 0.01), "
           f"{repeats} repeats against history in 500 trials")
