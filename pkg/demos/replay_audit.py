"""Record a session, replay it, then catch a tampered copy.

The event log is the authoritative record: replay reconstructs the command
stream from it, re-runs everything against a fresh engine, and compares
genome digests and snapshot hashes bit for bit.  Editing a single fitness
number is enough to be caught, with the offending sequence number named.
"""

import json
import shutil
import tempfile
from pathlib import Path

from gazeforms import (
    DivergenceDetected,
    EvolutionConfig,
    GazeSample,
    GridLayout,
    InteractionMode,
    SessionConfig,
    SessionEngine,
    SessionStore,
    replay,
)

root = Path(tempfile.mkdtemp(prefix="gazeforms_replay_"))
honest = root / "honest"
layout = GridLayout()

config = SessionConfig(evolution=EvolutionConfig(rng_seed=21), resolution=8,
                       interaction_mode=InteractionMode.GAZE)
engine = SessionEngine(config, store=SessionStore(honest))
engine.start_directed()
for cell in (6, 2, 13):
    x, y = layout.cell_center(cell)
    while not engine.trial.closed:
        engine.tick([GazeSample(engine.now_ms, x, y, True)], dt_ms=250.0)
    engine.advance_generation()
engine.snapshot()
engine.terminate("demo finished")
engine.store.close()
print(f"recorded session in {honest}")

verdict = replay(honest)
print(f"replay of the honest log: OK — {verdict.events} events, "
      f"{verdict.generations} generations, {verdict.snapshots} snapshots verified")

# Now nudge one fitness value in a copy and watch replay refuse it.
forged = root / "forged"
shutil.copytree(honest, forged)
log = forged / "events.jsonl"
lines = log.read_text().splitlines()
for i, line in enumerate(lines):
    event = json.loads(line)
    if event["type"] == "generation_closed":
        event["fitness"][3] += 1
        lines[i] = json.dumps(event, sort_keys=True)
        print(f"\nforged event seq {event['seq']}: bumped cell 3's fitness by one")
        break
log.write_text("\n".join(lines) + "\n")

try:
    replay(forged)
    print("replay accepted the forgery (this should never print)")
except DivergenceDetected as exc:
    print(f"replay of the forged log: DivergenceDetected at seq {exc.seq}")
    print(f"  {exc}")
