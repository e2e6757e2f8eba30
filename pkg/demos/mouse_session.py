"""The mouse condition: explicit multi-select instead of dwell.

Selected objects all get the winning score of 1000, everything else a flat 1
— there is no dwell gradient to leak preference strength, which is the point
of the control condition.
"""

import numpy as np

from gazeforms import (
    EvolutionConfig,
    InteractionMode,
    SessionConfig,
    SessionEngine,
    parse_target,
)

config = SessionConfig(
    evolution=EvolutionConfig(rng_seed=3),
    resolution=16,
    interaction_mode=InteractionMode.MOUSE,
)
engine = SessionEngine(config)
engine.start_directed(target=parse_target("large,blue,oval"))
rng = np.random.default_rng(3)

for round_no in range(4):
    scores = engine.target_scores()
    order = np.argsort(scores)[::-1]
    picks = sorted(int(c) for c in order[:3])
    events = engine.submit_mouse_selection(picks, now_ms=engine.now_ms + 4000.0)
    fitness = events[0]["fitness"]
    print(f"generation {round_no + 1}: picked cells {picks} "
          f"(best scores {[round(scores[i], 3) for i in picks]})")
    print(f"  fitness vector: {fitness}")
    engine.advance_generation()

engine.terminate("demo over")
record = engine.records[-1]
print(f"\ntrial ended after {record.generations} generations "
      f"({record.termination_reason!r}); "
      f"{record.snapshot_count} snapshot(s) on disk-equivalent store")
