"""The free-form protocol: no target, restart on demand, hard stage clock.

Terminating a free-form trial immediately seeds a fresh one until the stage
clock — which keeps running across restarts — has elapsed.  Each termination
also captures a terminal snapshot and a questionnaire line explaining why the
subject stopped.  The stage is shortened to 60 seconds here so the demo runs
instantly; the protocol default is 20 minutes.
"""

from gazeforms import (
    EvolutionConfig,
    InteractionMode,
    SessionConfig,
    SessionEngine,
)

config = SessionConfig(
    evolution=EvolutionConfig(rng_seed=11),
    resolution=8,
    interaction_mode=InteractionMode.MOUSE,
    freeform_stage_ms=60_000.0,
)
engine = SessionEngine(config)
engine.start_freeform()

reasons = iter([
    "it stopped looking like anything",
    "happy with this one",
    "time felt up",
])
clock = 0.0
while not engine.freeform_complete:
    trial = engine.trial
    for _ in range(2):
        clock += 11_000.0
        engine.submit_mouse_selection([4, 10], now_ms=clock)
        engine.advance_generation()
    engine.terminate(next(reasons, "done"), now_ms=clock)
    if engine.records:
        engine.record_questionnaire_reason(engine.records[-1].termination_reason)
    state = "stage complete" if engine.freeform_complete else (
        f"restarted as trial {engine.trial.trial_id}")
    print(f"trial {trial.trial_id} ended at {clock / 1000:.0f}s -> {state}")

print(f"\n{engine.freeform_resets} terminations, "
      f"{len(engine.records)} trial records:")
for record in engine.records:
    print(f"  trial {record.trial_id}: {record.generations} generations, "
          f"reason {record.questionnaire_reason!r}, "
          f"{record.snapshot_count} terminal snapshot")
