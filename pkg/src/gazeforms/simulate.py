"""Headless directed trials driven by the scripted gazer.

This is the harness behind convergence measurements: one call runs one
directed trial at a virtual 30 Hz, with the synthetic policy fixating the
best-scoring phenotype and the judge deciding when the target has truly
been reached.  Success demands an exact three-axis classified match
sustained for `confirm` consecutive generations, so a lucky one-off
classification does not count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .attributes import Target, parse_target
from .evolve import EvolutionConfig
from .gaze import SyntheticGazePolicy
from .session import InteractionMode, SessionConfig, SessionEngine
from .store import MemoryStore, SessionStore

__all__ = ["SimulationReport", "simulate"]

CONFIRM_GENERATIONS = 3


@dataclass(frozen=True)
class SimulationReport:
    target: str
    seed: int
    success: bool
    generations: int
    score_trajectory: tuple[float, ...]
    final_snapshot: Optional[dict] = None
    ticks: int = 0

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "seed": self.seed,
            "success": self.success,
            "generations": self.generations,
            "score_trajectory": list(self.score_trajectory),
            "final_snapshot": self.final_snapshot,
            "ticks": self.ticks,
        }


def _matches(summary, target: Target) -> bool:
    return summary.classified == (target.size, target.color, target.shape)


def simulate(target: Union[Target, str], seed: int = 0, *,
             max_generations: int = 200,
             epsilon: float = 0.05,
             sigma: float = 0.1,
             resolution: int = 16,
             confirm: int = CONFIRM_GENERATIONS,
             session_dir=None) -> SimulationReport:
    """Run one directed trial to success or the generation cap.

    `generations` in the report counts generations whose populations were
    evaluated; on success it is the generation at which the `confirm`-th
    consecutive matching population appeared.
    """
    if isinstance(target, str):
        target = parse_target(target)
    if max_generations < 1:
        # a zero budget fails immediately without starting anything
        return SimulationReport(target=target.label(), seed=seed, success=False,
                                generations=0, score_trajectory=())

    config = SessionConfig(
        evolution=EvolutionConfig(rng_seed=seed),
        resolution=resolution,
        interaction_mode=InteractionMode.GAZE,
    )
    store = SessionStore(session_dir) if session_dir is not None else MemoryStore()
    engine = SessionEngine(config, store=store)
    engine.start_directed(target=target)
    # the gazer gets its own stream so policy noise cannot disturb breeding
    policy = SyntheticGazePolicy(target=target, epsilon=epsilon, sigma=sigma,
                                 rng_seed=[seed, 1])

    trajectory: list[float] = []
    ticks = 0
    streak = 0
    success = False
    generation = 1
    while True:
        summaries = engine.summaries()
        trajectory.append(max(engine.target_scores()))
        streak = streak + 1 if any(_matches(s, target) for s in summaries) else 0
        if streak >= confirm:
            success = True
            break
        if generation >= max_generations:
            break
        while not engine.trial.closed:
            sample = policy.step(summaries, engine.layout, engine.now_ms)
            engine.tick([sample])
            ticks += 1
        engine.advance_generation()
        generation += 1

    engine.terminate("simulation finished")
    if isinstance(store, MemoryStore):
        final_meta = store.snapshots[-1][0]
    else:
        final_meta = None  # on disk; replayable from session_dir
        store.close()
    return SimulationReport(
        target=target.label(),
        seed=seed,
        success=success,
        generations=generation,
        score_trajectory=tuple(trajectory),
        final_snapshot=final_meta,
        ticks=ticks,
    )
