"""Interactive-evolution session engine.

One engine owns one sitting: a directed stage of exactly three
target-matching trials, or a free-form stage that keeps restarting trials
until the first termination past the twenty-minute mark.  Within a trial
the engine ticks at a fixed rate, credits dwell time to whichever grid
cell the latest valid gaze sample lands in, closes the generation when a
cell crosses the dwell threshold, and breeds the next population from the
resulting fitness vector.  Every state transition is appended to the
session store as one JSON event, which is what makes replay possible.

The engine is single-writer: one thread (or one caller) drives it.  The
gateway serialises network commands before they reach it.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .attributes import ALL_TARGETS, AttributeSummary, Target, summarize, target_score
from .cppn import Genome, genome_digest, to_canonical_text
from .evolve import EvolutionConfig, InnovationRegistry, ScoredIndividual, init_population, next_generation
from .gaze import GazeSample, GridLayout, map_point_to_cell
from .meshio import MeshFormat, export_mesh
from .shape import (
    ColorTriple,
    LatticeSpec,
    Mesh,
    ScalarGrid,
    largest_component,
    marching_cubes,
    query_color,
    sample_field,
)
from .store import MemoryStore

__all__ = [
    "WrongMode",
    "LedgerNotClosed",
    "EmptySelection",
    "IllegalTransition",
    "TargetSpaceExhausted",
    "InteractionMode",
    "StageKind",
    "SessionConfig",
    "FitnessLedger",
    "assign_fitness",
    "sample_target",
    "Phenotype",
    "build_phenotype",
    "TrialRecord",
    "SessionEngine",
]

FITNESS_WINNER = 1000
FITNESS_FLOOR = 1
FITNESS_CEIL = 999


class WrongMode(Exception):
    """Command belongs to the other interaction mode."""


class LedgerNotClosed(Exception):
    """Fitness requested before any cell crossed the dwell threshold."""


class EmptySelection(ValueError):
    """Mouse submission with no cells selected."""


class IllegalTransition(Exception):
    """Command not valid in the current session state."""


class TargetSpaceExhausted(Exception):
    """All distinct targets have already been used this session."""


class InteractionMode(Enum):
    GAZE = "gaze"
    MOUSE = "mouse"


class StageKind(Enum):
    DIRECTED = "directed"
    FREEFORM = "freeform"


@dataclass(frozen=True)
class SessionConfig:
    """Operator-set parameters for one sitting.

    condition_order is counterbalancing metadata only; the engine runs
    whatever interaction_mode says and never flips it mid-session.
    """

    subject_id: int = 0
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    resolution: int = 16
    interaction_mode: InteractionMode = InteractionMode.GAZE
    condition_order: str = "gaze-first"
    tick_hz: float = 30.0
    dwell_threshold_ms: float = 1000.0
    gutter: float = 0.02
    directed_trials: int = 3
    freeform_stage_ms: float = 20.0 * 60_000.0

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError("resolution must be at least 2")
        if self.tick_hz <= 0 or self.dwell_threshold_ms <= 0:
            raise ValueError("tick_hz and dwell_threshold_ms must be positive")
        if self.directed_trials < 1 or self.freeform_stage_ms <= 0:
            raise ValueError("stage parameters must be positive")

    @property
    def tick_ms(self) -> float:
        return 1000.0 / self.tick_hz

    def to_dict(self) -> dict:
        return {
            "subject_id": self.subject_id,
            "evolution": self.evolution.to_dict(),
            "resolution": self.resolution,
            "interaction_mode": self.interaction_mode.value,
            "condition_order": self.condition_order,
            "tick_hz": self.tick_hz,
            "dwell_threshold_ms": self.dwell_threshold_ms,
            "gutter": self.gutter,
            "directed_trials": self.directed_trials,
            "freeform_stage_ms": self.freeform_stage_ms,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionConfig":
        data = dict(data)
        data["evolution"] = EvolutionConfig.from_dict(data["evolution"])
        data["interaction_mode"] = InteractionMode(data["interaction_mode"])
        return cls(**data)


@dataclass
class FitnessLedger:
    """Per-generation dwell accounting for one 15-cell grid."""

    cells: int = 15
    threshold_ms: float = 1000.0
    dwell_ms: np.ndarray = None
    winner: Optional[int] = None

    def __post_init__(self):
        if self.dwell_ms is None:
            self.dwell_ms = np.zeros(self.cells, dtype=np.float64)

    @property
    def closed(self) -> bool:
        return self.winner is not None

    def credit(self, cell: int, dt_ms: float):
        if self.closed:
            raise IllegalTransition("ledger already closed")
        self.dwell_ms[cell] += dt_ms

    def try_close(self) -> bool:
        """Close once any cell reaches the threshold.  If several cells
        cross on the same tick the lowest index wins."""
        if self.closed:
            return False
        peak = float(self.dwell_ms.max())
        if peak >= self.threshold_ms:
            self.winner = int(np.argmax(self.dwell_ms))
            return True
        return False

    def reset(self):
        self.dwell_ms = np.zeros(self.cells, dtype=np.float64)
        self.winner = None


def assign_fitness(ledger: FitnessLedger) -> list[int]:
    """Winner takes 1000; everyone else gets rounded dwell clamped to
    [1, 999], so a runner-up that also crossed the threshold on the same
    tick still lands at 999 and the 1000 stays unique."""
    if not ledger.closed:
        raise LedgerNotClosed("no winner yet")
    out = []
    for i, d in enumerate(ledger.dwell_ms):
        if i == ledger.winner:
            out.append(FITNESS_WINNER)
        else:
            out.append(int(min(max(round(float(d)), FITNESS_FLOOR), FITNESS_CEIL)))
    return out


def selection_fitness(selected: Sequence[int], cells: int = 15) -> list[int]:
    chosen = set(selected)
    return [FITNESS_WINNER if i in chosen else FITNESS_FLOOR for i in range(cells)]


def sample_target(rng: np.random.Generator, history: Sequence[Target]) -> Target:
    """Uniform draw over the 18 attribute triples, never repeating one
    already used this session."""
    seen = set(history)
    remaining = [t for t in ALL_TARGETS if t not in seen]
    if not remaining:
        raise TargetSpaceExhausted("all 18 targets used")
    return remaining[int(rng.integers(len(remaining)))]


@dataclass
class Phenotype:
    """One grid cell's object: genome, pruned occupancy, color, judged
    attributes.  The surface mesh is built lazily and cached because most
    generations in headless simulation never need it."""

    genome: Genome
    grid: ScalarGrid
    color: "ColorTriple"
    summary: AttributeSummary
    _mesh: Optional[Mesh] = None

    def mesh(self) -> Mesh:
        if self._mesh is None:
            self._mesh = marching_cubes(self.grid, color=self.color)
        return self._mesh


def build_phenotype(genome: Genome, spec: LatticeSpec) -> Phenotype:
    grid = largest_component(sample_field(genome, spec))
    color = query_color(genome)
    return Phenotype(genome, grid, color, summarize(grid, color))


def _mesh_sha256(phenotype: Phenotype) -> Optional[str]:
    mesh = phenotype.mesh()
    if mesh.is_empty:
        return None
    return hashlib.sha256(export_mesh(mesh, MeshFormat.STL_BINARY)).hexdigest()


@dataclass
class _TrialState:
    trial_id: int
    stage: StageKind
    target: Optional[Target]
    target_sampled: bool
    started_at_ms: float
    population: list[Phenotype]
    ledger: FitnessLedger
    generation: int = 1
    closed: bool = False
    pending_fitness: Optional[list[int]] = None
    paused: bool = False
    paused_since_ms: float = 0.0
    paused_total_ms: float = 0.0
    snapshots: int = 0


@dataclass
class TrialRecord:
    trial_id: int
    stage: StageKind
    target: Optional[Target]
    started_at_ms: float
    ended_at_ms: float
    generations: int
    termination_reason: str
    questionnaire_reason: Optional[str] = None
    snapshot_count: int = 0


class SessionEngine:
    """State machine for one sitting.  All commands return the list of
    events they appended to the store, in order."""

    def __init__(self, config: SessionConfig, store=None):
        self.config = config
        self.store = store if store is not None else MemoryStore()
        self.rng = np.random.default_rng(config.evolution.rng_seed)
        self.registry = InnovationRegistry.initial()
        self.spec = LatticeSpec(config.resolution)
        self.layout = GridLayout(gutter=config.gutter)
        self.now_ms = 0.0
        self.trial: Optional[_TrialState] = None
        self.records: list[TrialRecord] = []
        self.target_history: list[Target] = []
        self.directed_started = 0
        self.directed_complete = False
        self.freeform_stage_start_ms: Optional[float] = None
        self.freeform_resets = 0
        self.freeform_complete = False
        self._seq = 0
        self._trial_counter = 0
        self._last_highlight: Optional[int] = None
        self.store.write_config(config.to_dict())
        self._emit("session_start", subject_id=config.subject_id,
                   mode=config.interaction_mode.value,
                   condition_order=config.condition_order)

    # -- event plumbing ------------------------------------------------

    def _emit(self, etype: str, **payload) -> dict:
        event = {"seq": self._seq, "t_ms": self.now_ms, "type": etype, **payload}
        self._seq += 1
        self.store.log_event(event)
        return event

    def _set_now(self, now_ms: Optional[float]):
        # the clock never runs backwards, even if a caller's timestamps do
        if now_ms is not None and now_ms > self.now_ms:
            self.now_ms = float(now_ms)

    # -- stage / trial lifecycle ----------------------------------------

    def start_directed(self, target: Optional[Target] = None,
                       now_ms: Optional[float] = None) -> list[dict]:
        self._set_now(now_ms)
        if self.trial is not None:
            raise IllegalTransition("a trial is already running")
        if self.freeform_stage_start_ms is not None and not self.freeform_complete:
            raise IllegalTransition("free-form stage in progress")
        if self.directed_started >= self.config.directed_trials:
            raise IllegalTransition(
                f"directed stage allows exactly {self.config.directed_trials} trials")
        sampled = target is None
        if sampled:
            target = sample_target(self.rng, self.target_history)
        self.target_history.append(target)
        self.directed_started += 1
        return self._begin_trial(StageKind.DIRECTED, target, sampled)

    def start_freeform(self, now_ms: Optional[float] = None) -> list[dict]:
        self._set_now(now_ms)
        if self.trial is not None:
            raise IllegalTransition("a trial is already running")
        if self.freeform_complete:
            raise IllegalTransition("free-form stage already complete")
        if self.freeform_stage_start_ms is None:
            self.freeform_stage_start_ms = self.now_ms
        return self._begin_trial(StageKind.FREEFORM, None, False)

    def _begin_trial(self, stage: StageKind, target: Optional[Target],
                     sampled: bool) -> list[dict]:
        self._trial_counter += 1
        genomes = init_population(self.config.evolution, self.rng)
        population = [build_phenotype(g, self.spec) for g in genomes]
        self.trial = _TrialState(
            trial_id=self._trial_counter,
            stage=stage,
            target=target,
            target_sampled=sampled,
            started_at_ms=self.now_ms,
            population=population,
            ledger=FitnessLedger(cells=len(population),
                                 threshold_ms=self.config.dwell_threshold_ms),
        )
        self._last_highlight = None
        self._archive_generation()
        event = self._emit(
            "trial_start",
            trial_id=self.trial.trial_id,
            stage=stage.value,
            target=target.to_dict() if target is not None else None,
            target_sampled=sampled,
            generation=1,
            genomes=[genome_digest(g) for g in genomes],
        )
        return [event]

    def terminate(self, reason: str, now_ms: Optional[float] = None) -> list[dict]:
        self._set_now(now_ms)
        trial = self._require_trial()
        events = self._snapshot(kind="terminal")
        record = TrialRecord(
            trial_id=trial.trial_id,
            stage=trial.stage,
            target=trial.target,
            started_at_ms=trial.started_at_ms,
            ended_at_ms=self.now_ms,
            generations=trial.generation,
            termination_reason=reason,
            snapshot_count=trial.snapshots,
        )
        self.records.append(record)
        events.append(self._emit(
            "trial_end",
            trial_id=trial.trial_id,
            stage=trial.stage.value,
            reason=reason,
            generations=trial.generation,
            elapsed_ms=self.now_ms - trial.started_at_ms,
        ))
        stage = trial.stage
        self.trial = None
        if stage == StageKind.FREEFORM:
            self.freeform_resets += 1
            elapsed = self.now_ms - self.freeform_stage_start_ms
            if elapsed >= self.config.freeform_stage_ms:
                self.freeform_complete = True
                events.append(self._emit("stage_complete", stage=stage.value,
                                         trials=self.freeform_resets,
                                         stage_elapsed_ms=elapsed))
            else:
                events.extend(self._begin_trial(StageKind.FREEFORM, None, False))
        else:
            if self.directed_started >= self.config.directed_trials:
                self.directed_complete = True
                events.append(self._emit("stage_complete", stage=stage.value,
                                         trials=self.directed_started))
        return events

    def record_questionnaire_reason(self, text: str,
                                    now_ms: Optional[float] = None) -> list[dict]:
        """Attach the post-trial free-text reason to the most recently
        ended trial (the prompt appears after termination)."""
        self._set_now(now_ms)
        if not self.records:
            raise IllegalTransition("no ended trial to annotate")
        record = self.records[-1]
        record.questionnaire_reason = text
        return [self._emit("questionnaire", trial_id=record.trial_id, reason=text)]

    # -- per-tick gaze path ---------------------------------------------

    def tick(self, samples: Sequence[GazeSample], dt_ms: Optional[float] = None) -> list[dict]:
        """Advance the session clock by one tick and credit dwell.

        The whole dt is credited to the cell under the latest sample in
        the batch; an empty batch or an invalid/off-grid latest sample
        pauses the trial instead."""
        trial = self._require_trial()
        if self.config.interaction_mode != InteractionMode.GAZE:
            raise WrongMode("tick is a gaze-mode command")
        if dt_ms is None:
            dt_ms = self.config.tick_ms
        if dt_ms <= 0:
            raise ValueError("dt_ms must be positive")
        self.now_ms += dt_ms
        latest = samples[-1] if len(samples) else None
        cell = map_point_to_cell(latest, self.layout) if latest is not None else None
        events: list[dict] = []
        if cell is None:
            if not trial.paused:
                trial.paused = True
                trial.paused_since_ms = self.now_ms - dt_ms
                events.append(self._emit("paused"))
            trial.paused_total_ms += dt_ms
            return events
        if trial.paused:
            trial.paused = False
            events.append(self._emit(
                "resumed", paused_ms=self.now_ms - dt_ms - trial.paused_since_ms))
        if cell != self._last_highlight:
            self._last_highlight = cell
            events.append(self._emit("highlight", cell=cell))
        if not trial.closed:
            trial.ledger.credit(cell, dt_ms)
            if trial.ledger.try_close():
                trial.closed = True
                fitness = assign_fitness(trial.ledger)
                trial.pending_fitness = fitness
                events.append(self._emit(
                    "generation_closed",
                    trial_id=trial.trial_id,
                    generation=trial.generation,
                    winner=trial.ledger.winner,
                    dwell_ms=[float(d) for d in trial.ledger.dwell_ms],
                    fitness=fitness,
                ))
        return events

    # -- mouse path ------------------------------------------------------

    def submit_mouse_selection(self, selected: Sequence[int],
                               now_ms: Optional[float] = None) -> list[dict]:
        self._set_now(now_ms)
        trial = self._require_trial()
        if self.config.interaction_mode != InteractionMode.MOUSE:
            raise WrongMode("selection is a mouse-mode command")
        if trial.closed:
            raise IllegalTransition("generation already closed")
        chosen = sorted(set(int(c) for c in selected))
        if not chosen:
            raise EmptySelection("select at least one cell")
        if chosen[0] < 0 or chosen[-1] >= len(trial.population):
            raise ValueError("cell index out of range")
        fitness = selection_fitness(chosen, cells=len(trial.population))
        trial.closed = True
        trial.pending_fitness = fitness
        event = self._emit(
            "generation_closed",
            trial_id=trial.trial_id,
            generation=trial.generation,
            selected=chosen,
            fitness=fitness,
        )
        return [event]

    # -- breeding ---------------------------------------------------------

    def advance_generation(self, fitness: Optional[Sequence[int]] = None,
                           now_ms: Optional[float] = None) -> list[dict]:
        self._set_now(now_ms)
        trial = self._require_trial()
        if not trial.closed:
            raise IllegalTransition("generation not closed yet")
        if fitness is None:
            fitness = trial.pending_fitness
        if len(fitness) != len(trial.population):
            raise ValueError("fitness vector length must match the population")
        scored = [ScoredIndividual(p.genome, int(f))
                  for p, f in zip(trial.population, fitness)]
        genomes = next_generation(scored, self.config.evolution, self.registry, self.rng)
        trial.population = [build_phenotype(g, self.spec) for g in genomes]
        trial.generation += 1
        trial.ledger.reset()
        trial.closed = False
        trial.pending_fitness = None
        self._last_highlight = None
        self._archive_generation()
        event = self._emit(
            "new_generation",
            trial_id=trial.trial_id,
            generation=trial.generation,
            genomes=[genome_digest(g) for g in genomes],
        )
        return [event]

    # -- snapshots ---------------------------------------------------------

    def snapshot(self, now_ms: Optional[float] = None) -> list[dict]:
        self._set_now(now_ms)
        self._require_trial()
        return self._snapshot(kind="manual")

    def _snapshot(self, kind: str) -> list[dict]:
        trial = self.trial
        trial.snapshots += 1
        hashes = [_mesh_sha256(p) for p in trial.population]
        meta = {
            "trial_id": trial.trial_id,
            "snapshot_id": trial.snapshots,
            "kind": kind,
            "generation": trial.generation,
            "t_ms": self.now_ms,
            "genomes": [genome_digest(p.genome) for p in trial.population],
            "mesh_sha256": hashes,
            "colors": [[p.color.r, p.color.g, p.color.b] for p in trial.population],
            "dwell_ms": [float(d) for d in trial.ledger.dwell_ms],
        }
        blobs = {}
        for cell, phenotype in enumerate(trial.population):
            mesh = phenotype.mesh()
            if not mesh.is_empty:
                blobs[cell] = export_mesh(mesh, MeshFormat.STL_BINARY)
        self.store.write_snapshot(meta, blobs)
        event = self._emit(
            "snapshot",
            trial_id=trial.trial_id,
            snapshot_id=trial.snapshots,
            kind=kind,
            generation=trial.generation,
            genomes=meta["genomes"],
            mesh_sha256=hashes,
        )
        return [event]

    # -- helpers -----------------------------------------------------------

    def _require_trial(self) -> _TrialState:
        if self.trial is None:
            raise IllegalTransition("no trial running")
        return self.trial

    def _archive_generation(self):
        trial = self.trial
        self.store.archive_generation(trial.trial_id, trial.generation, {
            "trial_id": trial.trial_id,
            "generation": trial.generation,
            "genomes": [to_canonical_text(p.genome) for p in trial.population],
            "digests": [genome_digest(p.genome) for p in trial.population],
        })

    def summaries(self) -> list[AttributeSummary]:
        return [p.summary for p in self._require_trial().population]

    def target_scores(self) -> list[float]:
        trial = self._require_trial()
        if trial.target is None:
            raise IllegalTransition("trial has no target")
        return [target_score(p.summary, trial.target) for p in trial.population]
