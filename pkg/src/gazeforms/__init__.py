"""Gaze-driven interactive evolution of colored 3D objects."""

__version__ = "0.1.0"

from .attributes import ALL_TARGETS, AttributeSummary, Color, Shape, Size, Target, parse_target, summarize, target_score
from .cppn import Genome, from_canonical_text, genome_digest, minimal_genome, to_canonical_text
from .evolve import EvolutionConfig, InnovationRegistry, ScoredIndividual, init_population, mutate, next_generation
from .gaze import GazeSample, GridLayout, SyntheticGazePolicy, map_point_to_cell
from .meshio import MeshFormat, export_mesh, parse_obj, parse_stl
from .replay import DivergenceDetected, LogCorrupt, ReplayReport, replay
from .session import FitnessLedger, InteractionMode, SessionConfig, SessionEngine, StageKind, assign_fitness, sample_target
from .shape import LatticeSpec, Mesh, genome_to_mesh, largest_component, marching_cubes, sample_field
from .simulate import SimulationReport, simulate
from .store import MemoryStore, SessionStore

__all__ = [name for name in dir() if not name.startswith("_")]
