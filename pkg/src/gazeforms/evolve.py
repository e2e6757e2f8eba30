"""Generational evolution of pattern-network genomes, NEAT style.

One screenful of individuals per generation.  No speciation: selection is
fitness-proportionate over the whole population, with a single elite copied
through unchanged.  Structural innovations (new connections, node splits)
are numbered by a registry shared across the session so that the same
structural event always receives the same gene ids, keeping crossover
alignment meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .cppn import (
    ACTIVATION_CHOICES,
    FIRST_HIDDEN_ID,
    INPUT_IDS,
    OUTPUT_IDS,
    WEIGHT_MAX,
    WEIGHT_MIN,
    ConnectionGene,
    Genome,
    NodeGene,
    Role,
    make_genome,
    minimal_genome,
)

__all__ = [
    "EvolutionConfig",
    "InnovationRegistry",
    "ScoredIndividual",
    "EmptyPopulation",
    "init_population",
    "mutate",
    "crossover",
    "next_generation",
    "roulette_index",
]


class EmptyPopulation(ValueError):
    pass


@dataclass(frozen=True)
class EvolutionConfig:
    population_size: int = 15
    prob_weight_mutate: float = 0.8
    weight_perturb_sigma: float = 0.5
    prob_weight_replace: float = 0.1
    prob_add_connection: float = 0.10
    prob_add_node: float = 0.05
    prob_crossover: float = 0.75
    elitism_count: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        for name in (
            "prob_weight_mutate",
            "prob_weight_replace",
            "prob_add_connection",
            "prob_add_node",
            "prob_crossover",
        ):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        if self.weight_perturb_sigma < 0:
            raise ValueError("weight_perturb_sigma must be non-negative")
        if not 0 <= self.elitism_count < self.population_size:
            raise ValueError("elitism_count must be < population_size")

    def to_dict(self) -> dict:
        return {
            "population_size": self.population_size,
            "prob_weight_mutate": self.prob_weight_mutate,
            "weight_perturb_sigma": self.weight_perturb_sigma,
            "prob_weight_replace": self.prob_weight_replace,
            "prob_add_connection": self.prob_add_connection,
            "prob_add_node": self.prob_add_node,
            "prob_crossover": self.prob_crossover,
            "elitism_count": self.elitism_count,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EvolutionConfig":
        return cls(**doc)


@dataclass
class InnovationRegistry:
    """Session-wide numbering of structural events.

    The same (source, target) pair always maps to the same connection
    innovation, and the same split of a given connection always yields the
    same hidden-node id and edge innovations, so parallel discoveries of one
    structure stay alignable across the population.
    """

    connection_ids: dict[tuple[int, int], int] = field(default_factory=dict)
    split_ids_map: dict[int, tuple[int, int, int]] = field(default_factory=dict)
    next_innovation: int = 0
    next_node_id: int = FIRST_HIDDEN_ID

    @classmethod
    def initial(cls) -> "InnovationRegistry":
        """Registry pre-seeded with the 20 input->output genes of minimal genomes."""
        reg = cls()
        for s in INPUT_IDS:
            for t in OUTPUT_IDS:
                reg.connection_ids[(s, t)] = s * 4 + (t - 5)
        reg.next_innovation = 20
        return reg

    def connection_innovation(self, source: int, target: int) -> int:
        key = (source, target)
        if key not in self.connection_ids:
            self.connection_ids[key] = self.next_innovation
            self.next_innovation += 1
        return self.connection_ids[key]

    def split_ids(self, connection_innovation: int, source: int, target: int) -> tuple[int, int, int]:
        """(hidden node id, in-edge innovation, out-edge innovation) for a split."""
        if connection_innovation not in self.split_ids_map:
            node_id = self.next_node_id
            self.next_node_id += 1
            in_innov = self.connection_innovation(source, node_id)
            out_innov = self.connection_innovation(node_id, target)
            self.split_ids_map[connection_innovation] = (node_id, in_innov, out_innov)
        return self.split_ids_map[connection_innovation]


@dataclass(frozen=True)
class ScoredIndividual:
    genome: Genome
    fitness: int

    def __post_init__(self):
        if not 1 <= self.fitness <= 1000:
            raise ValueError(f"fitness must be in [1, 1000], got {self.fitness}")


def init_population(config: EvolutionConfig, rng: np.random.Generator | None = None) -> list[Genome]:
    """Fresh minimal genomes: inputs fully wired to outputs, weights in [-1, 1]."""
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    population = []
    for _ in range(config.population_size):
        acts = tuple(ACTIVATION_CHOICES[i] for i in rng.integers(0, 4, size=4))
        weights = rng.uniform(-1.0, 1.0, size=20)
        population.append(minimal_genome(acts, weights))
    return population


def _reachable_from(edges: list[tuple[int, int]], start: int) -> set[int]:
    adjacency: dict[int, list[int]] = {}
    for s, t in edges:
        adjacency.setdefault(s, []).append(t)
    seen = {start}
    stack = [start]
    while stack:
        nid = stack.pop()
        for succ in adjacency.get(nid, ()):
            if succ not in seen:
                seen.add(succ)
                stack.append(succ)
    return seen


def _connection_candidates(genome: Genome) -> list[tuple[int, int]]:
    """All (source, target) pairs that can be added without breaking validity.

    Duplicates are checked against the full gene set, disabled genes
    included, and acyclicity against the full graph as well: a disabled gene
    may be re-enabled by crossover later, so latent edges must stay acyclic
    too.
    """
    existing = {(c.source, c.target) for c in genome.connections}
    edges = [(c.source, c.target) for c in genome.connections]
    sources = [n.node_id for n in genome.nodes if n.role is not Role.OUTPUT]
    targets = [n.node_id for n in genome.nodes if n.role is not Role.INPUT]
    reach: dict[int, set[int]] = {}
    candidates = []
    for s in sorted(sources):
        for t in sorted(targets):
            if s == t or (s, t) in existing:
                continue
            if t not in reach:
                reach[t] = _reachable_from(edges, t)
            if s in reach[t]:
                continue  # t already reaches s; adding s->t would cycle
            candidates.append((s, t))
    return candidates


def mutate(
    genome: Genome,
    config: EvolutionConfig,
    registry: InnovationRegistry,
    rng: np.random.Generator,
) -> Genome:
    """Weight mutation, then add-connection, then add-node.

    Structural mutations that find no legal site (saturated graph, or a
    split whose registry ids already exist in this genome) are skipped
    silently; the result always passes validation.
    """
    nodes = list(genome.nodes)
    conns = list(genome.connections)
    next_node_id = genome.next_node_id

    for i, c in enumerate(conns):
        if rng.random() >= config.prob_weight_mutate:
            continue
        if rng.random() < config.prob_weight_replace:
            w = rng.uniform(WEIGHT_MIN, WEIGHT_MAX)
        else:
            w = c.weight + rng.normal(0.0, config.weight_perturb_sigma)
        conns[i] = replace(c, weight=float(np.clip(w, WEIGHT_MIN, WEIGHT_MAX)))

    if rng.random() < config.prob_add_connection:
        candidates = _connection_candidates(make_genome(nodes, conns, next_node_id))
        if candidates:
            s, t = candidates[int(rng.integers(len(candidates)))]
            weight = float(rng.uniform(-1.0, 1.0))
            innovation = registry.connection_innovation(s, t)
            conns.append(ConnectionGene(innovation, s, t, weight, True))

    if rng.random() < config.prob_add_node:
        enabled = [i for i, c in enumerate(conns) if c.enabled]
        if enabled:
            pick = enabled[int(rng.integers(len(enabled)))]
            old = conns[pick]
            node_id, in_innov, out_innov = registry.split_ids(old.innovation, old.source, old.target)
            present_ids = {n.node_id for n in nodes}
            present_innovations = {c.innovation for c in conns}
            # A gene re-enabled by crossover can be picked for a second
            # split in the same lineage; reusing the registry ids would
            # collide, so skip.
            if node_id not in present_ids and not {in_innov, out_innov} & present_innovations:
                activation = ACTIVATION_CHOICES[int(rng.integers(4))]
                conns[pick] = replace(old, enabled=False)
                nodes.append(NodeGene(node_id, Role.HIDDEN, activation))
                conns.append(ConnectionGene(in_innov, old.source, node_id, 1.0, True))
                conns.append(ConnectionGene(out_innov, node_id, old.target, old.weight, True))
                next_node_id = max(next_node_id, node_id + 1)

    return make_genome(nodes, conns, next_node_id)


def crossover(a: ScoredIndividual, b: ScoredIndividual, rng: np.random.Generator) -> Genome:
    """Align genes by innovation id; child topology follows the fitter parent.

    Matching genes take their weight from a random parent; disjoint and
    excess genes come from the fitter parent only (ties favor a).  Where the
    parents disagree on a gene's enabled flag the child disables it with
    probability 0.75; agreement is inherited as-is.
    """
    fitter, other = (a, b) if a.fitness >= b.fitness else (b, a)
    other_by_innovation = {c.innovation: c for c in other.genome.connections}

    child_conns = []
    for gene in fitter.genome.connections:
        partner = other_by_innovation.get(gene.innovation)
        if partner is None:
            child_conns.append(gene)
            continue
        donor = gene if rng.random() < 0.5 else partner
        enabled = gene.enabled
        if gene.enabled != partner.enabled:
            enabled = not (rng.random() < 0.75)
        child_conns.append(replace(gene, weight=donor.weight, enabled=enabled))

    return make_genome(fitter.genome.nodes, child_conns, fitter.genome.next_node_id)


def roulette_index(fitnesses: np.ndarray, rng: np.random.Generator) -> int:
    """Fitness-proportionate draw; returns an index into fitnesses."""
    cumulative = np.cumsum(np.asarray(fitnesses, dtype=float))
    r = rng.random() * cumulative[-1]
    return int(np.searchsorted(cumulative, r, side="right"))


def next_generation(
    scored: list[ScoredIndividual],
    config: EvolutionConfig,
    registry: InnovationRegistry,
    rng: np.random.Generator,
) -> list[Genome]:
    """Produce the next population: elite copies, then selected offspring."""
    if not scored:
        raise EmptyPopulation("cannot breed from an empty population")
    if len(scored) != config.population_size:
        raise ValueError(
            f"expected {config.population_size} scored individuals, got {len(scored)}"
        )
    fitnesses = np.array([s.fitness for s in scored], dtype=float)
    elite = scored[int(np.argmax(fitnesses))].genome  # argmax takes the lowest index on ties

    population: list[Genome] = [elite] * config.elitism_count
    while len(population) < config.population_size:
        p1 = roulette_index(fitnesses, rng)
        if rng.random() < config.prob_crossover:
            p2 = roulette_index(fitnesses, rng)
            child = crossover(scored[p1], scored[p2], rng)
        else:
            child = scored[p1].genome
        population.append(mutate(child, config, registry, rng))
    return population
