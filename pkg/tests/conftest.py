"""Shared test builders."""

from __future__ import annotations

import numpy as np

from gazeforms.shape import LatticeSpec, ScalarGrid
from gazeforms.cppn import (
    ACTIVATION_CHOICES,
    ConnectionGene,
    Genome,
    NodeGene,
    Role,
    make_genome,
    minimal_genome,
)


def random_minimal_genome(rng: np.random.Generator) -> Genome:
    acts = tuple(ACTIVATION_CHOICES[i] for i in rng.integers(0, 4, size=4))
    return minimal_genome(acts, rng.uniform(-1.0, 1.0, size=20))


def random_genome(rng: np.random.Generator, max_hidden: int = 3) -> Genome:
    """Random structurally valid genome built without the evolution module.

    Starts minimal, then applies hand-rolled splits and extra edges with a
    local innovation counter, so tests that compare against the oracle do
    not depend on mutation code.
    """
    genome = random_minimal_genome(rng)
    nodes = list(genome.nodes)
    conns = list(genome.connections)
    next_innovation = 20
    next_node = genome.next_node_id

    n_hidden = int(rng.integers(0, max_hidden + 1))
    for _ in range(n_hidden):
        enabled = [i for i, c in enumerate(conns) if c.enabled]
        pick = enabled[int(rng.integers(len(enabled)))]
        old = conns[pick]
        conns[pick] = ConnectionGene(old.innovation, old.source, old.target, old.weight, False)
        act = ACTIVATION_CHOICES[int(rng.integers(4))]
        nodes.append(NodeGene(next_node, Role.HIDDEN, act))
        conns.append(ConnectionGene(next_innovation, old.source, next_node, 1.0, True))
        conns.append(ConnectionGene(next_innovation + 1, next_node, old.target, old.weight, True))
        next_innovation += 2
        next_node += 1

    # A few extra random edges, skipping anything that would cycle.
    existing = {(c.source, c.target) for c in conns}
    for _ in range(int(rng.integers(0, 4))):
        sources = [n.node_id for n in nodes if n.role is not Role.OUTPUT]
        targets = [n.node_id for n in nodes if n.role is not Role.INPUT]
        s = sources[int(rng.integers(len(sources)))]
        t = targets[int(rng.integers(len(targets)))]
        if s == t or (s, t) in existing:
            continue
        if _reaches(conns, t, s):
            continue
        conns.append(ConnectionGene(next_innovation, s, t, float(rng.uniform(-3, 3)), True))
        existing.add((s, t))
        next_innovation += 1

    return make_genome(nodes, conns, next_node)


def grid_from_bool(occupied: np.ndarray) -> ScalarGrid:
    """ScalarGrid with +1 where occupied, -1 elsewhere."""
    return ScalarGrid(LatticeSpec(occupied.shape[0]), np.where(occupied, 1.0, -1.0))


def _reaches(conns, start: int, goal: int) -> bool:
    adjacency: dict[int, list[int]] = {}
    for c in conns:
        adjacency.setdefault(c.source, []).append(c.target)
    stack, seen = [start], {start}
    while stack:
        nid = stack.pop()
        if nid == goal:
            return True
        for succ in adjacency.get(nid, ()):
            if succ not in seen:
                seen.add(succ)
                stack.append(succ)
    return False
