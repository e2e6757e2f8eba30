"""Pattern-network genomes: DAGs of math nodes queried over 3D space.

A genome wires five inputs (x, y, z, distance-from-origin, bias) through
hidden nodes to four outputs (material presence and an RGB triple).  The
same genome evaluated at the same coordinates must give bit-identical
results no matter how the coordinates are batched, so there is exactly one
evaluation path: scalar queries are size-1 arrays in disguise.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

__all__ = [
    "Activation",
    "Role",
    "NodeGene",
    "ConnectionGene",
    "Genome",
    "CppnOutputs",
    "CycleDetected",
    "GenomeFormatError",
    "INPUT_IDS",
    "OUTPUT_IDS",
    "FIRST_HIDDEN_ID",
    "WEIGHT_MIN",
    "WEIGHT_MAX",
    "activate",
    "topological_order",
    "evaluate",
    "evaluate_batch",
    "validate",
    "minimal_genome",
    "to_canonical_text",
    "from_canonical_text",
    "genome_digest",
]

# Fixed node ids: inputs 0..4 (x, y, z, d, bias), outputs 5..8
# (presence, red, green, blue).  Hidden nodes start at 9.
INPUT_IDS = (0, 1, 2, 3, 4)
OUTPUT_IDS = (5, 6, 7, 8)
FIRST_HIDDEN_ID = 9

INPUT_LABELS = ("x", "y", "z", "d", "bias")
OUTPUT_LABELS = ("presence", "red", "green", "blue")

WEIGHT_MIN = -3.0
WEIGHT_MAX = 3.0

_SIGMOID_SLOPE = 4.9

_FORMAT_TAG = "cppn-genome/1"


class Activation(Enum):
    SINE = "sine"
    SIGMOID = "sigmoid"
    GAUSSIAN = "gaussian"
    LINEAR = "linear"


# Stable order used wherever an activation is drawn at random.
ACTIVATION_CHOICES = (
    Activation.SINE,
    Activation.SIGMOID,
    Activation.GAUSSIAN,
    Activation.LINEAR,
)


class Role(Enum):
    INPUT = "input"
    HIDDEN = "hidden"
    OUTPUT = "output"


class CycleDetected(Exception):
    """The enabled-connection graph contains a directed cycle."""


class GenomeFormatError(ValueError):
    """Serialized genome text is not a valid genome document."""


@dataclass(frozen=True)
class NodeGene:
    node_id: int
    role: Role
    activation: Activation


@dataclass(frozen=True)
class ConnectionGene:
    innovation: int
    source: int
    target: int
    weight: float
    enabled: bool


@dataclass(frozen=True)
class Genome:
    """Immutable network description.

    Nodes are kept sorted by id and connections by innovation number so
    that two structurally equal genomes are also equal as values.
    """

    nodes: tuple[NodeGene, ...]
    connections: tuple[ConnectionGene, ...]
    next_node_id: int

    def node_ids(self) -> set[int]:
        return {n.node_id for n in self.nodes}

    def node(self, node_id: int) -> NodeGene:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)

    def innovations(self) -> set[int]:
        return {c.innovation for c in self.connections}

    def enabled_connections(self) -> tuple[ConnectionGene, ...]:
        return tuple(c for c in self.connections if c.enabled)

    def has_edge(self, source: int, target: int) -> bool:
        """True if any gene (enabled or disabled) links source to target."""
        return any(c.source == source and c.target == target for c in self.connections)


@dataclass(frozen=True)
class CppnOutputs:
    presence: float
    red: float
    green: float
    blue: float


def make_genome(
    nodes: list[NodeGene] | tuple[NodeGene, ...],
    connections: list[ConnectionGene] | tuple[ConnectionGene, ...],
    next_node_id: int | None = None,
) -> Genome:
    """Build a genome with canonical internal ordering."""
    nodes = tuple(sorted(nodes, key=lambda n: n.node_id))
    connections = tuple(sorted(connections, key=lambda c: c.innovation))
    if next_node_id is None:
        next_node_id = max((n.node_id for n in nodes), default=-1) + 1
    return Genome(nodes=nodes, connections=connections, next_node_id=next_node_id)


def minimal_genome(
    output_activations: tuple[Activation, Activation, Activation, Activation],
    weights: np.ndarray | list[float],
) -> Genome:
    """Fully connected input->output genome with no hidden nodes.

    The 20 weights are laid out source-major: weight k belongs to the
    connection from input k // 4 to output 5 + k % 4, and its innovation
    number equals k.  This fixed numbering makes the initial genes of every
    individual in a population line up gene-for-gene.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (20,):
        raise ValueError(f"expected 20 initial weights, got shape {weights.shape}")
    nodes = [NodeGene(i, Role.INPUT, Activation.LINEAR) for i in INPUT_IDS]
    nodes += [
        NodeGene(oid, Role.OUTPUT, act)
        for oid, act in zip(OUTPUT_IDS, output_activations)
    ]
    connections = []
    for s in INPUT_IDS:
        for t in OUTPUT_IDS:
            k = s * 4 + (t - 5)
            connections.append(
                ConnectionGene(
                    innovation=k,
                    source=s,
                    target=t,
                    weight=float(weights[k]),
                    enabled=True,
                )
            )
    return make_genome(nodes, connections, next_node_id=FIRST_HIDDEN_ID)


# === activation functions ===

def _act_array(kind: Activation, pre: np.ndarray) -> np.ndarray:
    # Large fan-in can push |pre| past the exp overflow point; the limit
    # value (exactly -1.0) is the right answer there, so silence the warning.
    if kind is Activation.SINE:
        return np.sin(pre)
    if kind is Activation.SIGMOID:
        with np.errstate(over="ignore"):
            return 2.0 / (1.0 + np.exp(-_SIGMOID_SLOPE * pre)) - 1.0
    if kind is Activation.GAUSSIAN:
        return 2.0 * np.exp(-(pre * pre)) - 1.0
    if kind is Activation.LINEAR:
        return np.clip(pre, -1.0, 1.0)
    raise ValueError(f"unknown activation {kind!r}")


def activate(kind: Activation, x: float) -> float:
    """Scalar activation; routed through the array path on purpose."""
    return float(_act_array(kind, np.asarray([x], dtype=float))[0])


# === evaluation ===

def topological_order(genome: Genome) -> list[int]:
    """Node ids ordered so enabled connections go from earlier to later.

    Deterministic: ready nodes are released in ascending id order, which
    puts the inputs (ids 0..4) first.  Raises CycleDetected if the enabled
    graph is not a DAG.
    """
    import heapq

    ids = sorted(genome.node_ids())
    indegree = {nid: 0 for nid in ids}
    adjacency: dict[int, list[int]] = {nid: [] for nid in ids}
    for c in genome.connections:
        if not c.enabled:
            continue
        adjacency[c.source].append(c.target)
        indegree[c.target] += 1
    ready = [nid for nid in ids if indegree[nid] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        nid = heapq.heappop(ready)
        order.append(nid)
        for succ in adjacency[nid]:
            indegree[succ] -= 1
            if indegree[succ] == 0:
                heapq.heappush(ready, succ)
    if len(order) != len(ids):
        stuck = sorted(set(ids) - set(order))
        raise CycleDetected(f"cycle through nodes {stuck}")
    return order


def evaluate_batch(
    genome: Genome,
    x: np.ndarray,
    y: np.ndarray,
    z: np.ndarray,
    d: np.ndarray,
) -> np.ndarray:
    """Evaluate the network at many coordinates at once.

    Returns an array of shape (4, n): presence, red, green, blue.  Input
    nodes pass their raw values through unclamped (d may exceed 1); every
    other node applies its activation to the weighted sum of its enabled
    incoming connections, summed in ascending innovation order.  A node
    with no enabled inputs sees a pre-activation of 0.
    """
    x = np.asarray(x, dtype=float)
    raw_inputs = {0: x, 1: np.asarray(y, float), 2: np.asarray(z, float), 3: np.asarray(d, float), 4: np.ones_like(x)}

    incoming: dict[int, list[ConnectionGene]] = {}
    for c in genome.connections:  # already in innovation order
        if c.enabled:
            incoming.setdefault(c.target, []).append(c)

    kinds = {n.node_id: n.activation for n in genome.nodes}
    roles = {n.node_id: n.role for n in genome.nodes}
    values: dict[int, np.ndarray] = {}
    for nid in topological_order(genome):
        if roles[nid] is Role.INPUT:
            values[nid] = raw_inputs[nid]
            continue
        pre = np.zeros_like(x)
        for c in incoming.get(nid, ()):
            pre = pre + c.weight * values[c.source]
        values[nid] = _act_array(kinds[nid], pre)
    return np.stack([values[oid] for oid in OUTPUT_IDS])


def evaluate(genome: Genome, x: float, y: float, z: float, d: float) -> CppnOutputs:
    """Evaluate at a single coordinate (thin wrapper over the batch path)."""
    out = evaluate_batch(
        genome,
        np.asarray([x], float),
        np.asarray([y], float),
        np.asarray([z], float),
        np.asarray([d], float),
    )
    return CppnOutputs(
        presence=float(out[0, 0]),
        red=float(out[1, 0]),
        green=float(out[2, 0]),
        blue=float(out[3, 0]),
    )


# === validation ===

def validate(genome: Genome) -> list[str]:
    """Structural checks; returns a report of violations (empty = valid).

    Each entry starts with a stable code, e.g. "DuplicateInnovation: 7".
    """
    report = []
    ids = [n.node_id for n in genome.nodes]
    id_set = set(ids)
    for nid in ids:
        if ids.count(nid) > 1 and f"DuplicateNodeId: {nid}" not in report:
            report.append(f"DuplicateNodeId: {nid}")

    by_id = {n.node_id: n for n in genome.nodes}
    for fixed, role in [(i, Role.INPUT) for i in INPUT_IDS] + [
        (o, Role.OUTPUT) for o in OUTPUT_IDS
    ]:
        node = by_id.get(fixed)
        if node is None:
            report.append(f"MissingFixedNode: {fixed}")
        elif node.role is not role:
            report.append(f"WrongFixedRole: {fixed}")
    for n in genome.nodes:
        if n.node_id >= FIRST_HIDDEN_ID and n.role is not Role.HIDDEN:
            report.append(f"BadHiddenRole: {n.node_id}")
        if n.node_id >= genome.next_node_id:
            report.append(f"NodeIdPastCounter: {n.node_id}")

    seen_innovations: set[int] = set()
    seen_pairs: set[tuple[int, int]] = set()
    for c in genome.connections:
        if c.innovation in seen_innovations:
            report.append(f"DuplicateInnovation: {c.innovation}")
        seen_innovations.add(c.innovation)
        if (c.source, c.target) in seen_pairs:
            report.append(f"DuplicateEdge: {c.source}->{c.target}")
        seen_pairs.add((c.source, c.target))
        if c.source not in id_set or c.target not in id_set:
            report.append(f"DanglingEndpoint: {c.innovation}")
            continue
        if c.source == c.target:
            report.append(f"SelfLoop: {c.innovation}")
        if by_id.get(c.source) is not None and by_id[c.source].role is Role.OUTPUT:
            report.append(f"SourceIsOutput: {c.innovation}")
        if by_id.get(c.target) is not None and by_id[c.target].role is Role.INPUT:
            report.append(f"TargetIsInput: {c.innovation}")
        if not np.isfinite(c.weight):
            report.append(f"NonFiniteWeight: {c.innovation}")
        elif not (WEIGHT_MIN <= c.weight <= WEIGHT_MAX):
            report.append(f"WeightOutOfRange: {c.innovation}")

    if not any(r.startswith(("DanglingEndpoint", "SelfLoop", "DuplicateNodeId")) for r in report):
        try:
            topological_order(genome)
        except CycleDetected as exc:
            report.append(f"CycleDetected: {exc}")
    return report


# === canonical serialization ===

def to_canonical_text(genome: Genome) -> str:
    """Canonical JSON form: sorted keys, hex-float weights, trailing newline.

    Equal genomes serialize to equal text, and weights survive the round
    trip bit-for-bit.
    """
    doc = {
        "format": _FORMAT_TAG,
        "next_node_id": genome.next_node_id,
        "nodes": [
            {"id": n.node_id, "role": n.role.value, "activation": n.activation.value}
            for n in genome.nodes
        ],
        "connections": [
            {
                "innovation": c.innovation,
                "source": c.source,
                "target": c.target,
                "weight": float(c.weight).hex(),
                "enabled": c.enabled,
            }
            for c in genome.connections
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def from_canonical_text(text: str) -> Genome:
    """Inverse of to_canonical_text.  Raises GenomeFormatError on bad input."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GenomeFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != _FORMAT_TAG:
        raise GenomeFormatError("missing or unknown format tag")
    try:
        nodes = [
            NodeGene(int(n["id"]), Role(n["role"]), Activation(n["activation"]))
            for n in doc["nodes"]
        ]
        connections = [
            ConnectionGene(
                innovation=int(c["innovation"]),
                source=int(c["source"]),
                target=int(c["target"]),
                weight=float.fromhex(c["weight"])
                if isinstance(c["weight"], str)
                else float(c["weight"]),
                enabled=bool(c["enabled"]),
            )
            for c in doc["connections"]
        ]
        next_node_id = int(doc["next_node_id"])
    except (KeyError, TypeError, ValueError) as exc:
        raise GenomeFormatError(f"malformed genome document: {exc}") from exc
    return make_genome(nodes, connections, next_node_id)


def genome_digest(genome: Genome) -> str:
    """sha256 hex digest of the canonical text; used as the genome's identity."""
    return hashlib.sha256(to_canonical_text(genome).encode("utf-8")).hexdigest()


def with_weight(genome: Genome, innovation: int, weight: float) -> Genome:
    """Copy of genome with one connection's weight replaced (test/tooling aid)."""
    connections = tuple(
        replace(c, weight=weight) if c.innovation == innovation else c
        for c in genome.connections
    )
    return Genome(genome.nodes, connections, genome.next_node_id)
