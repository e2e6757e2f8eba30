"""Grow a first generation of objects and export one to STL and OBJ.

Walks the lowest layer of the package: genomes in, meshes out, no session
machinery involved.
"""

import tempfile
from pathlib import Path

import numpy as np

from gazeforms import (
    EvolutionConfig,
    InnovationRegistry,
    LatticeSpec,
    MeshFormat,
    export_mesh,
    genome_digest,
    genome_to_mesh,
    init_population,
    mutate,
)

rng = np.random.default_rng(0)
config = EvolutionConfig(rng_seed=0)
population = init_population(config, rng)
print(f"initial population: {len(population)} genomes")
for i, genome in enumerate(population[:3]):
    print(f"  genome {i}: {len(genome.nodes)} nodes, "
          f"{len(genome.connections)} connections, digest {genome_digest(genome)[:12]}")

# Every genome describes a field over the cube [-1,1]^3; the lattice
# resolution only changes how finely we sample it.
spec = LatticeSpec(resolution=32)
mesh = genome_to_mesh(population[0], spec)
print(f"\nmeshed genome 0 at resolution 32: {len(mesh.triangles)} triangles, "
      f"color ({mesh.color.r:.2f}, {mesh.color.g:.2f}, {mesh.color.b:.2f})")

out = Path(tempfile.mkdtemp(prefix="gazeforms_demo_"))
(out / "object.stl").write_bytes(export_mesh(mesh, MeshFormat.STL_BINARY))
(out / "object.obj").write_bytes(export_mesh(mesh, MeshFormat.OBJ))
print(f"wrote {out}/object.stl and object.obj")

# Mutation is how the population explores: weights jiggle, connections and
# nodes appear.  The registry keeps innovation numbers globally consistent
# so crossover can align genes later.
registry = InnovationRegistry.initial()
child = population[0]
for _ in range(25):
    child = mutate(child, config, registry, rng)
print(f"\nafter 25 mutations: {len(child.nodes)} nodes, "
      f"{len(child.connections)} connections")
child_mesh = genome_to_mesh(child, spec)
if child_mesh.is_empty:
    print("the mutated object carved itself away entirely — emptiness is a "
          "legal phenotype; selection, not the encoding, weeds it out")
else:
    print(f"the mutated object survived with {len(child_mesh.triangles)} triangles")
