"""A full directed-design run with a synthetic subject.

The simulator wires together everything a live session uses — engine, grid
layout, dwell ledger, evolution — and replaces the human with a gaze policy
that fixates whichever object currently scores best against the target.
"""

from gazeforms import simulate

report = simulate("small,red,cone", seed=7)

print(f"target          : {report.target}")
print(f"seed            : {report.seed}")
print(f"converged       : {report.success}")
print(f"generations     : {report.generations}")
print(f"ticks simulated : {report.ticks}")

print("\nbest target score per generation:")
for gen, score in enumerate(report.score_trajectory, start=1):
    bar = "#" * int(round(score * 40))
    print(f"  gen {gen:3d}  {score:5.3f}  {bar}")

snap = report.final_snapshot
if snap is not None:
    solid = sum(1 for h in snap["mesh_sha256"] if h is not None)
    print(f"\nterminal snapshot: generation {snap['generation']}, "
          f"{solid}/15 cells hold a mesh")
    print("first three genome digests:",
          ", ".join(d[:12] for d in snap["genomes"][:3]))
