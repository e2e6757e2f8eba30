"""Command-line entry points: serve, simulate, replay, export.

Exit codes: 0 success, 1 runtime failure, 2 bad input, 3 empty mesh.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .cppn import GenomeFormatError, from_canonical_text, validate
from .evolve import EvolutionConfig
from .gateway import GatewayServer, PortInUse, SessionStoreUnwritable
from .meshio import EmptyMesh, MeshFormat, export_mesh
from .replay import DivergenceDetected, LogCorrupt, replay
from .session import InteractionMode, SessionConfig
from .shape import LatticeSpec, largest_component, marching_cubes, query_color, sample_field, volume_fraction
from .simulate import simulate

__all__ = ["main", "InvalidGenome"]


class InvalidGenome(Exception):
    """Genome file that does not parse or does not validate."""


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gazeforms")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the session gateway for one UI")
    serve.add_argument("--port", type=int, default=0)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--session-store", default=None,
                       help="directory for the session record (default: in memory)")
    serve.add_argument("--gaze-source", default="pointer",
                       help="pointer | tracker:HOST:PORT | replay:PATH | synthetic:TARGET")
    serve.add_argument("--mode", choices=["gaze", "mouse"], default="gaze")
    serve.add_argument("--seed", type=int, default=0)
    serve.add_argument("--resolution", type=int, default=16)

    sim = sub.add_parser("simulate", help="headless directed trial with a scripted gazer")
    sim.add_argument("--target", required=True, help='e.g. "small,red,cone"')
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--max-generations", type=int, default=200)
    sim.add_argument("--epsilon", type=float, default=0.05)
    sim.add_argument("--sigma", type=float, default=0.1)
    sim.add_argument("--resolution", type=int, default=16)
    sim.add_argument("--out", default=None, help="write the JSON report here")
    sim.add_argument("--session-dir", default=None)

    rep = sub.add_parser("replay", help="verify a recorded session reproduces bit-identically")
    rep.add_argument("session_dir")

    exp = sub.add_parser("export", help="mesh one genome file to STL or OBJ")
    exp.add_argument("--genome", required=True)
    exp.add_argument("--resolution", type=int, default=16)
    exp.add_argument("--format", choices=[f.value for f in MeshFormat], default="stl")
    exp.add_argument("--out", required=True)
    return parser


def _cmd_serve(args) -> int:
    config = SessionConfig(
        evolution=EvolutionConfig(rng_seed=args.seed),
        resolution=args.resolution,
        interaction_mode=InteractionMode(args.mode),
    )
    try:
        server = GatewayServer(config, session_dir=args.session_store,
                               gaze_source=args.gaze_source,
                               host=args.host, port=args.port)
    except PortInUse as exc:
        print(f"port in use: {exc}", file=sys.stderr)
        return 1
    except SessionStoreUnwritable as exc:
        print(f"session store unwritable: {exc}", file=sys.stderr)
        return 1
    print(f"listening on {server.host}:{server.port}", flush=True)
    server.serve_forever()
    return 0


def _cmd_simulate(args) -> int:
    report = simulate(
        args.target, seed=args.seed,
        max_generations=args.max_generations,
        epsilon=args.epsilon, sigma=args.sigma,
        resolution=args.resolution,
        session_dir=args.session_dir,
    )
    line = (f"target {report.target} seed {report.seed}: "
            f"{'success' if report.success else 'no convergence'} "
            f"in {report.generations} generations")
    print(line)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _cmd_replay(args) -> int:
    try:
        report = replay(args.session_dir)
    except LogCorrupt as exc:
        print(f"log corrupt: {exc}", file=sys.stderr)
        return 1
    except DivergenceDetected as exc:
        print(f"divergence detected: {exc}", file=sys.stderr)
        return 1
    print(f"replay ok: {report.events} events, {report.trials} trials, "
          f"{report.generations} generations, {report.snapshots} snapshots")
    return 0


def _load_genome(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidGenome(f"cannot read {path}: {exc}") from exc
    try:
        genome = from_canonical_text(text)
    except GenomeFormatError as exc:
        raise InvalidGenome(str(exc)) from exc
    problems = validate(genome)
    if problems:
        raise InvalidGenome("; ".join(problems))
    return genome


def _cmd_export(args) -> int:
    try:
        genome = _load_genome(args.genome)
    except InvalidGenome as exc:
        print(f"invalid genome: {exc}", file=sys.stderr)
        return 2
    spec = LatticeSpec(args.resolution)
    grid = largest_component(sample_field(genome, spec))
    fraction = volume_fraction(grid)
    mesh = marching_cubes(grid, color=query_color(genome))
    try:
        data = export_mesh(mesh, MeshFormat(args.format))
    except EmptyMesh:
        print("empty mesh: the genome carves away everything at this resolution",
              file=sys.stderr)
        return 3
    with open(args.out, "wb") as fh:
        fh.write(data)
    print(f"wrote {args.out}: {len(mesh.triangles)} triangles, "
          f"volume fraction {fraction:.6f}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "serve": _cmd_serve,
        "simulate": _cmd_simulate,
        "replay": _cmd_replay,
        "export": _cmd_export,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
