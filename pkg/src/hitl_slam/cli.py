"""Command line interface.

  hitl solve --graph g.graph --script s.script --out final.graph
       [--metrics m.txt] [--truth t.truth] [--info-out prefix]
       [--sigma --tp --k1 --k2 --resolution --seed]
  hitl generate lost-poses|bent-hallway [--config cfg.json] --out g.graph
  hitl serve --graph g.graph --bind 127.0.0.1:8765
"""

import argparse
import dataclasses
import json
import sys

from . import dataset
from .interpret import InterpretationParams
from .optimizer import (ResidualWeights, information_matrix, save_pattern_pgm,
                        save_triplets)
from .session import SessionConfig, replay


def _solve(args):
    config = SessionConfig(
        interpretation=InterpretationParams(sigma=args.sigma, t_p=args.tp,
                                            neighborhood=4.0 * args.sigma),
        weights=ResidualWeights(k1=args.k1, k2=args.k2),
        resolution=args.resolution,
    )
    session = replay(args.graph, args.script, args.out, args.metrics,
                     args.truth, config)
    for entry in session.metrics_log:
        print(f"iteration {entry['iteration']}: cost {entry['total_cost']:.6g} "
              f"inconsistency {entry['inconsistency']:.4f} m^2")
    if args.info_out:
        H = information_matrix(session.graph, config.weights)
        save_pattern_pgm(H, args.info_out + ".pgm")
        save_triplets(H, args.info_out + ".txt")
        print(f"information matrix written to {args.info_out}.pgm/.txt")
    print(f"final graph written to {args.out}")
    return 0


def _generate(args):
    overrides = {}
    if args.config:
        with open(args.config) as fh:
            overrides = json.load(fh)
    if args.kind == "lost-poses":
        cfg = dataset.LostPosesConfig(**overrides)
        graph, meta, selectors, measurements = dataset.generate_lost_poses(cfg)
    else:
        cfg = dataset.BentHallwayConfig(**overrides)
        graph, meta, selectors, measurements = dataset.generate_bent_hallway(cfg)
    meta.update({k: repr(v) if isinstance(v, float) else str(v)
                 for k, v in dataclasses.asdict(cfg).items() if k != "seed"})
    dataset.save_graph(graph, args.out, metadata=meta)
    dataset.save_truth(selectors, measurements, args.out + ".truth")
    print(f"graph written to {args.out} ({graph.num_poses} poses), "
          f"ground truth to {args.out}.truth")
    return 0


def _serve(args):
    from .server import serve

    serve(args.graph, args.bind)
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="hitl",
                                     description="Human-in-the-loop pose-graph workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="replay a correction script headlessly")
    p.add_argument("--graph", required=True)
    p.add_argument("--script", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--metrics")
    p.add_argument("--truth")
    p.add_argument("--info-out", dest="info_out")
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--tp", type=int, default=5)
    p.add_argument("--k1", type=float, default=2.0)
    p.add_argument("--k2", type=float, default=1.0)
    p.add_argument("--resolution", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0, help="unused; reserved")
    p.set_defaults(func=_solve)

    p = sub.add_parser("generate", help="write a synthetic dataset")
    p.add_argument("kind", choices=["lost-poses", "bent-hallway"])
    p.add_argument("--config", help="JSON file of config overrides")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_generate)

    p = sub.add_parser("serve", help="interactive session over WebSocket")
    p.add_argument("--graph", required=True)
    p.add_argument("--bind", default="127.0.0.1:8765")
    p.set_defaults(func=_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
