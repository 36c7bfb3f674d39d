"""Command-line front end.

    kpkvb gen      --n N --alpha A --nu V --seed S [--model M] --out FILE
    kpkvb graph    POINTS [--builder naive|pruned] --out FILE
    kpkvb ham      POINTS --out FILE
    kpkvb cert     POINTS --out FILE
    kpkvb analytic [--alpha A ...] [--nu V ...] [--n N]
    kpkvb sweep    [--alpha ...] [--nu ...] [--n ...] --trials T --parallel P --out FILE

Exit status: 0 on success, 1 when the Hamilton procedure finds no cycle,
2 on invalid input.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import analytics
from .graphcore import BUILDERS, build, degree_stats, format_edges, write_edges
from .hamilton import construct, verify_cycle, write_certificate, write_cycle
from .matching import obstruction_counts, obstruction_record
from .sampler import (MODEL_KINDS, ModelParams, format_pointset, read_pointset, sample,
                      write_pointset)
from .sweep import DEFAULT_ALPHAS, DEFAULT_NS, DEFAULT_NUS, SweepConfig, sweep
from .tiling import TilingError

EXIT_OK, EXIT_FAILURE, EXIT_INVALID = 0, 1, 2


class InputError(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> int:
    params = ModelParams(args.n, args.alpha, args.nu)
    pts = sample(params, args.seed, args.model)
    if args.out:
        write_pointset(pts, args.out)
    else:
        sys.stdout.write(format_pointset(pts))
    return EXIT_OK


def _load(path):
    try:
        return read_pointset(path)
    except (OSError, ValueError, IndexError) as exc:
        raise InputError(f"cannot read point set {path}: {exc}") from exc


def cmd_graph(args) -> int:
    pts = _load(args.points)
    g = build(pts, args.builder)
    if args.out:
        write_edges(g, args.out)
    else:
        sys.stdout.write(format_edges(g))
    stats = degree_stats(g)
    stats.pop("histogram")
    print(json.dumps({"edges": g.edge_count, **stats}), file=sys.stderr)
    return EXIT_OK


def cmd_ham(args) -> int:
    pts = _load(args.points)
    try:
        res = construct(pts)
    except TilingError as exc:
        raise InputError(str(exc)) from exc
    if res.success and verify_cycle(pts, res.cycle):
        if args.out:
            write_cycle(res.cycle, args.out)
        else:
            print(" ".join(map(str, res.cycle)))
        return EXIT_OK
    if args.out:
        write_certificate(res, args.out)
    else:
        print(json.dumps(res.certificate(), indent=2))
    return EXIT_FAILURE


def cmd_cert(args) -> int:
    pts = _load(args.points)
    obs = obstruction_counts(pts, build(pts, args.builder))
    _emit(json.dumps(obstruction_record(pts, obs), indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_analytic(args) -> int:
    rows = analytics.constants_table(args.alpha, args.nu, args.n)
    _emit(json.dumps(rows, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = SweepConfig(alphas=tuple(args.alpha), nus=tuple(args.nu), ns=tuple(args.n),
                      trials=args.trials, master_seed=args.seed, model_kind=args.model,
                      out=args.out, parallel=args.parallel)
    summary = sweep(cfg)
    print(json.dumps(summary["phase_estimates"], indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kpkvb", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="sample a point set")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--alpha", type=float, required=True)
    g.add_argument("--nu", type=float, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--model", choices=MODEL_KINDS, default="poisson")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    for name, func, helptext in [("graph", cmd_graph, "write the edge list"),
                                 ("ham", cmd_ham, "run the Hamilton cycle procedure"),
                                 ("cert", cmd_cert, "matching obstruction counts")]:
        s = sub.add_parser(name, help=helptext)
        s.add_argument("points", help="point-set file written by 'gen'")
        s.add_argument("--out")
        if name != "ham":
            s.add_argument("--builder", choices=sorted(BUILDERS), default="pruned")
        s.set_defaults(func=func)

    a = sub.add_parser("analytic", help="table of closed-form constants")
    a.add_argument("--alpha", type=float, nargs="+", default=list(DEFAULT_ALPHAS))
    a.add_argument("--nu", type=float, nargs="+", default=list(DEFAULT_NUS))
    a.add_argument("--n", type=int, default=10_000)
    a.add_argument("--out")
    a.set_defaults(func=cmd_analytic)

    w = sub.add_parser("sweep", help="Monte Carlo sweep over an (alpha, nu, n) grid")
    w.add_argument("--alpha", type=float, nargs="+", default=list(DEFAULT_ALPHAS))
    w.add_argument("--nu", type=float, nargs="+", default=list(DEFAULT_NUS))
    w.add_argument("--n", type=int, nargs="+", default=list(DEFAULT_NS))
    w.add_argument("--trials", type=int, default=20)
    w.add_argument("--seed", type=int, default=0, help="master seed")
    w.add_argument("--model", choices=MODEL_KINDS, default="poisson")
    w.add_argument("--parallel", type=int, default=1)
    w.add_argument("--out", default="sweep.csv")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
