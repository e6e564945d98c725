"""Command-line entry point: ``projcoreset {bench,coreset,tree,synth,eval}``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import sys
from pathlib import Path

from . import kernels
from .bench import load_config, run_benchmark
from .cnw import rows_for
from .coreset import fixed_size_coreset, fixed_size_target
from .core import opt_single_subspace
from .cnw import cnw
from .config import TOL
from .evaluation import EXACT_RANK, svd_error, uniform_coreset
from .io import load_dataset, load_weighted_csv, write_dense_csv, write_weighted_csv
from .streaming import JlConfig, Reducer, TreeConfig, chunk, merge_reduce
from .synth import KINDS, synth


def _add_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="dataset file (csv, idx or triplets)")
    p.add_argument("--input-format", choices=["csv", "idx", "triplets"], help="override extension sniffing")
    p.add_argument("--header", action="store_true", help="skip the first line of a CSV input")


def _load(args):
    ds = load_dataset(args.input, fmt=args.input_format, header=args.header)
    if ds.dropped_zero_rows:
        print(f"dropped {ds.dropped_zero_rows} zero row(s)", file=sys.stderr)
    return ds


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="projcoreset", description="Coresets for projective clustering.")
    parser.add_argument("--version", action="version", version=f"%(prog)s (kernels: {kernels.BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="run a benchmark grid from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--workers", type=int, help="override the worker count")
    p.add_argument("--out", help="override the output directory")
    p.add_argument("--format", choices=["csv"], default="csv")

    p = sub.add_parser("coreset", help="build one coreset and export it")
    _add_input(p)
    p.add_argument("--algo", choices=["uniform", "cnw", "composed"], default="composed")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--j", type=int, help="subspace dimension (composed only; default k)")
    size = p.add_mutually_exclusive_group(required=True)
    size.add_argument("--size", type=int)
    size.add_argument("--epsilon", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.add_argument("--format", choices=["csv"], default="csv")

    p = sub.add_parser("tree", help="merge-reduce tree over chunks of the input")
    _add_input(p)
    p.add_argument("--size", "--chunk-size", dest="size", type=int, required=True, help="chunk and coreset size m")
    p.add_argument("--algo", choices=[r.value for r in Reducer], default="uniform", help="reducer")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--epsilon", type=float, help="CNW reducer accuracy (default sqrt(k/m))")
    p.add_argument("--jl", choices=["off", "ceil_ln", "six"], default="off", help="JL target-dimension rule")
    p.add_argument("--jl-dim", type=int, help="explicit JL target dimension")
    p.add_argument("--jl-dist", choices=["gaussian", "rademacher"], default="gaussian")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--checkpoints", action="store_true", help="write every node under OUT/floor-<f>/")
    p.add_argument("--out", default=".")
    p.add_argument("--format", choices=["csv"], default="csv")

    p = sub.add_parser("synth", help="write a synthetic dataset as CSV")
    p.add_argument("--kind", choices=KINDS, default="subspaces")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--d", type=int, default=128)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--j", type=int, default=2)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--header", action="store_true")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--format", choices=["csv"], default="csv")

    p = sub.add_parser("eval", help="error of an exported coreset against a dataset")
    _add_input(p)
    p.add_argument("--coreset", required=True, help="weighted CSV written by 'coreset'")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--form", choices=["squared", "unsquared"], default="squared")
    return parser


def cmd_bench(args) -> int:
    cfg = load_config(args.config)
    over = {k: v for k, v in (("seed", args.seed), ("workers", args.workers)) if v is not None}
    if over:
        cfg = dataclasses.replace(cfg, **over)
    res = run_benchmark(cfg, out=args.out)
    failed = sum(r["status"].startswith("failed") for r in res.records)
    print(f"{len(res.records)} records written to {res.out / 'records.csv'} ({failed} failed)")
    return 0


def cmd_coreset(args) -> int:
    P = _load(args).points
    k = args.k
    if args.algo == "uniform":
        m = args.size if args.size is not None else rows_for(k, args.epsilon)
        C = uniform_coreset(P, m, args.seed)
    elif args.algo == "cnw":
        eps = args.epsilon if args.epsilon is not None else math.sqrt(k / args.size)
        it = args.size if args.size is not None else None
        C = cnw(P, k, min(eps, TOL.cnw_eps_max), iterations=it)
    else:
        j = args.j if args.j is not None else k
        eps = args.epsilon if args.epsilon is not None else math.sqrt(4 * k / args.size)
        C = fixed_size_coreset(P, k, j, eps, opt_single_subspace(P, j), rng_seed=args.seed)
        print(f"target size {fixed_size_target(k, eps)}, collapse size {C.params['collapse_size']}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "coreset.csv"
    write_weighted_csv(path, C)
    print(f"{args.algo}: {C.size} rows, total weight {C.total_weight:.6g} -> {path}")
    return 0


def cmd_tree(args) -> int:
    P = _load(args).points
    jl = None
    if args.jl_dim is not None or args.jl != "off":
        dim = args.jl_dim if args.jl_dim is not None else JlConfig.default_dim(args.k, args.size, args.jl)
        jl = JlConfig(dim, args.jl_dist, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = TreeConfig(
        args.size,
        Reducer(args.algo),
        k=args.k,
        epsilon=args.epsilon,
        jl=jl,
        seed=args.seed,
        workers=args.workers,
        checkpoint_dir=str(out) if args.checkpoints else None,
    )
    res = merge_reduce(chunk(P, args.size), cfg)
    with open(out / "floors.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["floor", "nodes", "rows", "error", "wall_time"])
        for r in res.reports:
            w.writerow([r.floor, r.nodes, r.rows, repr(float(r.error)), repr(float(r.wall_time))])
            print(f"floor {r.floor:2d}: {r.nodes:6d} nodes {r.rows:8d} rows  error {r.error:.6g}")
    write_weighted_csv(out / "top.csv", res.top)
    return 0


def cmd_synth(args) -> int:
    ds = synth(args.kind, args.n, args.d, k=args.k, j=args.j, noise=args.noise, rng_seed=args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_dense_csv(args.out, ds.points.points, header=args.header)
    print(f"{ds.points.n}x{ds.points.d} {args.kind} -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    P = _load(args).points
    C = load_weighted_csv(args.coreset)
    if C.d != P.d:
        raise SystemExit(f"coreset has {C.d} columns, dataset has {P.d}")
    err = svd_error(P, C, args.k, form=args.form)
    print("exact-rank" if err == EXACT_RANK else repr(err))
    return 0


COMMANDS = {"bench": cmd_bench, "coreset": cmd_coreset, "tree": cmd_tree, "synth": cmd_synth, "eval": cmd_eval}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
