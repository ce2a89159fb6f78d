"""Command-line interface: convert, build, gt, query, sweep.

Exit codes: 0 success, 2 usage/validation problems, 1 runtime failures.
Diagnostics go to stderr; data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys


from .bench import (
    SweepGrid,
    brute_force_knn,
    radius_from_quantile,
    run_sweep,
    train_test_split,
)
from .build import BuildParams, build_index
from .data import DTYPE_NAMES
from .distances import DistanceKind
from .errors import PdascError
from .search import SearchParams, batch_search
from .storage import (
    import_csv,
    load_dataset,
    load_index,
    save_dataset,
    save_ground_truth,
    save_index,
    write_results_csv,
)

DISTANCE_CHOICES = [k.value for k in DistanceKind]


def _float_list(text: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}") from None


def _int_list(text: str) -> list:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None


def cmd_convert(args) -> int:
    ds = import_csv(args.input, args.dtype)
    save_dataset(ds, args.output)
    print(f"wrote {args.output}: n={ds.n} d={ds.d} dtype={DTYPE_NAMES[ds.dtype_code]}")
    return 0


def cmd_build(args) -> int:
    kind = DistanceKind(args.distance)
    dataset = load_dataset(args.data, kind)
    params = BuildParams(n_nodes=args.nnodes, gl=args.gl, n_protos=getattr(args, "np"),
                         kind=kind, seed=args.seed, max_swaps=args.max_swaps)
    index = build_index(dataset, params, n_threads=args.threads)
    sizes = save_index(index, args.output)
    for i, shard in enumerate(index.shards):
        print(f"shard {i}: levels {shard.level_sizes} bytes {sizes[i]} "
              f"build_ndc {index.build_ndc_per_shard[i]}")
    print(f"total build_ndc {index.build_ndc}")
    return 0


def cmd_gt(args) -> int:
    kind = DistanceKind(args.distance)
    dataset = load_dataset(args.data, kind)
    queries = load_dataset(args.queries, kind)
    ids, dists = brute_force_knn(dataset, queries.vectors, args.k, kind)
    save_ground_truth(ids, dists, args.output)
    print(f"wrote {args.output}: {ids.shape[0]} queries x {ids.shape[1]} neighbours")
    return 0


def cmd_query(args) -> int:
    dataset = load_dataset(args.data)
    index = load_index(args.index, dataset)
    kind = index.params.kind
    dataset.validate_for(kind)
    queries = load_dataset(args.queries, kind)

    if args.radius is not None:
        r = args.radius
    else:
        r = radius_from_quantile(dataset, kind, args.radius_quantile, seed=args.seed)
    params = SearchParams(k=args.k, r=r, kind=kind)
    outcomes = batch_search(index, queries.vectors, params, n_threads=args.threads)

    if args.json:
        for qi, out in enumerate(outcomes):
            rec = {
                "query": qi,
                "r": r,
                "neighbours": [[int(i), float(d)] for i, d in
                               zip(out.neighbour_ids, out.neighbour_dists)],
                "per_shard_ndc": list(out.per_shard_ndc),
                "ndc": out.ndc,
            }
            print(json.dumps(rec))
    else:
        print(f"radius {r!r}")
        for qi, out in enumerate(outcomes):
            pairs = " ".join(f"{i}:{d:.6f}" for i, d in
                             zip(out.neighbour_ids, out.neighbour_dists))
            print(f"query {qi}: {pairs} ndc={out.ndc} per_shard={list(out.per_shard_ndc)}")
    return 0


def cmd_sweep(args) -> int:
    kind = DistanceKind(args.distance)
    dataset = load_dataset(args.data, kind)
    train_ids, query_ids = train_test_split(dataset.n, args.queries, args.seed)
    train = dataset.subset(train_ids)
    query_vectors = dataset.rows(query_ids)

    grid = SweepGrid(
        ratios=tuple(args.ratios),
        gl_list=tuple(args.gl_list),
        n_nodes_list=tuple(args.nnodes_list),
        radii=tuple(args.radii) if args.radii else (),
        radius_quantiles=tuple(args.radius_quantiles) if args.radius_quantiles else (),
        k=args.k,
    )
    name = os.path.splitext(os.path.basename(args.data))[0]
    report = run_sweep(train, query_vectors, grid, kind, seed=args.seed,
                       dataset_name=name, n_threads=args.threads,
                       max_swaps=args.max_swaps)
    write_results_csv(report.rows, args.output)
    print(f"resolved radii: {[repr(r) for r in report.resolved_radii]}")
    print(f"wrote {args.output}: {len(report.rows)} rows")
    return 0


def _add_common(p, seed_default: int = 42) -> None:
    p.add_argument("--seed", type=int, default=seed_default, help="RNG seed (default %(default)s)")
    p.add_argument("--threads", type=int, default=1,
                   help="parallelism for shard builds and batch queries; results are identical for any value")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pdasc",
                                 description="Sharded hierarchical approximate similarity search")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="CSV to dataset file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--dtype", required=True, choices=["f32", "bitset", "geo"])
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("build", help="build an index over a dataset file")
    p.add_argument("--data", required=True)
    p.add_argument("--distance", required=True, choices=DISTANCE_CHOICES)
    p.add_argument("--nnodes", type=int, required=True, help="number of shards")
    p.add_argument("--gl", type=int, required=True, help="group length")
    p.add_argument("--np", type=int, required=True, help="prototypes per group")
    p.add_argument("--max-swaps", type=int, default=100)
    p.add_argument("--output", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("gt", help="exact k-NN ground truth")
    p.add_argument("--data", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--distance", required=True, choices=DISTANCE_CHOICES)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_gt)

    p = sub.add_parser("query", help="search an index")
    p.add_argument("--index", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--k", type=int, default=10)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--radius", type=float, help="absolute pruning radius (inf allowed)")
    g.add_argument("--radius-quantile", type=float,
                   help="resolve the radius from this pairwise-distance quantile")
    p.add_argument("--json", action="store_true", help="one JSON record per query")
    _add_common(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("sweep", help="parameter sweep producing a results CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--distance", required=True, choices=DISTANCE_CHOICES)
    p.add_argument("--ratios", type=_float_list, default=[0.02, 0.05, 0.1, 0.2, 0.33, 0.5])
    p.add_argument("--gl-list", type=_int_list, default=[10])
    p.add_argument("--nnodes-list", type=_int_list, default=[1, 3, 5, 10])
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--radii", type=_float_list)
    g.add_argument("--radius-quantiles", type=_float_list)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--queries", type=int, default=100,
                   help="queries held out from the dataset (never indexed)")
    p.add_argument("--max-swaps", type=int, default=100)
    p.add_argument("--output", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PdascError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
