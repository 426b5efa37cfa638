"""Command-line front door: vectorize kernels, emit artifacts, print stats.

Exit codes: 0 success, 2 usage or kernel-description parse error,
3 oracle mismatch (no configuration verified), 4 unsupported vector width.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .emit import emit_intrinsics, group_dot, scalar_dot, vector_dot
from .kerneldesc import KernelDescError, build_from_description
from .kernels import KERNEL_NAMES, KernelSpec, PredXSpec, make_kernel, make_predx
from .scalar_ir import KernelError
from .scheduling import schedule, simulate_stack_accesses
from .search import NoValidConfigError, prospect

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_ORACLE = 3
EXIT_VECSIZE = 4

SUPPORTED_VEC_SIZES = (2, 4, 8, 16)
EMIT_TARGETS = ("vector-ir", "intrinsics", "dot", "stats")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="vecgraph",
        description="Vectorize a fully unrolled static kernel by graph transformation.")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--kernel", choices=sorted(KERNEL_NAMES),
                     help="built-in kernel signature")
    src.add_argument("--kernel-file", type=Path,
                     help="kernel description file (see docs)")
    src.add_argument("--predx", type=int, metavar="X",
                     help="random graph with up to X predecessors per variable "
                          "(scheduling mode: no vectorization)")
    p.add_argument("--size", type=int, default=8, help="kernel size (default 8)")
    p.add_argument("--op", choices=("add", "sub", "mul", "div"), default="add",
                   help="binary operation for built-in kernels")
    p.add_argument("--vec-size", type=int, default=8,
                   help="scalar elements per vector (default 8)")
    p.add_argument("--seed", type=int, default=0, help="seed for oracle memory/PredX")
    p.add_argument("--cmax", type=int, default=4096,
                   help="cap on enumerated load/store split combinations")
    p.add_argument("--registers", type=int, default=32,
                   help="register count for scheduling (default 32)")
    p.add_argument("--emit", default="stats",
                   help="comma list of outputs: vector-ir,intrinsics,dot,stats")
    p.add_argument("--out", type=Path, default=None,
                   help="output directory (default $VECGRAPH_OUT or cwd)")
    p.add_argument("--reduction", choices=("auto", "on", "off"), default="auto",
                   help="pin the reduction rewrite")
    p.add_argument("--strategy", choices=("identity", "partitioning", "clustering"),
                   default=None, help="pin the operation-split strategy")
    p.add_argument("--loads-choice", type=int, default=None,
                   help="pin one load/store split combination by index")
    p.add_argument("--dump-score-matrix", action="store_true",
                   help="write the winner's affinity matrices as CSV")
    return p


def _emit_targets(spec: str) -> list[str]:
    targets = [t.strip() for t in spec.split(",") if t.strip()]
    bad = [t for t in targets if t not in EMIT_TARGETS]
    if bad or not targets:
        raise ValueError(f"--emit takes a comma list from {EMIT_TARGETS}, got {spec!r}")
    return targets


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    print(f"wrote {path}", file=sys.stderr)


def _print_census_table(stats: dict) -> None:
    scalar, vector = stats["scalar"], stats["vector"]
    print(f"{'':>14} {'loads':>6} {'ops':>6} {'stores':>7} {'transforms':>11}")
    print(f"{'scalar':>14} {scalar['loads']:>6} {scalar['operations']:>6} "
          f"{scalar['stores']:>7} {'-':>11}")
    print(f"{'vectorized':>14} {vector['loads']:>6} {vector['operations']:>6} "
          f"{vector['stores']:>7} {vector['transforms']:>11}")


def _run_predx(args, targets: list[str], outdir: Path) -> int:
    graph = make_predx(PredXSpec(x=args.predx, size=args.size, seed=args.seed))
    original = graph.topo_order()
    reordered = schedule(graph, registers=args.registers)
    stats = {
        "predx": args.predx,
        "size": args.size,
        "seed": args.seed,
        "census": graph.census(),
        "registers": args.registers,
        "stack_accesses": {
            "original": simulate_stack_accesses(graph, original, args.registers),
            "reordered": simulate_stack_accesses(graph, reordered, args.registers),
        },
    }
    base = f"pred{args.predx}_{args.size}_s{args.seed}"
    if "dot" in targets:
        _write(outdir / f"{base}_scalar.dot", scalar_dot(graph))
    if "stats" in targets:
        text = json.dumps(stats, indent=2, sort_keys=True)
        _write(outdir / f"{base}_stats.json", text + "\n")
        print(text)
        acc = stats["stack_accesses"]
        print(f"stack accesses: original {acc['original']}, reordered {acc['reordered']}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        targets = _emit_targets(args.emit)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    outdir = args.out or Path(os.environ.get("VECGRAPH_OUT", "."))

    if args.predx is not None:
        return _run_predx(args, targets, outdir)

    if args.vec_size not in SUPPORTED_VEC_SIZES:
        print(f"error: unsupported --vec-size {args.vec_size}; "
              f"supported: {SUPPORTED_VEC_SIZES}", file=sys.stderr)
        return EXIT_VECSIZE

    try:
        if args.kernel_file is not None:
            graph = build_from_description(args.kernel_file.read_text())
            base = args.kernel_file.stem
        else:
            graph = make_kernel(KernelSpec(args.kernel, args.size, args.op))
            base = args.kernel
    except (KernelDescError, KernelError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    pin_reduction = {"auto": None, "on": True, "off": False}[args.reduction]
    try:
        outcome = prospect(graph, args.vec_size, c_max=args.cmax, seed=args.seed,
                           pin_reduction=pin_reduction,
                           pin_load_choice=args.loads_choice,
                           pin_strategy=args.strategy)
    except NoValidConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORACLE

    order = schedule(outcome.graph, registers=args.registers)
    report = outcome.report.to_dict()
    stats = {
        "kernel": base,
        "size": args.size,
        "op": args.op,
        "vec_size": args.vec_size,
        "seed": args.seed,
        "scalar": report["scalar"],
        "vector": report["winner"]["census"],
        "winner": {k: report["winner"][k]
                   for k in ("reduction", "load_choice", "strategy")},
        "configs_evaluated": report["configs_evaluated"],
        "combinations": report["combinations"],
        "truncated": report["truncated"],
        "schedule": {
            "registers": args.registers,
            "stack_accesses": {
                "original": simulate_stack_accesses(outcome.graph,
                                                    outcome.graph.topo_order(),
                                                    args.registers),
                "reordered": simulate_stack_accesses(outcome.graph, order,
                                                     args.registers),
            },
        },
    }

    if "dot" in targets:
        _write(outdir / f"{base}_scalar.dot", scalar_dot(outcome.scalar))
        _write(outdir / f"{base}_groups.dot", group_dot(outcome.groups))
        _write(outdir / f"{base}_vector.dot", vector_dot(outcome.graph))
        _write(outdir / f"{base}_schedule.dot", vector_dot(outcome.graph, order,
                                                           title="schedule"))
    if "vector-ir" in targets:
        _write(outdir / f"{base}_vector.ir", outcome.graph.serialize())
    if "intrinsics" in targets:
        _write(outdir / f"{base}_{args.vec_size}.c",
               emit_intrinsics(outcome.graph, order, f"{base}_w{args.vec_size}"))
    if args.dump_score_matrix:
        for matrix in outcome.layout.matrices:
            _write(outdir / f"{base}_scores_g{matrix.group_id}.csv", matrix.to_csv())
    if "stats" in targets:
        text = json.dumps(stats, indent=2, sort_keys=True)
        _write(outdir / f"{base}_stats.json", text + "\n")
        print(text)
        _print_census_table(stats)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
