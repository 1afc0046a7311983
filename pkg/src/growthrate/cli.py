"""Command line entry point: ``growthrate <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import ratescan
from .census import enumerate_ball
from .cones import build_cone_automaton
from .words import GenTuple, group_from_label


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--group", default="F2", help="F<k>, surface<g> or 'gens: a,b; rels: abAB;'")
    p.add_argument("--mode", default="group", choices=ratescan.MODES)
    p.add_argument("--max-card", type=int, default=2)
    p.add_argument("--max-len", type=int, default=2)
    p.add_argument("--radius", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)


def _tuple_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tuple", default=None, help="generator words, e.g. 'a b ab' (default: the basis)")


def _tuple(args, oracle) -> GenTuple:
    text = args.tuple or " ".join(chr(ord("a") + i) for i in range(oracle.alphabet.rank))
    return GenTuple.parse(text, symmetric=args.mode != "semigroup", alphabet=oracle.alphabet)


def _emit(obj, out) -> None:
    text = json.dumps(obj, indent=1, default=str)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _svg_path(out, default: str) -> str:
    return str(Path(out).with_suffix(".svg")) if out else default


def cmd_scan(args) -> int:
    cfg = ratescan.ScanConfig(
        group=args.group,
        mode=args.mode,
        max_card=args.max_card,
        max_len=args.max_len,
        radius=args.radius,
        tol=args.tol,
        seed=args.seed,
        min_card=args.min_card,
        sample=args.sample,
    )
    out = args.out or "scan.jsonl"
    recs = ratescan.scan(cfg, out=out, progress=True)
    failed = sum(r.status != "ok" for r in recs)
    print(f"{len(recs)} classes written to {out} ({failed} failed)")
    return 0


def cmd_report(args) -> int:
    from .plotting import plot_tower, plot_wellorder

    if args.kind == "tower":
        lengths = [int(x) for x in args.lengths.split(",")]
        res = ratescan.tower_experiment(args.depth, lengths, seed=args.seed, radius=args.radius_override, tol=args.tol)
        plot_tower(res, _svg_path(args.out, "tower.svg"))
        _emit(res, args.out)
        return 0
    if not args.dataset:
        print("report wellorder|dn needs a dataset", file=sys.stderr)
        return 2
    recs = ratescan.load_records(args.dataset)
    if args.kind == "wellorder":
        rep = ratescan.report_wellorder(recs)
        plot_wellorder(rep, _svg_path(args.out, "wellorder.svg"))
        _emit(rep, args.out)
    else:
        _emit(ratescan.report_dn(recs, args.n), args.out)
    return 0


def cmd_separators(args) -> int:
    from .treelab.separators import KernelSpec, find_separators
    from .words import parse_word

    oracle = group_from_label(args.group)
    t = _tuple(args, oracle)
    kernel, mode = None, "semigroup" if args.mode == "semigroup" else "group"
    if args.kernel:
        images, r = args.kernel.split(":")
        kernel, mode = KernelSpec.parse(images.split(","), r), "kernel"
        if args.tuple is None:
            t = GenTuple(tuple(parse_word(chr(ord("a") + i)) for i in range(len(kernel.images))))
    seps = find_separators(t.words, mode, kernel=kernel, seed=args.seed)
    _emit(seps.to_dict(), args.out)
    return 0


def cmd_feasible(args) -> int:
    from .treelab.manifest import Manifest, run_manifest

    if args.manifest:
        man = Manifest.from_json(Path(args.manifest).read_text())
    else:
        oracle = group_from_label(args.group)
        words = (args.tuple or " ".join(chr(ord("a") + i) for i in range(oracle.alphabet.rank))).split()
        man = Manifest(words, mode="semigroup" if args.mode == "semigroup" else "group", ms=list(range(1, args.radius + 1)), q=args.q, seed=args.seed)
        if args.kernel:
            images, r = args.kernel.split(":")
            man.mode, man.images, man.kernel_element = "kernel", images.split(","), r
            man.negative_control = args.negative_control
    _emit(run_manifest(man), args.out)
    return 0


def cmd_census(args) -> int:
    oracle = group_from_label(args.group)
    c = enumerate_ball(oracle, _tuple(args, oracle), args.radius)
    out = args.out or "census.csv"
    c.to_csv(out)
    print(f"spheres {c.sphere_sizes} written to {out}")
    return 0


def cmd_automaton(args) -> int:
    oracle = group_from_label(args.group)
    A = build_cone_automaton(oracle, _tuple(args, oracle), N_validate=args.radius)
    stem = Path(args.out or "automaton")
    A.dump_json(stem.with_suffix(".json"))
    stem.with_suffix(".dot").write_text(A.to_dot() + "\n")
    print(f"{A.n_states} states, k_tail {A.k_tail}, written to {stem}.json and {stem}.dot")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="growthrate", description="Certified growth rates of finitely generated groups and semigroups.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="enumerate tuples and write one rate record per class")
    _add_common(p)
    p.add_argument("--min-card", type=int, default=1)
    p.add_argument("--sample", type=int, default=None, help="random subset of candidate tuples")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("report", help="reports on a dataset, or the tower experiment")
    p.add_argument("kind", choices=["wellorder", "dn", "tower"])
    p.add_argument("dataset", nargs="?", default=None)
    p.add_argument("--n", type=int, default=2, help="cardinality for 'dn'")
    p.add_argument("--depth", type=int, default=1)
    p.add_argument("--lengths", default="2,4,8,16")
    p.add_argument("--radius", dest="radius_override", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("separators", help="find and verify separators")
    _add_common(p)
    _tuple_arg(p)
    p.add_argument("--kernel", default=None, help="kernel mode: 'IMAGES:R', e.g. 'a,b,ab:cBA'")
    p.set_defaults(func=cmd_separators)

    p = sub.add_parser("feasible", help="forbidden/feasible counts and injectivity checks")
    _add_common(p)
    _tuple_arg(p)
    p.add_argument("--manifest", default=None, help="JSON experiment manifest")
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--kernel", default=None, help="kernel mode: 'IMAGES:R'")
    p.add_argument("--negative-control", action="store_true")
    p.set_defaults(func=cmd_feasible, radius=4)

    p = sub.add_parser("census", help="sphere sizes as CSV")
    _add_common(p)
    _tuple_arg(p)
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("automaton", help="export a validated cone automaton as JSON and dot")
    _add_common(p)
    _tuple_arg(p)
    p.set_defaults(func=cmd_automaton)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
