"""Command line entry point: ``dehnlab <command> ...``.

Exit codes: 0 success, 2 certification failure, 1 error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .degree import DegreeError, degree_json, extract_cellular, tag_pieces
from .filling import NotFillable, vk_area
from .geometry import PLChain, TriangulatedPatch, build_grid_E2, build_H2_tiling, dumps
from .groups import builtin_model
from .lab import (
    DEFAULT_GRID,
    PrecedesCertificate,
    ProfileTable,
    check_precedes,
    combinatorial_profile,
    equivalence_report,
    geometric_profile,
    grid_rectangle_loops,
    h2_strip_loops,
)
from .pushing import PushConfig, PushError, boundary_mismatch, push_chain
from .words import parse_presentation, parse_word

EXIT_OK, EXIT_ERROR, EXIT_UNCERTIFIED = 0, 1, 2


class CertificationFailure(Exception):
    pass


def _write(path: str, text: str) -> None:
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)


def _read(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def cmd_area(args) -> int:
    if args.pres:
        group = parse_presentation(_read(args.pres))
    else:
        group = builtin_model(args.group)
    gens = group.generator_count
    w = parse_word(args.word, gens)
    res = vk_area(w, group, budget=args.budget)
    print(json.dumps(res.to_json(), sort_keys=True))
    if not res.found:
        raise CertificationFailure(f"search stopped at the {res.exceeded} limit")
    return EXIT_OK


def cmd_profile(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    if args.mode == "comb":
        target = {"grid": "z2", "h2": "genus2"}.get(args.target, args.target)
        table = combinatorial_profile(target, args.nmax, budget=args.budget)
    else:
        if args.target in ("grid", "z2"):
            patch = build_grid_E2(max(1, args.nmax // 4 + 2))
            loops = grid_rectangle_loops(patch, args.nmax, seed=args.seed)
        elif args.target in ("h2", "genus2"):
            patch = build_H2_tiling(3)
            loops = h2_strip_loops(patch, args.nmax)
        else:
            raise ValueError(f"no geometric loop family for {args.target!r}")
        table = geometric_profile(patch, loops, args.nmax)
    _write(os.path.join(args.out, "profile.csv"), table.to_csv())
    _write(os.path.join(args.out, "profile.json"), dumps(table.to_json()))
    print(table.to_csv(), end="")
    return EXIT_OK


def cmd_push(args) -> int:
    patch = TriangulatedPatch.from_json(_read(args.mesh))
    T = PLChain.from_json(_read(args.chain))
    R, S, rep = push_chain(T, patch, PushConfig(seed=args.seed))
    stem = os.path.splitext(args.out)[0]
    _write(args.out, rep.to_json())
    _write(stem + ".R.json", R.to_json())
    _write(stem + ".S.json", S.to_json())
    rep.check()
    if T.dim == 1 and patch.model.kind != "H2":
        mis = boundary_mismatch(S, T, R)
        if mis > 1e-9:
            raise CertificationFailure(f"boundary(S) differs from T - R by {mis}")
    print(f"vol_T={rep.vol_T:.6g} vol_R={rep.vol_R:.6g} empirical_C={rep.empirical_C:.6g}")
    return EXIT_OK


def cmd_degree(args) -> int:
    patch = TriangulatedPatch.from_json(_read(args.mesh))
    chain = PLChain.from_json(_read(args.chain))
    if chain.dim != 2:
        raise ValueError("degree needs a 2-chain")
    if any(p.tag is None for p in chain.pieces) and patch.top_dim > 2:
        chain, _, _ = push_chain(chain, patch, PushConfig(seed=args.seed))
    pushed = tag_pieces(chain, patch)
    cell, rep = extract_cellular(pushed, patch, seed=args.seed)
    _write(args.out, degree_json(cell, rep))
    if not (rep.boundary_ok and rep.area_ok):
        raise CertificationFailure("boundary or area check failed")
    print(f"cells={cell.norm()} area_lower={rep.area_lower:.6g} chain_area={rep.chain_area:.6g}")
    return EXIT_OK


def _load_grid(arg: str) -> dict:
    if arg == "default":
        return DEFAULT_GRID
    text = _read(arg) if os.path.exists(arg) else arg
    grid = json.loads(text)
    return {k: tuple(grid[k]) for k in "ABCDE"}


def cmd_compare(args) -> int:
    f = ProfileTable.from_csv(_read(args.f), os.path.basename(args.f))
    g = ProfileTable.from_csv(_read(args.g), os.path.basename(args.g))
    res = check_precedes(f, g, _load_grid(args.grid))
    _write(args.out, dumps(res.to_json()))
    print(json.dumps(res.to_json(), sort_keys=True))
    if not isinstance(res, PrecedesCertificate):
        raise CertificationFailure(f"no certificate; worst sample n={res.n}")
    return EXIT_OK


def cmd_report(args) -> int:
    rep = equivalence_report(args.pair, args.nmax, seed=args.seed, out_dir=args.out)
    for name, ok in rep["certified"].items():
        print(f"{name}: {'certified' if ok else 'NOT certified'}")
    if not rep["equivalent"] or not rep.get("dehn_linear", {"holds": True})["holds"]:
        raise CertificationFailure("equivalence not certified on the sampled range")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dehnlab", description="Dehn functions of groups and model spaces")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("area", help="exact van Kampen area of a null word")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--pres", help="presentation file (gens: a b / rels: abAB)")
    src.add_argument("--group", choices=["z2", "z3", "f2", "genus2"])
    p.add_argument("--word", required=True)
    p.add_argument("--budget", type=int, default=64)
    p.set_defaults(func=cmd_area)

    p = sub.add_parser("profile", help="combinatorial or geometric Dehn profile")
    p.add_argument("--mode", choices=["comb", "geom"], required=True)
    p.add_argument("--target", choices=["z2", "f2", "genus2", "grid", "h2"], required=True)
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=64)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("push", help="push a PL chain into the skeleton")
    p.add_argument("--mesh", required=True)
    p.add_argument("--chain", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_push)

    p = sub.add_parser("degree", help="cellular 2-chain from a pushed 2-chain")
    p.add_argument("--mesh", required=True)
    p.add_argument("--chain", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_degree)

    p = sub.add_parser("compare", help="check f precedes g for two profile CSVs")
    p.add_argument("f")
    p.add_argument("g")
    p.add_argument("--grid", default="default", help="'default', a JSON file or inline JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="equivalence report for a built-in pair")
    p.add_argument("--pair", choices=["flat", "hyperbolic"], required=True)
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CertificationFailure as e:
        print(f"certification failed: {e}", file=sys.stderr)
        return EXIT_UNCERTIFIED
    except (PushError, DegreeError) as e:
        print(f"certification failed: {e}", file=sys.stderr)
        return EXIT_UNCERTIFIED
    except (OSError, ValueError, KeyError, NotFillable, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
