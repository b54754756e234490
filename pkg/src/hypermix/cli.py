"""Command-line front end: ``hypermix <subcommand> [options]``.

Data goes to stdout (or ``--output``), diagnostics to stderr.  Exit codes:
0 success, 2 domain error or unparsable input, 3 capacity limit reached.
Enumeration caps can be raised through environment variables, e.g.
``HYPERMIX_LAMBDA_CAP=400``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

from . import feasible, lagrange, mixing, sts
from .errors import CapacityError, DomainError
from .hypercore import RGraph, complete, densities, shadow
from .pattern import LIBRARY, Pattern, library

DEFAULT_SEED = 0
SIG_DIGITS = 12

CAP_VARS = {
    "lambda": ("HYPERMIX_LAMBDA_CAP", mixing.LAMBDA_CAP),
    "subconstruction": ("HYPERMIX_SUBCONSTRUCTION_CAP", mixing.SUBCONSTRUCTION_CAP),
    "forbidden": ("HYPERMIX_FORBIDDEN_CAP", None),
    "fingerprint": ("HYPERMIX_FINGERPRINT_LIMIT", sts.FINGERPRINT_LIMIT),
}


class InputError(DomainError):
    pass


def cap(kind: str):
    var, default = CAP_VARS[kind]
    raw = os.environ.get(var)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{var} must be an integer, got {raw!r}") from None


# ------------------------------------------------------------- formatting


def rounded(value: Any) -> Any:
    """Round every float in a JSON-like value to 12 significant digits."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return value
        return float(f"{value:.{SIG_DIGITS}g}")
    if isinstance(value, dict):
        return {k: rounded(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [rounded(v) for v in value]
    if hasattr(value, "item"):  # numpy scalar
        return rounded(value.item())
    return value


def fmt(value: float) -> str:
    return f"{float(value):.{SIG_DIGITS}g}"


def dump_json(value: Any) -> str:
    return json.dumps(rounded(value), sort_keys=False) + "\n"


# ---------------------------------------------------------------- parsing


def _load_text(source: str) -> str:
    path = Path(source)
    if not path.is_file():
        raise InputError(f"no such file: {source}")
    return path.read_text()


def _load_json(source: str) -> Any:
    text = source if source.lstrip().startswith(("{", "[")) else _load_text(source)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"cannot parse JSON from {source[:40]!r}: {exc}") from None


def parse_pattern(source: str) -> Pattern:
    """Library name, ``sts:T`` (complement pattern of the generated design), inline JSON or a JSON file."""
    if source in LIBRARY:
        return library(source)
    m = re.fullmatch(r"sts:(\d+)", source)
    if m:
        return sts.pattern_from_sts(sts.sts_generate(int(m.group(1))))
    if source == "fano":
        return sts.pattern_from_sts(sts.fano())
    data = _load_json(source)
    try:
        name = Path(source).stem if not source.lstrip().startswith("{") else ""
        return Pattern.from_json(data, name=name)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise InputError(f"malformed pattern {source[:40]!r}: {exc}") from None


def parse_family(sources: Sequence[str]) -> mixing.PatternFamily:
    if not sources:
        raise InputError("at least one --pattern is required")
    return mixing.PatternFamily.of(*(parse_pattern(s) for s in sources))


def parse_graph(source: str) -> RGraph:
    """``K<n>^<r>`` for a complete graph, inline JSON, or a JSON / text file."""
    m = re.fullmatch(r"K(\d+)\^(\d+)", source)
    if m:
        return complete(int(m.group(2)), int(m.group(1)))
    if source.lstrip().startswith("{"):
        data = _load_json(source)
    else:
        text = _load_text(source)
        if not text.lstrip().startswith("{"):
            return RGraph.from_text(text)
        data = _load_json(text)
    try:
        return RGraph.from_json(data)
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed graph: {exc}") from None


def parse_recipe(source: str) -> mixing.RecipeTree:
    try:
        return mixing.RecipeTree.from_json(_load_json(source))
    except (KeyError, TypeError, AttributeError) as exc:
        raise InputError(f"malformed recipe: {exc}") from None


def parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


def parse_sts(args) -> sts.STS:
    if args.file:
        return sts.STS.from_text(_load_text(args.file))
    if args.t is None:
        raise InputError("give --file or --t")
    return sts.sts_generate(args.t)


# --------------------------------------------------------------- commands


def cmd_lagrangian(args) -> Any:
    rep = lagrange.pattern_lagrangian(parse_pattern(args.pattern), args.starts, args.seed, threads=args.threads)
    return {"pattern": rep.pattern, "lambda": rep.lam}


def cmd_optvec(args) -> Any:
    rep = lagrange.pattern_lagrangian(parse_pattern(args.pattern), args.starts, args.seed, threads=args.threads)
    return rep.to_json()


def cmd_minimal(args) -> Any:
    rep = lagrange.is_minimal(parse_pattern(args.pattern), args.tol, args.starts, args.seed)
    return {"minimal": rep.minimal, "lambda": rep.lam, "margins": {str(j): v for j, v in sorted(rep.margins.items())}}


def cmd_lambda_n(args) -> Any:
    family = parse_family(args.pattern)
    limit = cap("lambda")
    lo = args.n if args.start is None else args.start
    if lo > args.n:
        raise InputError(f"--start {lo} exceeds --n {args.n}")
    rows = []
    for n in range(lo, args.n + 1):
        value, witness = mixing.lambda_n(family, n, limit)
        total = math.comb(n, family.r)
        rows.append((n, value, value / total if total else 0.0, witness))
    if args.format == "json":
        return [{"n": n, "Lambda": v, "density": d, "witness": w.to_json()} for n, v, d, w in rows]
    return "n,Lambda,density\n" + "".join(f"{n},{v},{fmt(d)}\n" for n, v, d, _ in rows)


def cmd_build(args) -> Any:
    family = parse_family(args.pattern)
    if args.recipe:
        recipe = parse_recipe(args.recipe)
    elif args.n is not None:
        recipe = mixing.lambda_n(family, args.n, cap("lambda"))[1]
    else:
        raise InputError("give --recipe or --n")
    if recipe.mode == "ratios":
        if args.n is None:
            raise InputError("a ratio recipe needs --n")
        recipe = mixing.realize(family, recipe, args.n)
    graph = mixing.build(family, recipe).graph
    return graph.to_text() if args.format == "text" else graph.to_json()


def cmd_limit_density(args) -> Any:
    family = parse_family(args.pattern)
    return mixing.limit_density(family, _ratio_recipe(args, family))


def cmd_shadow(args) -> Any:
    G = parse_graph(args.graph)
    if args.density:
        return densities(G)[1]
    S = shadow(G)
    return S.to_text() if args.format == "text" else S.to_json()


def cmd_is_subconstruction(args) -> Any:
    family = parse_family(args.pattern)
    F = parse_graph(args.graph)
    return {"subconstruction": mixing.is_subconstruction(F, family, cap("subconstruction"))}


def cmd_forbidden_family(args) -> Any:
    family = parse_family(args.pattern)
    graphs = mixing.forbidden_family(family, args.M, cap("forbidden"))
    return [G.to_json() for G in graphs]


def _ratio_recipe(args, family) -> mixing.RecipeTree:
    if args.recipe:
        return parse_recipe(args.recipe)
    if len(family.patterns) != 1:
        raise InputError("without --recipe exactly one --pattern is needed")
    P = family.patterns[0]
    rep = lagrange.pattern_lagrangian(P, args.starts, args.seed, threads=args.threads)
    recipe = feasible.optimal_recipe(P, rep)
    return mixing.RecipeTree(family.ids[0], recipe.mode, recipe.parts, recipe.children)


def cmd_shadow_limit(args) -> Any:
    family = parse_family(args.pattern)
    return feasible.limit_shadow_density(family, _ratio_recipe(args, family))


def _reports(args, family):
    return [lagrange.pattern_lagrangian(P, args.starts, args.seed, threads=args.threads) for P in family.patterns]


def cmd_ifs(args) -> Any:
    family = parse_family(args.pattern)
    return feasible.maps_to_json(feasible.ifs_maps(family, _reports(args, family)))


def cmd_iterate_m(args) -> Any:
    if args.maps:
        try:
            maps = feasible.maps_from_json(_load_json(args.maps))
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed maps: {exc}") from None
    else:
        family = parse_family(args.pattern)
        maps = feasible.ifs_maps(family, _reports(args, family))
    M0 = parse_floats(args.M0) if args.M0 else [f.fixed_point for f in maps]
    points = feasible.iterate_M(maps, M0, args.k, args.tol)
    return points.to_csv() if args.format == "csv" else points.to_json()


def cmd_hausdorff(args) -> Any:
    return feasible.hausdorff_dimension(parse_floats(args.ratios))


def cmd_sts_gen(args) -> Any:
    D = sts.sts_generate(args.t)
    if args.format == "json":
        return {"t": D.t, "triples": [[a + 1 for a in tr] for tr in sorted(D.triples)]}
    return D.to_text()


def cmd_sts_check(args) -> Any:
    res = sts.sts_validate(parse_sts(args))
    pair = None if res.pair is None else [a + 1 for a in res.pair]
    return {"valid": res.valid, "pair": pair, "count": res.count, "message": res.message}


def cmd_fingerprint(args) -> Any:
    return sts.fingerprint(parse_sts(args), cap("fingerprint")).to_json()


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypermix", description=__doc__.splitlines()[0], allow_abbrev=False)
    parser.add_argument("--output", "-o", help="write results here instead of stdout")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed of the random starts")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for multi-start optimisation")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func: Callable, help: str, formats=("json",)):
        p = sub.add_parser(name, help=help, allow_abbrev=False)
        p.set_defaults(func=func)
        p.add_argument("--format", choices=formats, default=formats[0])
        return p

    def patterns(p, many=True):
        if many:
            p.add_argument("--pattern", action="append", default=[], help="library name, sts:T, JSON or file; repeat for a family")
        else:
            p.add_argument("--pattern", required=True, help="library name, sts:T, JSON or file")
        p.add_argument("--starts", type=int, default=32, help="random starts of the optimiser")

    p = add("lagrangian", cmd_lagrangian, "pattern Lagrangian")
    patterns(p, many=False)
    p = add("optvec", cmd_optvec, "optimal vector report")
    patterns(p, many=False)
    p = add("minimal", cmd_minimal, "minimality test")
    patterns(p, many=False)
    p.add_argument("--tol", type=float, default=1e-6)

    p = add("lambda-n", cmd_lambda_n, "exact maximum construction size", ("csv", "json"))
    patterns(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--start", type=int, help="emit every n from here up to --n")

    p = add("build", cmd_build, "build a construction", ("json", "text"))
    patterns(p)
    p.add_argument("--recipe", help="recipe JSON or file; default is the lambda-n witness")
    p.add_argument("--n", type=int)

    p = add("limit-density", cmd_limit_density, "limit edge density of a ratio recipe")
    patterns(p)
    p.add_argument("--recipe", help="default: self-similar recipe at the optimal vector")

    p = add("shadow", cmd_shadow, "shadow of a graph", ("json", "text"))
    p.add_argument("--graph", required=True, help="K<n>^<r>, JSON or file")
    p.add_argument("--density", action="store_true", help="print the shadow density only")

    p = add("is-subconstruction", cmd_is_subconstruction, "membership in the hereditary closure")
    patterns(p)
    p.add_argument("--graph", required=True, help="K<n>^<r>, JSON or file")

    p = add("forbidden-family", cmd_forbidden_family, "small graphs that are not subconstructions")
    patterns(p)
    p.add_argument("--M", type=int, required=True, help="largest vertex count")

    p = add("shadow-limit", cmd_shadow_limit, "limit shadow density of a ratio recipe")
    patterns(p)
    p.add_argument("--recipe", help="default: self-similar recipe at the optimal vector")

    p = add("ifs", cmd_ifs, "affine maps of the shadow recursion")
    patterns(p)

    p = add("iterate-m", cmd_iterate_m, "iterate the affine maps on a point set", ("csv", "json"))
    patterns(p)
    p.add_argument("--maps", help="maps JSON or file; default: derived from --pattern")
    p.add_argument("--M0", help="comma-separated start points; default: fixed points of the maps")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--tol", type=float, default=feasible.POINT_TOL, help="merge points closer than this")

    p = add("hausdorff", cmd_hausdorff, "similarity dimension of the ratios")
    p.add_argument("--ratios", required=True, help="comma-separated ratios in (0, 1)")

    p = add("sts-gen", cmd_sts_gen, "generate a Steiner triple system", ("text", "json"))
    p.add_argument("--t", type=int, required=True)

    for name, func, help in (("sts-check", cmd_sts_check, "validate a triple system"), ("fingerprint", cmd_fingerprint, "F(D) fingerprint")):
        p = add(name, func, help)
        p.add_argument("--file", help="STS text file")
        p.add_argument("--t", type=int, help="use the generated system of this order")
    return parser


def _render(result: Any) -> str:
    if isinstance(result, str):
        return result
    if isinstance(result, (int, float)) and not isinstance(result, bool):
        return fmt(result) + "\n" if isinstance(result, float) else f"{result}\n"
    return dump_json(result)


def run(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        text = _render(args.func(args))
    except CapacityError as exc:
        print(f"capacity: {exc}", file=sys.stderr)
        return 3
    except (DomainError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.output:
        Path(args.output).write_text(text)
    else:
        out.write(text)
    return 0


def main() -> None:
    sys.exit(run())
