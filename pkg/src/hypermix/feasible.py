"""Limiting shadow densities of 3-graph mixing constructions and the induced IFS.

For a family of patterns with one recursive index each, every optimal
construction's limiting shadow density is obtained by iterating one affine
contraction per pattern, so the set of such densities is the attractor of an
iterated function system on the line.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .lagrange import OptimalVectorReport, pattern_lagrangian
from .mixing import PatternFamily, RecipeTree, validate_recipe
from .pattern import Pattern, internally_covered, pair_coverage, uncovered_parts

POINT_TOL = 1e-12


@dataclass(frozen=True)
class AffineMap:
    c: float
    rho: float

    def __post_init__(self):
        if not abs(self.rho) < 1:
            raise DomainError(f"contraction ratio must satisfy |rho| < 1, got {self.rho}")

    def __call__(self, x):
        return self.c + self.rho * x

    @property
    def fixed_point(self) -> float:
        return self.c / (1.0 - self.rho)

    def to_json(self) -> dict:
        return {"c": self.c, "rho": self.rho}


def maps_to_json(maps: Sequence[AffineMap]) -> list[dict]:
    return [f.to_json() for f in maps]


def maps_from_json(data: list | str) -> list[AffineMap]:
    if isinstance(data, str):
        data = json.loads(data)
    return [AffineMap(float(d["c"]), float(d["rho"])) for d in data]


@dataclass(frozen=True)
class PointSet:
    points: tuple[float, ...]

    @classmethod
    def of(cls, values: Iterable[float], tol: float = POINT_TOL) -> "PointSet":
        out: list[float] = []
        for v in sorted(float(v) for v in values):
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"point {v} outside [0, 1]")
            if not out or v - out[-1] > tol:
                out.append(v)
        return cls(tuple(out))

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        for v in self.points:
            writer.writerow([f"{v:.12g}"])
        return buf.getvalue()

    def to_json(self) -> list[float]:
        return list(self.points)


def _check_r3(family: PatternFamily):
    if family.r != 3:
        raise DomainError(f"shadow recursion is implemented for 3-graphs only, got r={family.r}")


def _shadow_terms(P: Pattern, x: np.ndarray) -> float:
    """Lost shadow mass from non-recursive uncovered parts and uncovered cross pairs."""
    lost = sum(x[j - 1] ** 2 for j in uncovered_parts(P))
    for (j, k), covered in pair_coverage(P).items():
        if not covered:
            lost += 2 * x[j - 1] * x[k - 1]
    return lost


def limit_shadow_density(family: PatternFamily, recipe: RecipeTree) -> float:
    """Limiting pair-shadow density of a ratio-mode recipe for 3-graph patterns.

    A recursive part whose internal pairs are not covered by the blowup loses
    x_j^2 * (1 - s_j), where s_j is the child's shadow density; self-similar
    children turn this into a linear fixed point.
    """
    _check_r3(family)
    validate_recipe(family, recipe, "ratios")
    if recipe.self_similar:
        raise DomainError("the root of a recipe cannot be a self-similar marker")
    return _shadow(family, recipe)


def _shadow(family, node: RecipeTree) -> float:
    if node.is_empty:
        return 0.0
    P = family[node.base]
    x = np.asarray(node.parts, dtype=float)
    value = 1.0 - _shadow_terms(P, x)
    loop = 0.0
    for j in P.R:
        if internally_covered(P, j):
            continue
        w = x[j - 1] ** 2
        child = node.children.get(j)
        if child is not None and child.self_similar:
            value -= w
            loop += w
        else:
            s_child = 0.0 if child is None else _shadow(family, child)
            value -= w * (1.0 - s_child)
    if loop >= 1.0:
        raise DomainError("self-similar weights sum to at least 1; no finite fixed point")
    return value / (1.0 - loop)


def optimal_recipe(P: Pattern, report: OptimalVectorReport | None = None) -> RecipeTree:
    """Ratio recipe using the pattern's optimal vector, self-similar in every recursive part."""
    report = report or pattern_lagrangian(P)
    return RecipeTree(P.name, "ratios", report.vector.coords, {j: RecipeTree.marker() for j in P.R})


def ifs_map(P: Pattern, report: OptimalVectorReport | None = None) -> AffineMap:
    """x -> c + rho x giving the shadow density of one more level built on top of x."""
    if P.r != 3:
        raise DomainError(f"shadow recursion is implemented for 3-graphs only, got r={P.r}")
    if len(P.R) != 1:
        raise DomainError(f"ifs maps need exactly one recursive index, {P.name or 'pattern'} has {len(P.R)}")
    report = report or pattern_lagrangian(P)
    if report.degenerate or not report.converged or not report.vector.is_interior():
        raise DomainError(f"no proper optimal vector for {P.name or 'pattern'}")
    x = report.vector.array()
    (j,) = P.R
    rho = 0.0 if internally_covered(P, j) else x[j - 1] ** 2
    return AffineMap(1.0 - _shadow_terms(P, x) - rho, rho)


def ifs_maps(family: PatternFamily, reports: Sequence[OptimalVectorReport] | None = None) -> list[AffineMap]:
    _check_r3(family)
    reports = reports or [None] * len(family.patterns)
    return [ifs_map(P, rep) for P, rep in zip(family.patterns, reports)]


def iterate_M(maps: Sequence[AffineMap], M0: PointSet | Iterable[float], k: int, tol: float = POINT_TOL) -> PointSet:
    """Apply every map to the current point set k times, merging points closer than ``tol``.

    With contraction ratio rho, points created at step k lie about rho^k
    apart, so the default tolerance starts merging them once rho^k drops
    below 1e-12; pass ``tol=0`` to keep every distinct float.
    """
    if k < 0:
        raise DomainError(f"k must be nonnegative, got {k}")
    current = PointSet.of(M0.points if isinstance(M0, PointSet) else M0, tol)
    if not len(current):
        raise DomainError("iterate_M needs a nonempty starting set")
    for _ in range(k):
        pts = np.asarray(current.points)
        current = PointSet.of(np.concatenate([f.c + f.rho * pts for f in maps]), tol)
    return current


def open_set_check(maps: Sequence[AffineMap], interval: tuple[float, float], tol: float = POINT_TOL) -> bool:
    """Whether every map sends (a, b) into itself with pairwise disjoint images.

    Endpoint comparisons allow ``tol`` of rounding, since the natural interval
    is often spanned by fixed points of the maps themselves.
    """
    a, b = interval
    if not a < b:
        raise DomainError(f"need a < b, got ({a}, {b})")
    images = []
    for f in maps:
        lo, hi = sorted((f(a), f(b)))
        if lo == hi:
            # a constant map: its image is a single point
            if not a < lo < b:
                return False
        elif lo < a - tol or hi > b + tol:
            return False
        images.append((lo, hi))
    for (l1, h1), (l2, h2) in combinations(images, 2):
        if l1 == h1 and l2 == h2:
            if l1 == l2:
                return False
        elif l1 == h1:
            if l2 < l1 < h2:
                return False
        elif l2 == h2:
            if l1 < l2 < h1:
                return False
        elif not (h1 <= l2 + tol or h2 <= l1 + tol):
            return False
    return True


def hausdorff_dimension(ratios: Sequence[float], tol: float = 1e-12) -> float:
    """The d >= 0 with sum ratios_i^d = 1, by bisection."""
    ratios = [float(v) for v in ratios]
    if not ratios:
        raise DomainError("need at least one ratio")
    if any(not 0.0 < v < 1.0 for v in ratios):
        raise DomainError(f"ratios must lie in (0, 1): {ratios}")
    if len(ratios) == 1:
        return 0.0

    def g(d):
        return math.fsum(v**d for v in ratios) - 1.0

    lo, hi = 0.0, 2.0 * len(ratios)
    while g(hi) > 0:
        hi *= 2
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        val = g(mid)
        if val > 0:
            lo = mid
        else:
            hi = mid
        if abs(val) <= tol and hi - lo <= 1e-15 * max(1.0, hi):
            break
        if hi - lo <= 5e-16 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def shadow_pair_count(family: PatternFamily, recipe: RecipeTree) -> int:
    """Exact number of shadow pairs of an exact-size 3-graph construction, without building it.

    A cross pair between parts j and k is covered when some multiset uses
    both indices and the rest of it fits the part sizes; a pair inside part j
    when some multiset has multiplicity >= 2 at j and fits, or when the pair
    lies in the shadow of the child construction.
    """
    _check_r3(family)
    validate_recipe(family, recipe, "sizes")
    return _pairs(family, recipe)


def _fits(D, sizes) -> bool:
    return all(sizes[i] >= c for i, c in enumerate(D))


def _pairs(family, node: RecipeTree) -> int:
    if node.is_empty:
        return 0
    P = family[node.base]
    sizes = node.parts
    live = [D for D in P.E if _fits(D, sizes)]
    total = 0
    for j, k in combinations(range(P.m), 2):
        if any(D[j] and D[k] for D in live):
            total += sizes[j] * sizes[k]
    for j in range(P.m):
        if any(D[j] >= 2 for D in live):
            total += math.comb(sizes[j], 2)
        elif j + 1 in P.R and (j + 1) in node.children:
            total += _pairs(family, node.children[j + 1])
    return total
