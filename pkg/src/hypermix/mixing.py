"""Recursive mixing constructions built from a family of patterns.

A construction picks a base pattern, blows it up over a partition of the
vertex set, and recurses inside the parts whose index is recursive.  This
module builds constructions from recipe trees, computes the exact maximum
edge count Lambda(n) with a witness recipe, decides membership in the
hereditary closure (subconstructions), and enumerates small forbidden graphs.
"""

from __future__ import annotations

import itertools
import json
import threading
from dataclasses import dataclass, field
from math import comb, isclose
from typing import Iterator, Mapping, Sequence

import numpy as np

from . import _dp
from .errors import CapacityError, DomainError
from .hypercore import RGraph, canonical_form, from_canonical, induced_subgraph
from .lagrange import lagrange_poly
from .pattern import INT64_MAX, Pattern, automorphisms, blowup, blowup_count, library, symmetric_classes

LAMBDA_CAP = 200
SUBCONSTRUCTION_CAP = 8
MAX_CONSTRUCTIONS_CAP = 12
FORBIDDEN_CAPS = {2: 7, 3: 6, 4: 6}


@dataclass(frozen=True)
class PatternFamily:
    patterns: tuple[Pattern, ...]
    ids: tuple[str, ...]

    def __post_init__(self):
        if not self.patterns:
            raise DomainError("a pattern family needs at least one pattern")
        if len(self.ids) != len(self.patterns):
            raise DomainError("one id per pattern is required")
        if len(set(self.ids)) != len(self.ids):
            raise DomainError(f"pattern ids must be unique: {self.ids}")
        if len({P.r for P in self.patterns}) != 1:
            raise DomainError("all patterns of a family must share one uniformity")

    @classmethod
    def of(cls, *patterns: Pattern | str) -> "PatternFamily":
        pats = [library(p) if isinstance(p, str) else p for p in patterns]
        ids = [P.name or f"P{i + 1}" for i, P in enumerate(pats)]
        return cls(tuple(pats), tuple(ids))

    @property
    def r(self) -> int:
        return self.patterns[0].r

    def __getitem__(self, pid: str) -> Pattern:
        try:
            return self.patterns[self.ids.index(pid)]
        except ValueError:
            raise DomainError(f"pattern id {pid!r} not in family {self.ids}") from None

    @property
    def key(self) -> tuple:
        return tuple((P.r, P.m, tuple(sorted(P.E)), tuple(sorted(P.R))) for P in self.patterns)


@dataclass(frozen=True)
class RecipeTree:
    """One node of a construction recipe.

    ``base`` is a pattern id or None (the empty construction).  ``parts`` are
    integer sizes (mode "sizes") or limit ratios (mode "ratios").  Children
    are keyed by recursive index; a missing child means an empty
    construction.  A node with ``self_similar`` set stands for a copy of its
    parent, repeated forever (ratio mode only).
    """

    base: str | None = None
    mode: str = "sizes"
    parts: tuple = ()
    children: Mapping[int, "RecipeTree"] = field(default_factory=dict)
    self_similar: bool = False

    @classmethod
    def empty(cls, mode: str = "sizes") -> "RecipeTree":
        return cls(None, mode)

    @classmethod
    def marker(cls) -> "RecipeTree":
        return cls(None, "ratios", (), {}, True)

    @property
    def is_empty(self) -> bool:
        return self.base is None and not self.self_similar

    def total(self) -> int:
        return int(sum(self.parts))

    def to_json(self) -> dict:
        if self.self_similar:
            return {"self_similar": True}
        out = {"base": self.base or "empty", "mode": self.mode, "parts": list(self.parts)}
        out["children"] = {str(j): c.to_json() for j, c in sorted(self.children.items())}
        out["self_similar"] = False
        return out

    @classmethod
    def from_json(cls, data: dict | str) -> "RecipeTree":
        if isinstance(data, str):
            data = json.loads(data)
        if data.get("self_similar"):
            return cls.marker()
        base = data.get("base", "empty")
        mode = data.get("mode", "sizes")
        if mode not in ("sizes", "ratios"):
            raise DomainError(f"unknown recipe mode {mode!r}")
        cast = int if mode == "sizes" else float
        parts = tuple(cast(p) for p in data.get("parts", ()))
        children = {int(j): cls.from_json(c) for j, c in data.get("children", {}).items()}
        return cls(None if base == "empty" else base, mode, parts, children, False)


def validate_recipe(family: PatternFamily, recipe: RecipeTree, mode: str, size: int | None = None):
    """Check the recipe invariants; ``size`` is the vertex count the node must fill."""
    if recipe.self_similar:
        if mode != "ratios":
            raise DomainError("self-similar markers are only allowed in ratio mode")
        return
    if recipe.mode != mode:
        raise DomainError(f"recipe node in mode {recipe.mode!r}, expected {mode!r}")
    if recipe.is_empty:
        if recipe.parts or recipe.children:
            raise DomainError("an empty node has no parts and no children")
        return
    P = family[recipe.base]
    if len(recipe.parts) != P.m:
        raise DomainError(f"{recipe.base} needs {P.m} parts, got {len(recipe.parts)}")
    if any(p < 0 for p in recipe.parts):
        raise DomainError(f"negative part in {recipe.parts}")
    if mode == "sizes":
        if size is not None and recipe.total() != size:
            raise DomainError(f"node parts sum to {recipe.total()}, expected {size}")
    elif not isclose(sum(recipe.parts), 1.0, abs_tol=1e-9):
        raise DomainError(f"ratios sum to {sum(recipe.parts)}, not 1")
    for j, child in recipe.children.items():
        if j not in P.R:
            raise DomainError(f"child assigned to non-recursive index {j} of {recipe.base}")
        if mode == "sizes" and not child.is_empty and recipe.parts[j - 1] >= recipe.total():
            raise DomainError(f"recursive part {j} may not hold every vertex of its node")
        validate_recipe(family, child, mode, recipe.parts[j - 1] if mode == "sizes" else None)


@dataclass
class Construction:
    graph: RGraph
    edge_count: int
    # path of part indices from the root -> vertex range
    parts: dict[tuple[int, ...], range]


def build(family: PatternFamily, recipe: RecipeTree, n: int | None = None) -> Construction:
    """Build the construction described by an exact-size recipe.

    ``n`` is required when the root is empty and must agree with the root's
    part sizes otherwise.
    """
    if recipe.is_empty:
        if n is None:
            raise DomainError("an empty root recipe needs n")
        validate_recipe(family, recipe, "sizes")
        return Construction(RGraph(family.r, n, frozenset()), 0, {(): range(n)})
    validate_recipe(family, recipe, "sizes", n)
    edges: set = set()
    parts: dict[tuple[int, ...], range] = {}
    count = _build_into(family, recipe, 0, (), edges, parts)
    total = recipe.total()
    parts[()] = range(total)
    return Construction(RGraph(family.r, total, frozenset(edges)), count, parts)


def _build_into(family, node: RecipeTree, offset: int, path, edges: set, parts: dict) -> int:
    P = family[node.base]
    local = blowup(P.E, node.parts, P.r)
    count = local.edge_count
    edges.update(tuple(v + offset for v in e) for e in local.graph.edges)
    for j, rng in enumerate(local.parts, start=1):
        parts[path + (j,)] = range(rng.start + offset, rng.stop + offset)
        child = node.children.get(j)
        if child is not None and not child.is_empty:
            count += _build_into(family, child, offset + rng.start, path + (j,), edges, parts)
    return count


# ----------------------------------------------------------- exact counts


class _PatternArrays:
    """Multisets of a pattern flattened for the compiled recursion, plus its symmetry data."""

    TIES = 1 << 16

    def __init__(self, P: Pattern):
        self.m = P.m
        terms = [[(j, c) for j, c in enumerate(D) if c] for D in sorted(P.E)]
        width = max((len(t) for t in terms), default=1)
        self.idx = np.zeros((len(terms), width), np.int64)
        self.mul = np.zeros((len(terms), width), np.int64)
        self.nterms = np.array([len(t) for t in terms], np.int64)
        for k, t in enumerate(terms):
            for s, (j, c) in enumerate(t):
                self.idx[k, s], self.mul[k, s] = j, c
        self.rec = np.zeros(P.m, np.bool_)
        self.rec[[j - 1 for j in P.R]] = True
        self.group = automorphisms(P)
        dominators: list[list[int]] = [[] for _ in range(P.m)]
        if self.group is not None:
            # stabiliser chain along 0, 1, ...: position p dominates the rest of its orbit
            H = self.group
            for p in range(P.m):
                for j in {g[p] for g in H} - {p}:
                    dominators[j].append(p)
                H = [g for g in H if g[p] == p]
        else:
            self.classes = [[j - 1 for j in cls] for cls in symmetric_classes(P)]
            for cls in self.classes:
                for a, b in zip(cls, cls[1:]):
                    dominators[b].append(a)
        self.dom_ptr = np.array([0] + list(itertools.accumulate(len(d) for d in dominators)), np.int64)
        self.dom_idx = np.array([p for d in dominators for p in sorted(d)], np.int64)
        self.ties = np.zeros((self.TIES, P.m), np.int64)

    def least_in_orbit(self, comp: Sequence[int]) -> tuple[int, ...]:
        if self.group is None:
            out = list(comp)
            for cls in self.classes:
                for j, v in zip(cls, sorted(comp[j] for j in cls)):
                    out[j] = v
            return tuple(out)
        best = None
        for g in self.group:
            image = [0] * self.m
            for i, c in enumerate(comp):
                image[g[i]] = c
            if best is None or image < best:
                best = image
        return tuple(best)

    def best(self, n: int, binom: np.ndarray, table: np.ndarray) -> tuple[int, tuple[int, ...] | None]:
        val, count = _dp.best_compositions(
            n, self.m, self.idx, self.mul, self.nterms, self.rec, self.dom_ptr, self.dom_idx, binom, table, self.ties
        )
        if val < 0:
            return -1, None
        if count > len(self.ties):
            raise CapacityError(f"more than {len(self.ties)} tied optimal compositions at n={n}")
        return int(val), min(self.least_in_orbit([int(c) for c in row]) for row in self.ties[:count])


class ExtremalTable:
    """Lambda(k) for k = 0..N with the lexicographically least optimal (base, composition).

    Extending the table holds a lock, so concurrent queries see a consistent
    get-or-compute map.
    """

    def __init__(self, family: PatternFamily):
        self.family = family
        self.r = family.r
        self.arrays = [_PatternArrays(P) for P in family.patterns]
        self.values = np.zeros(0, np.int64)
        self.choice: list[tuple[int, tuple[int, ...]] | None] = []
        self._lock = threading.Lock()

    def ensure(self, n: int):
        with self._lock:
            start = len(self.values)
            if n < start:
                return
            if comb(n, self.r) > INT64_MAX:
                raise OverflowError(f"C({n}, {self.r}) exceeds the signed 64-bit range")
            values = np.zeros(n + 1, np.int64)
            values[:start] = self.values
            binom = np.array([[comb(v, k) for k in range(self.r + 1)] for v in range(n + 1)], np.int64)
            for k in range(start, n + 1):
                best, pick = 0, None
                if k >= self.r:
                    for i, arr in enumerate(self.arrays):
                        val, comp = arr.best(k, binom, values)
                        if val > best:
                            best, pick = val, (i, comp)
                values[k] = best
                self.choice.append(pick)
            self.values = values

    def witness(self, n: int) -> RecipeTree:
        self.ensure(n)
        pick = self.choice[n]
        if pick is None:
            return RecipeTree.empty()
        i, comp = pick
        P = self.family.patterns[i]
        children = {j: self.witness(comp[j - 1]) for j in sorted(P.R) if self.values[comp[j - 1]] > 0}
        return RecipeTree(self.family.ids[i], "sizes", comp, children)


_tables: dict[tuple, ExtremalTable] = {}
_tables_lock = threading.Lock()


def extremal_table(family: PatternFamily) -> ExtremalTable:
    with _tables_lock:
        key = (family.key, family.ids)
        if key not in _tables:
            _tables[key] = ExtremalTable(family)
        return _tables[key]


def lambda_n(family: PatternFamily, n: int, cap: int = LAMBDA_CAP) -> tuple[int, RecipeTree]:
    """Exact maximum edge count of a mixing construction on n vertices, with a witness recipe.

    Ties go to the lexicographically least (family position, composition).
    """
    if n < 0:
        raise DomainError(f"n must be nonnegative, got {n}")
    if n > cap:
        raise CapacityError(f"lambda_n limited to n <= {cap}, got n={n}")
    table = extremal_table(family)
    table.ensure(n)
    return int(table.values[n]), table.witness(n)


def lambda_table(family: PatternFamily, n: int, cap: int = LAMBDA_CAP) -> list[int]:
    lambda_n(family, n, cap)
    return [int(v) for v in extremal_table(family).values[: n + 1]]


def _compositions(n: int, m: int) -> Iterator[tuple[int, ...]]:
    if m == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, m - 1):
            yield (first,) + rest


def max_constructions(family: PatternFamily, n: int, dedup: bool = True, cap: int = MAX_CONSTRUCTIONS_CAP) -> list[RGraph]:
    """Every maximum mixing construction on n vertices (up to isomorphism when ``dedup``).

    All compositions and bases are scanned; recursion only enters optimal
    sub-problems, since a maximum construction has maximum parts.
    """
    if n > cap:
        raise CapacityError(f"max_constructions limited to n <= {cap}, got n={n}")
    table = lambda_table(family, n)
    class_lists = [symmetric_classes(P) for P in family.patterns]
    memo: dict[int, list[RGraph]] = {}

    def graphs(k: int) -> list[RGraph]:
        if k in memo:
            return memo[k]
        if table[k] == 0:
            memo[k] = [RGraph(family.r, k, frozenset())]
            return memo[k]
        out: list[RGraph] = []
        for P, classes in zip(family.patterns, class_lists):
            for comp in _compositions(k, P.m):
                if k > 0 and any(comp[j - 1] == k for j in P.R):
                    continue
                # permuting a symmetric class gives an isomorphic graph
                if dedup and any(comp[a - 1] > comp[b - 1] for cls in classes for a, b in zip(cls, cls[1:])):
                    continue
                val = blowup_count(P.E, comp) + sum(table[comp[j - 1]] for j in P.R)
                if val == table[k]:
                    out.extend(_assemble(P, comp, graphs))
        if dedup:
            seen = {}
            for g in out:
                seen.setdefault(canonical_form(g, limit=cap), g)
            out = list(seen.values())
        memo[k] = out
        return out

    return graphs(n)


def _assemble(P: Pattern, comp, graphs) -> Iterator[RGraph]:
    base = blowup(P.E, comp, P.r)
    rec = sorted(P.R)
    options = [graphs(comp[j - 1]) for j in rec]
    for pick in itertools.product(*options):
        edges = set(base.graph.edges)
        for j, sub in zip(rec, pick):
            off = base.parts[j - 1].start
            edges.update(tuple(v + off for v in e) for e in sub.edges)
        yield RGraph(P.r, sum(comp), frozenset(edges))


# --------------------------------------------------------- limit density


def limit_density(family: PatternFamily, recipe: RecipeTree) -> float:
    """Limit edge density of a ratio-mode recipe.

    A node's density is lambda_E(x) + sum over recursive j of x_j^r times the
    child's density; self-similar children make this a linear fixed point.
    """
    validate_recipe(family, recipe, "ratios")
    if recipe.self_similar:
        raise DomainError("the root of a recipe cannot be a self-similar marker")
    return _density(family, recipe)


def _density(family, node: RecipeTree) -> float:
    if node.is_empty:
        return 0.0
    P = family[node.base]
    x = np.asarray(node.parts, dtype=float)
    known = lagrange_poly(P, x)
    loop = 0.0
    for j in P.R:
        child = node.children.get(j)
        w = x[j - 1] ** P.r
        if child is None or child.is_empty:
            continue
        if child.self_similar:
            loop += w
        else:
            known += w * _density(family, child)
    if loop >= 1.0:
        raise DomainError("self-similar weights sum to at least 1; no finite fixed point")
    return known / (1.0 - loop)


# ------------------------------------------------------ subconstructions


def strip_isolated(F: RGraph) -> RGraph:
    used = sorted({v for e in F.edges for v in e})
    return F if len(used) == F.n else induced_subgraph(F, used)


class SubconstructionSearch:
    """Decides whether graphs embed into some mixing construction on the same vertex set.

    Answers are memoised on canonical forms.  Isolated vertices never matter,
    so they are dropped before the search.
    """

    def __init__(self, family: PatternFamily, cap: int = SUBCONSTRUCTION_CAP):
        self.family = family
        self.cap = cap
        self.memo: dict[tuple, bool] = {}
        self.classes = [symmetric_classes(P) for P in family.patterns]
        self._lock = threading.Lock()

    def __call__(self, F: RGraph) -> bool:
        if F.r != self.family.r:
            raise DomainError(f"graph uniformity {F.r} differs from family uniformity {self.family.r}")
        if F.n > self.cap:
            raise CapacityError(f"is_subconstruction limited to v(F) <= {self.cap}, got {F.n}")
        F = strip_isolated(F)
        if not F.edges:
            return True
        key = canonical_form(F, limit=max(self.cap, F.n))
        with self._lock:
            if key in self.memo:
                return self.memo[key]
        G = from_canonical(key)
        answer = any(self._fits(P, cls, G) for P, cls in zip(self.family.patterns, self.classes))
        with self._lock:
            self.memo[key] = answer
        return answer

    def _fits(self, P: Pattern, classes, F: RGraph) -> bool:
        n, r, m = F.n, F.r, P.m
        deg = [0] * n
        for e in F.edges:
            for v in e:
                deg[v] += 1
        order = sorted(range(n), key=lambda v: (-deg[v], v))
        pos = {v: i for i, v in enumerate(order)}
        closing: list[list] = [[] for _ in range(n)]
        for e in F.edges:
            closing[max(pos[v] for v in e)].append(e)
        # a member of a symmetric class may only be opened after the one before it
        before = [-1] * m
        for cls in classes:
            for a, b in zip(cls, cls[1:]):
                before[b - 1] = a - 1
        rec = [j + 1 in P.R for j in range(m)]
        part = [-1] * n
        size = [0] * m

        def finish() -> bool:
            if any(rec[j] and size[j] == n for j in range(m)):
                return False
            inner: dict[int, list] = {}
            for e in F.edges:
                prof = [0] * m
                for v in e:
                    prof[part[v]] += 1
                if tuple(prof) in P.E:
                    continue
                inner.setdefault(part[e[0]], []).append(e)
            for j, es in inner.items():
                verts = [v for v in range(n) if part[v] == j]
                sub = induced_subgraph(RGraph(r, n, frozenset(es)), verts)
                if not self(sub):
                    return False
            return True

        def place(i: int) -> bool:
            if i == n:
                return finish()
            v = order[i]
            for j in range(m):
                if before[j] >= 0 and size[before[j]] == 0:
                    continue
                part[v] = j
                size[j] += 1
                good = True
                for e in closing[i]:
                    prof = [0] * m
                    for u in e:
                        prof[part[u]] += 1
                    if tuple(prof) in P.E:
                        continue
                    if not (prof[j] == r and rec[j]):
                        good = False
                        break
                if good and place(i + 1):
                    return True
                size[j] -= 1
                part[v] = -1
            return False

        return place(0)


_searches: dict[tuple, SubconstructionSearch] = {}


def subconstruction_search(family: PatternFamily, cap: int = SUBCONSTRUCTION_CAP) -> SubconstructionSearch:
    key = (family.key, cap)
    if key not in _searches:
        _searches[key] = SubconstructionSearch(family, cap)
    return _searches[key]


def is_subconstruction(F: RGraph, family: PatternFamily, cap: int = SUBCONSTRUCTION_CAP) -> bool:
    return subconstruction_search(family, cap)(F)


def graph_classes(r: int, v: int) -> list[RGraph]:
    """All r-graphs on exactly v vertices up to isomorphism, by one-edge augmentation."""
    all_edges = list(itertools.combinations(range(v), r))
    level = {canonical_form(RGraph(r, v, frozenset()))}
    found = list(level)
    while level:
        nxt = set()
        for key in level:
            present = set(key[2])
            for e in all_edges:
                if e not in present:
                    nxt.add(canonical_form(RGraph(r, v, frozenset(present | {e}))))
        found.extend(sorted(nxt))
        level = nxt
    return [from_canonical(k) for k in found]


def forbidden_family(family: PatternFamily, M: int, cap: int | None = None) -> list[RGraph]:
    """Graphs on at most M vertices, without isolated vertices, that are not subconstructions.

    One representative per isomorphism class, ordered by vertex count, edge
    count, then canonical edge list.
    """
    r = family.r
    limit = cap if cap is not None else FORBIDDEN_CAPS.get(r, r + 2)
    if M > limit:
        raise CapacityError(f"forbidden_family limited to M <= {limit} for r={r}, got M={M}")
    search = subconstruction_search(family, max(SUBCONSTRUCTION_CAP, M))
    out = []
    for v in range(r, M + 1):
        for G in graph_classes(r, v):
            if len({u for e in G.edges for u in e}) != v:
                continue
            if not search(G):
                out.append(G)
    return out


def optimal_compositions(family: PatternFamily, n: int, cap: int = LAMBDA_CAP) -> list[tuple[str, tuple[int, ...]]]:
    """Every (base id, composition) pair attaining Lambda(n), one per symmetry orbit."""
    value, _ = lambda_n(family, n, cap)
    table = extremal_table(family)
    binom = np.array([[comb(v, k) for k in range(family.r + 1)] for v in range(n + 1)], np.int64)
    out = []
    if value == 0:
        return out
    for pid, arr in zip(family.ids, table.arrays):
        val, count = _dp.best_compositions(
            n, arr.m, arr.idx, arr.mul, arr.nterms, arr.rec, arr.dom_ptr, arr.dom_idx, binom, table.values, arr.ties
        )
        if val == value:
            if count > len(arr.ties):
                raise CapacityError(f"more than {len(arr.ties)} tied optimal compositions at n={n}")
            reps = sorted({arr.least_in_orbit([int(c) for c in row]) for row in arr.ties[:count]})
            out.extend((pid, comp) for comp in reps)
    return out


def _apportion(ratios: Sequence[float], n: int) -> list[int]:
    # largest remainder rounding; ties to the lower index
    raw = [p * n for p in ratios]
    sizes = [int(v) for v in raw]
    order = sorted(range(len(raw)), key=lambda j: (-(raw[j] - sizes[j]), j))
    for j in order[: n - sum(sizes)]:
        sizes[j] += 1
    return sizes


def realize(family: PatternFamily, recipe: RecipeTree, n: int) -> RecipeTree:
    """Exact-size recipe on n vertices following the ratios of a ratio-mode recipe.

    Self-similar children repeat the enclosing node; recursion stops once a
    part has fewer than r vertices or would hold the whole node.
    """
    validate_recipe(family, recipe, "ratios")
    return _realize(family, recipe, recipe, n)


def _realize(family, node: RecipeTree, parent: RecipeTree, n: int) -> RecipeTree:
    if node.self_similar:
        node = parent
    if node.is_empty or n < family.r:
        return RecipeTree.empty()
    P = family[node.base]
    sizes = _apportion(node.parts, n)
    children = {}
    for j, child in node.children.items():
        k = sizes[j - 1]
        if k >= family.r and k < n and not child.is_empty:
            sub = _realize(family, child, node, k)
            if not sub.is_empty:
                children[j] = sub
    return RecipeTree(node.base, "sizes", tuple(sizes), children)
