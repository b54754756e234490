"""Patterns (m, E, R), their blowups, and the built-in pattern library.

Pattern indices follow the usual ``[m] = {1, ..., m}`` convention in every
public function (``R``, ``remove_index``, ``link_multiset``...).  Multisets
are multiplicity vectors, so position ``i - 1`` holds the multiplicity of
index ``i``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from math import comb, prod
from typing import Iterable, NamedTuple, Sequence

from .errors import DomainError
from .hypercore import Multiset, RGraph

INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class Pattern:
    r: int
    m: int
    E: frozenset[Multiset]
    R: frozenset[int] = frozenset()
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.m < 1:
            raise DomainError(f"a pattern needs m >= 1, got {self.m}")
        for D in self.E:
            if len(D) != self.m:
                raise DomainError(f"multiset {D} has length {len(D)}, expected m={self.m}")
            if min(D) < 0 or sum(D) != self.r:
                raise DomainError(f"multiset {D} does not have total multiplicity r={self.r}")
        bad = [j for j in self.R if not 1 <= j <= self.m]
        if bad:
            raise DomainError(f"recursive indices {bad} outside 1..{self.m}")

    @classmethod
    def build(cls, r: int, m: int, E: Iterable[Iterable[int]], R: Iterable[int] = (), name: str = "") -> "Pattern":
        """Construct from multiplicity vectors."""
        return cls(r, m, frozenset(tuple(int(c) for c in D) for D in E), frozenset(R), name)

    @classmethod
    def from_sets(cls, r: int, m: int, sets: Iterable[Iterable[int]], R: Iterable[int] = (), name: str = "") -> "Pattern":
        """Construct from multisets written as lists of 1-based indices, e.g. ``[1, 1, 2]``."""
        E = []
        for s in sets:
            D = [0] * m
            for i in s:
                if not 1 <= i <= m:
                    raise DomainError(f"index {i} outside 1..{m}")
                D[i - 1] += 1
            E.append(D)
        return cls.build(r, m, E, R, name)

    def sorted_E(self) -> list[Multiset]:
        # simple sets first in index order, matching the way edge lists are usually written
        return sorted(self.E, reverse=True)

    def as_index_lists(self) -> list[list[int]]:
        return [[i + 1 for i, c in enumerate(D) for _ in range(c)] for D in self.sorted_E()]

    def to_json(self) -> dict:
        return {"r": self.r, "m": self.m, "E": [list(D) for D in self.sorted_E()], "R": sorted(self.R)}

    @classmethod
    def from_json(cls, data: dict | str, name: str = "") -> "Pattern":
        if isinstance(data, str):
            data = json.loads(data)
        return cls.build(int(data["r"]), int(data["m"]), data["E"], data.get("R", ()), name)


class Blowup(NamedTuple):
    graph: RGraph
    edge_count: int
    parts: tuple[range, ...]


def _edge_count(E: Iterable[Multiset], sizes: Sequence[int]) -> int:
    return sum(prod(comb(sizes[j], c) for j, c in enumerate(D) if c) for D in E)


def blowup_count(E: Iterable[Multiset], sizes: Sequence[int]) -> int:
    """Exact number of edges of the blowup, without building it."""
    total = _edge_count(E, sizes)
    if total > INT64_MAX:
        raise OverflowError(f"blowup edge count {total} exceeds the signed 64-bit range")
    return total


def blowup(E: Iterable[Multiset], sizes: Sequence[int], r: int | None = None) -> Blowup:
    """Blow up ``E`` with part sizes ``sizes``; parts are laid out contiguously.

    ``r`` is only needed when ``E`` is empty.
    """
    E = list(E)
    sizes = [int(s) for s in sizes]
    if any(s < 0 for s in sizes):
        raise DomainError(f"part sizes must be nonnegative: {sizes}")
    for D in E:
        if len(D) != len(sizes):
            raise DomainError(f"{len(sizes)} part sizes given for multisets of length {len(D)}")
    if r is None:
        if not E:
            raise DomainError("uniformity r is required when E is empty")
        r = sum(E[0])
    starts = list(itertools.accumulate([0] + sizes))
    parts = tuple(range(starts[j], starts[j + 1]) for j in range(len(sizes)))
    edges = set()
    for D in E:
        choices = [itertools.combinations(parts[j], c) for j, c in enumerate(D) if c]
        for pick in itertools.product(*choices):
            edges.add(tuple(sorted(v for chunk in pick for v in chunk)))
    count = blowup_count(E, sizes)
    return Blowup(RGraph(r, starts[-1], frozenset(edges)), count, parts)


def _check_index(P: Pattern, j: int):
    if not 1 <= j <= P.m:
        raise DomainError(f"index {j} outside 1..{P.m}")


def remove_index(P: Pattern, j: int) -> Pattern:
    """P - j: drop index j and every multiset using it, relabel to [m-1]."""
    _check_index(P, j)
    if P.m == 1:
        raise DomainError("cannot remove the only index of a pattern")
    k = j - 1
    E = [D[:k] + D[k + 1:] for D in P.E if D[k] == 0]
    R = [i if i < j else i - 1 for i in P.R if i != j]
    return Pattern.build(P.r, P.m - 1, E, R, f"{P.name}-{j}" if P.name else "")


def link_multiset(P: Pattern, i: int) -> set[Multiset]:
    """All (r-1)-multisets A with A + {i} in E."""
    _check_index(P, i)
    k = i - 1
    return {D[:k] + (D[k] - 1,) + D[k + 1:] for D in P.E if D[k] > 0}


def lagrangian_is_one(P: Pattern) -> bool:
    """Whether the pattern Lagrangian equals 1 (the two-case characterisation)."""
    for D in P.E:
        if max(D) == P.r:
            return True
        if P.r >= 2:
            for i in P.R:
                if D[i - 1] == P.r - 1:
                    return True
    return False


def uncovered_parts(P: Pattern) -> set[int]:
    """Non-recursive indices j whose part never contains a shadow pair."""
    return {j for j in range(1, P.m + 1) if j not in P.R and all(D[j - 1] < 2 for D in P.E)}


def pair_coverage(P: Pattern) -> dict[tuple[int, int], bool]:
    """For each pair i < j of indices, whether some multiset of E uses both."""
    cover = {pair: False for pair in itertools.combinations(range(1, P.m + 1), 2)}
    for D in P.E:
        support = [i + 1 for i, c in enumerate(D) if c]
        for pair in itertools.combinations(support, 2):
            cover[pair] = True
    return cover


def internally_covered(P: Pattern, j: int) -> bool:
    """Whether pairs inside part j lie in the shadow of the blowup (multiplicity >= 2 at j)."""
    return any(D[j - 1] >= 2 for D in P.E)


def symmetric_classes(P: Pattern) -> list[list[int]]:
    """Classes of indices any two of which can be swapped without changing (E, R).

    Swapping two indices in a class is an automorphism of the pattern, so
    part sizes inside a class are interchangeable.
    """
    def swap(D, a, b):
        D = list(D)
        D[a - 1], D[b - 1] = D[b - 1], D[a - 1]
        return tuple(D)

    classes: list[list[int]] = []
    for j in range(1, P.m + 1):
        for cls in classes:
            a = cls[0]
            if (a in P.R) == (j in P.R) and {swap(D, a, j) for D in P.E} == P.E:
                cls.append(j)
                break
        else:
            classes.append([j])
    return classes


AUTOMORPHISM_LIMIT = 8


def automorphisms(P: Pattern, limit: int = AUTOMORPHISM_LIMIT) -> list[tuple[int, ...]] | None:
    """All index permutations preserving E and R (0-based images), or None when m > limit.

    ``perm[i]`` is the image of position ``i``.  Found by backtracking: a
    partial map is abandoned as soon as a multiset whose support is fully
    mapped lands outside E.
    """
    if P.m > limit:
        return None
    m = P.m
    supports = [(D, [i for i, c in enumerate(D) if c]) for D in P.E]
    rec = [i + 1 in P.R for i in range(m)]
    found = []
    image = [-1] * m
    used = [False] * m

    def consistent(k: int) -> bool:
        for D, sup in supports:
            if sup and sup[-1] == k:
                mapped = [0] * m
                for i in sup:
                    mapped[image[i]] = D[i]
                if tuple(mapped) not in P.E:
                    return False
        return True

    def extend(k: int):
        if k == m:
            found.append(tuple(image))
            return
        for t in range(m):
            if used[t] or rec[t] != rec[k]:
                continue
            image[k] = t
            used[t] = True
            if consistent(k):
                extend(k + 1)
            used[t] = False
        image[k] = -1

    extend(0)
    return found


# ---------------------------------------------------------------- library

def bipartite() -> Pattern:
    return Pattern.from_sets(2, 2, [[1, 2]], (), "bipartite")


def K53() -> Pattern:
    return Pattern.from_sets(3, 5, itertools.combinations(range(1, 6), 3), [1], "K53")


def B53_edges() -> list[tuple[int, int, int]]:
    """Edges of the crossed blowup B_{5,3} on [7]."""
    inner = {1, 2, 3}
    edges = {t for t in itertools.combinations(range(1, 8), 3) if len(inner.intersection(t)) >= 2}
    crossed = [(1, (4, 5), (6, 7)), (2, (4, 6), (5, 7)), (3, (4, 7), (5, 6))]
    for a, left, right in crossed:
        edges.update(tuple(sorted((a, b, c))) for b in left for c in right)
    return sorted(edges)


def B53() -> Pattern:
    return Pattern.from_sets(3, 7, B53_edges(), [1], "B53")


def from_sts(D) -> Pattern:
    """The pattern (t, complement of D, [t]) for a Steiner triple system ``D``.

    ``D`` needs ``t`` and ``triples`` (0-based points).
    """
    t = D.t
    triples = {tuple(sorted(x)) for x in D.triples}
    covered: dict[tuple[int, int], int] = {}
    for tr in triples:
        for pair in itertools.combinations(tr, 2):
            covered[pair] = covered.get(pair, 0) + 1
    if len(covered) != comb(t, 2) or any(c != 1 for c in covered.values()):
        raise DomainError("from_sts needs a Steiner triple system")
    comp = [[a + 1, b + 1, c + 1] for a, b, c in itertools.combinations(range(t), 3) if (a, b, c) not in triples]
    return Pattern.from_sets(3, t, comp, range(1, t + 1), f"P_D(t={t})")


LIBRARY = {"bipartite": bipartite, "K53": K53, "B53": B53}


def library(name: str) -> Pattern:
    try:
        return LIBRARY[name]()
    except KeyError:
        raise DomainError(f"unknown library pattern {name!r}; known: {sorted(LIBRARY)}") from None
