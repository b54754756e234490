"""Finite r-uniform hypergraphs and exact small-scale utilities.

Vertices are the integers ``0..n-1``; isolated vertices count towards ``n``
and therefore towards every density.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from math import comb
from typing import Iterable, Sequence

from .errors import CapacityError, DomainError

Edge = tuple[int, ...]
# An r-multiset over [m] stored as its multiplicity vector (length m).
Multiset = tuple[int, ...]

CANONICAL_LIMIT = 10
EDIT_DISTANCE_LIMIT = 8


@dataclass(frozen=True)
class RGraph:
    r: int
    n: int
    edges: frozenset[Edge]

    def __post_init__(self):
        if self.r < 1:
            raise DomainError(f"uniformity must be positive, got {self.r}")
        if self.n < 0:
            raise DomainError(f"vertex count must be nonnegative, got {self.n}")
        for e in self.edges:
            if len(e) != self.r or len(set(e)) != self.r:
                raise DomainError(f"edge {e} is not a set of {self.r} distinct vertices")
            if tuple(sorted(e)) != e:
                raise DomainError(f"edge {e} is not sorted")
            if e[0] < 0 or e[-1] >= self.n:
                raise DomainError(f"edge {e} has a vertex outside 0..{self.n - 1}")

    @classmethod
    def from_edges(cls, r: int, n: int, edges: Iterable[Iterable[int]]) -> "RGraph":
        return cls(r, n, frozenset(tuple(sorted(e)) for e in edges))

    def __len__(self):
        return len(self.edges)

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)

    def to_json(self) -> dict:
        return {"r": self.r, "n": self.n, "edges": [list(e) for e in self.sorted_edges()]}

    @classmethod
    def from_json(cls, data: dict | str) -> "RGraph":
        if isinstance(data, str):
            data = json.loads(data)
        return cls.from_edges(int(data["r"]), int(data["n"]), data["edges"])

    def to_text(self) -> str:
        lines = [f"{self.r} {self.n}"]
        lines += [" ".join(map(str, e)) for e in self.sorted_edges()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RGraph":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not rows or len(rows[0]) != 2:
            raise DomainError("text graph needs a header line 'r n'")
        r, n = int(rows[0][0]), int(rows[0][1])
        return cls.from_edges(r, n, ([int(v) for v in row] for row in rows[1:]))


def complete(r: int, n: int) -> RGraph:
    return RGraph(r, n, frozenset(itertools.combinations(range(n), r)))


def empty(r: int, n: int) -> RGraph:
    return RGraph(r, n, frozenset())


def shadow(G: RGraph, s: int = 1) -> RGraph:
    """The (r-s)-sets covered by some edge of ``G``."""
    if not 1 <= s <= G.r - 1:
        raise DomainError(f"shadow order s must lie in 1..{G.r - 1}, got {s}")
    k = G.r - s
    sets = {sub for e in G.edges for sub in itertools.combinations(e, k)}
    return RGraph(k, G.n, frozenset(sets))


def densities(G: RGraph) -> tuple[float, float]:
    """Edge density and 1-shadow density, normalised by C(n, r) and C(n, r-1)."""
    if G.n < G.r:
        raise DomainError(f"densities need n >= r (n={G.n}, r={G.r})")
    edge_density = len(G) / comb(G.n, G.r)
    if G.r == 1:
        return edge_density, 1.0 if G.edges else 0.0
    return edge_density, len(shadow(G, 1)) / comb(G.n, G.r - 1)


def degrees(G: RGraph) -> list[int]:
    deg = [0] * G.n
    for e in G.edges:
        for v in e:
            deg[v] += 1
    return deg


def min_degree(G: RGraph) -> int:
    return min(degrees(G), default=0)


def max_degree(G: RGraph) -> int:
    return max(degrees(G), default=0)


def _check_vertex(G: RGraph, v: int):
    if not 0 <= v < G.n:
        raise DomainError(f"vertex {v} outside 0..{G.n - 1}")


def link(G: RGraph, v: int) -> RGraph:
    """The (r-1)-graph of sets that complete ``v`` to an edge (same vertex set)."""
    _check_vertex(G, v)
    return RGraph(G.r - 1, G.n, frozenset(tuple(u for u in e if u != v) for e in G.edges if v in e))


def complement(G: RGraph) -> RGraph:
    return RGraph(G.r, G.n, frozenset(itertools.combinations(range(G.n), G.r)) - G.edges)


def induced_subgraph(G: RGraph, vertices: Sequence[int]) -> RGraph:
    """Subgraph induced on ``vertices``, relabelled to ``0..k-1`` in the given order."""
    for v in vertices:
        _check_vertex(G, v)
    index = {v: i for i, v in enumerate(vertices)}
    if len(index) != len(vertices):
        raise DomainError("induced_subgraph needs distinct vertices")
    keep = [tuple(index[v] for v in e) for e in G.edges if all(v in index for v in e)]
    return RGraph.from_edges(G.r, len(vertices), keep)


def double_vertex(G: RGraph, v: int) -> RGraph:
    """Add a clone ``n`` of ``v`` whose link equals the link of ``v``."""
    _check_vertex(G, v)
    clones = [tuple(G.n if u == v else u for u in e) for e in G.edges if v in e]
    return RGraph.from_edges(G.r, G.n + 1, list(G.edges) + clones)


def embeds(F: RGraph, G: RGraph) -> tuple[bool, dict[int, int] | None]:
    """Search for an injection V(F) -> V(G) mapping edges to edges.

    Returns ``(True, witness)`` or ``(False, None)``.  Vertices of F are
    placed in order of decreasing degree and each edge is checked as soon as
    all its vertices are placed.
    """
    if F.r != G.r:
        raise DomainError(f"uniformity mismatch: {F.r} vs {G.r}")
    if F.n > G.n or len(F) > len(G):
        return False, None
    fdeg = degrees(F)
    gdeg = degrees(G)
    order = sorted(range(F.n), key=lambda v: -fdeg[v])
    position = {v: i for i, v in enumerate(order)}
    # edges of F that become fully placed at step i
    closing: list[list[Edge]] = [[] for _ in order]
    for e in F.edges:
        closing[max(position[v] for v in e)].append(e)
    image: dict[int, int] = {}
    used = [False] * G.n

    def extend(i: int) -> bool:
        if i == len(order):
            return True
        v = order[i]
        for w in range(G.n):
            if used[w] or gdeg[w] < fdeg[v]:
                continue
            image[v] = w
            if all(tuple(sorted(image[u] for u in e)) in G.edges for e in closing[i]):
                used[w] = True
                if extend(i + 1):
                    return True
                used[w] = False
            del image[v]
        return False

    if extend(0):
        return True, dict(sorted(image.items()))
    return False, None


def _incidence(G: RGraph) -> list[list[Edge]]:
    incident: list[list[Edge]] = [[] for _ in range(G.n)]
    for e in G.edges:
        for v in e:
            incident[v].append(e)
    return incident


def _refine_colours(G: RGraph, colour: list[int] | None = None, incident=None) -> list[int]:
    """Isomorphism-invariant vertex colouring by iterated edge signatures.

    Colours are ranks, and refinement keeps the order of existing classes,
    so individualising a vertex before refining stays invariant.
    """
    incident = incident if incident is not None else _incidence(G)
    colour = list(colour) if colour is not None else [0] * G.n
    n_colours = len(set(colour))
    while True:
        sigs = []
        for v in range(G.n):
            around = sorted(tuple(sorted(colour[u] for u in e if u != v)) for e in incident[v])
            sigs.append((colour[v], len(around), tuple(around)))
        ranks = {s: i for i, s in enumerate(sorted(set(sigs)))}
        new = [ranks[s] for s in sigs]
        if len(ranks) == n_colours:
            return new
        colour, n_colours = new, len(ranks)


def _orbit_of(generators: list[list[int]], v: int) -> set[int]:
    orbit, stack = {v}, [v]
    while stack:
        u = stack.pop()
        for g in generators:
            w = g[u]
            if w not in orbit:
                orbit.add(w)
                stack.append(w)
    return orbit


def canonical_form(G: RGraph, limit: int = CANONICAL_LIMIT) -> tuple:
    """Canonical key ``(r, n, edges)``; equal keys iff the graphs are isomorphic.

    Individualisation-refinement: refine an invariant colouring, split the
    first non-singleton class by individualising each of its vertices in
    turn, and take the least relabelled edge list over all discrete leaves.
    Automorphisms found along the way (two leaves with the same edge list)
    prune children in the same orbit.
    """
    if G.n > limit:
        raise CapacityError(f"canonical_form limited to n <= {limit}, got n={G.n}")
    incident = _incidence(G)
    edges = list(G.edges)
    best: list = [None, None]  # certificate, labelling
    generators: list[list[int]] = []

    def certificate(label):
        return tuple(sorted(tuple(sorted(label[v] for v in e)) for e in edges))

    def search(colour: list[int], prefix: list[int]):
        colour = _refine_colours(G, colour, incident)
        cells: dict[int, list[int]] = {}
        for v, c in enumerate(colour):
            cells.setdefault(c, []).append(v)
        target = next((cells[c] for c in sorted(cells) if len(cells[c]) > 1), None)
        if target is None:
            cert = certificate(colour)
            if best[0] is None or cert < best[0]:
                best[0], best[1] = cert, colour
            elif cert == best[0]:
                # colour o best^-1 maps one optimal labelling onto the other
                inverse = {lab: v for v, lab in enumerate(best[1])}
                generators.append([inverse[colour[v]] for v in range(G.n)])
            return
        explored: list[int] = []
        for w in target:
            fixing = [g for g in generators if all(g[p] == p for p in prefix)]
            if any(w in _orbit_of(fixing, u) for u in explored):
                continue
            explored.append(w)
            split = [2 * c + (1 if c == colour[w] and v != w else 0) for v, c in enumerate(colour)]
            search(split, prefix + [w])

    search([0] * G.n, [])
    return (G.r, G.n, best[0] if best[0] is not None else ())


def from_canonical(key: tuple) -> RGraph:
    r, n, edges = key
    return RGraph(r, n, frozenset(edges))


def isomorphic(G: RGraph, H: RGraph) -> bool:
    return G.r == H.r and G.n == H.n and len(G) == len(H) and canonical_form(G) == canonical_form(H)


def edit_distance(G: RGraph, H: RGraph, limit: int = EDIT_DISTANCE_LIMIT) -> int:
    """min over bijections s of |G symmetric-difference s(H)|, by exhaustive search."""
    if G.n != H.n or G.r != H.r:
        raise DomainError("edit_distance needs equal n and r")
    if G.n > limit:
        raise CapacityError(f"edit_distance limited to n <= {limit}, got n={G.n}")
    bit = {e: 1 << i for i, e in enumerate(itertools.combinations(range(G.n), G.r))}
    gmask = sum(bit[e] for e in G.edges)
    hedges = list(H.edges)
    # each edit changes r degrees by one
    dg, dh = sorted(degrees(G)), sorted(degrees(H))
    lower = -(-sum(abs(a - b) for a, b in zip(dg, dh)) // G.r)
    lower = max(lower, abs(len(G) - len(H)))
    best = len(G) + len(H)
    for perm in itertools.permutations(range(G.n)):
        hmask = 0
        for e in hedges:
            hmask |= bit[tuple(sorted(perm[v] for v in e))]
        d = (gmask ^ hmask).bit_count()
        if d < best:
            best = d
            if best <= lower:
                break
    return best


def profile(edge: Iterable[int], part_of: Sequence[int], m: int) -> Multiset:
    """Multiplicity vector counting how many vertices of ``edge`` fall in each part."""
    counts = [0] * m
    for v in edge:
        counts[part_of[v]] += 1
    return tuple(counts)
