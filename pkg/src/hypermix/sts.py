"""Steiner triple systems, their complement patterns, and the F(D) fingerprint.

Points are ``0..t-1`` internally (like graph vertices).  The text file format
and fingerprint sets ``Q`` use ``1..t``.
"""

from __future__ import annotations

import itertools
import json
import warnings
from collections import defaultdict
from dataclasses import dataclass
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, DomainError
from .pattern import Pattern, from_sts
from .lagrange import LagrangePolynomial, SimplexVector

FINGERPRINT_LIMIT = 19

Triple = tuple[int, int, int]


@dataclass(frozen=True)
class STS:
    t: int
    triples: frozenset[Triple]

    @classmethod
    def of(cls, t: int, triples: Iterable[Iterable[int]]) -> "STS":
        return cls(t, frozenset(tuple(sorted(x)) for x in triples))

    def relabel(self, perm: Sequence[int]) -> "STS":
        return STS.of(self.t, ([perm[a] for a in tr] for tr in self.triples))

    def complement(self) -> list[Triple]:
        return [tr for tr in itertools.combinations(range(self.t), 3) if tr not in self.triples]

    def to_text(self) -> str:
        rows = [str(self.t)] + [" ".join(str(a + 1) for a in tr) for tr in sorted(self.triples)]
        return "\n".join(rows) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "STS":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows or len(rows[0]) != 1:
            raise DomainError("STS file needs a header line with t")
        t = int(rows[0][0])
        triples = []
        for row in rows[1:]:
            pts = [int(a) - 1 for a in row]
            if len(pts) != 3 or len(set(pts)) != 3 or not all(0 <= a < t for a in pts):
                raise DomainError(f"bad STS line {' '.join(row)!r} for t={t}")
            triples.append(pts)
        return cls.of(t, triples)


def fano() -> STS:
    return STS.of(7, [(0, 1, 2), (0, 3, 4), (0, 5, 6), (1, 3, 5), (1, 4, 6), (2, 3, 6), (2, 4, 5)])


def _check_order(t: int):
    if t < 3 or t % 6 not in (1, 3):
        raise DomainError(f"no Steiner triple system of order {t}: need t >= 3 with t mod 6 in {{1, 3}}")


def _bose(t: int) -> list[Triple]:
    # idempotent commutative quasigroup on Z_n, n = 2k+1: a.b = (a+b)/2
    n = t // 3
    half = (n + 1) // 2
    op = lambda a, b: (a + b) * half % n
    pt = lambda x, i: x + n * i
    triples = [(pt(x, 0), pt(x, 1), pt(x, 2)) for x in range(n)]
    for x, y in itertools.combinations(range(n), 2):
        for i in range(3):
            triples.append((pt(x, i), pt(y, i), pt(op(x, y), (i + 1) % 3)))
    return triples


def _skolem(t: int) -> list[Triple]:
    # half-idempotent commutative quasigroup on Z_2n: Cayley table of + relabelled
    n = (t - 1) // 6
    relabel = lambda s: s // 2 if s % 2 == 0 else n + (s - 1) // 2
    op = lambda a, b: relabel((a + b) % (2 * n))
    inf = 6 * n
    pt = lambda x, i: x + 2 * n * i
    triples = [(pt(x, 0), pt(x, 1), pt(x, 2)) for x in range(n)]
    for x in range(n):
        for i in range(3):
            triples.append((inf, pt(x + n, i), pt(x, (i + 1) % 3)))
    for x, y in itertools.combinations(range(2 * n), 2):
        for i in range(3):
            triples.append((pt(x, i), pt(y, i), pt(op(x, y), (i + 1) % 3)))
    return triples


def sts_generate(t: int) -> STS:
    """Bose construction for t = 3 (mod 6), Skolem construction for t = 1 (mod 6)."""
    _check_order(t)
    return STS.of(t, _bose(t) if t % 6 == 3 else _skolem(t))


@dataclass
class Validation:
    valid: bool
    pair: tuple[int, int] | None = None
    count: int = 1
    message: str = ""

    def __bool__(self):
        return self.valid


def sts_validate(D: STS) -> Validation:
    """Check that every pair of points lies in exactly one triple."""
    seen: dict[tuple[int, int], int] = defaultdict(int)
    for tr in D.triples:
        if len(set(tr)) != 3 or not all(0 <= a < D.t for a in tr):
            return Validation(False, None, 0, f"triple {tr} is not a 3-subset of the points")
        for pair in itertools.combinations(tr, 2):
            seen[pair] += 1
    for pair in itertools.combinations(range(D.t), 2):
        c = seen.get(pair, 0)
        if c != 1:
            what = "uncovered" if c == 0 else f"covered {c} times"
            return Validation(False, pair, c, f"pair {pair[0] + 1} {pair[1] + 1} {what}")
    return Validation(True)


def pattern_from_sts(D: STS) -> Pattern:
    return from_sts(D)


@dataclass
class Prop22Result:
    lhs: float
    rhs: float
    holds: bool
    guaranteed: bool

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def prop22_check(D: STS, x, poly: LagrangePolynomial | None = None, tol: float = 1e-12) -> Prop22Result:
    """Quadratic-slack bound lambda(x) <= lambda(uniform) - 2/3 * sum (x_i - 1/t)^2 for the complement.

    ``guaranteed`` is False when t < 55, where the bound is only checked, not promised.
    """
    x = x.array() if isinstance(x, SimplexVector) else np.asarray(x, dtype=float)
    if x.shape != (D.t,):
        raise DomainError(f"x has length {x.size}, expected t={D.t}")
    guaranteed = D.t >= 55
    if not guaranteed:
        warnings.warn(f"the quadratic-slack bound is only guaranteed for t >= 55 (t={D.t})", stacklevel=2)
    if poly is None:
        poly = LagrangePolynomial.of(from_sts(D))
    lhs = poly.value(x)
    u = np.full(D.t, 1.0 / D.t)
    rhs = poly.value(u) - 2.0 / 3.0 * float(np.sum((x - u) ** 2))
    return Prop22Result(lhs, rhs, lhs <= rhs + tol, guaranteed)


# ------------------------------------------------------------ fingerprint

@dataclass(frozen=True)
class FingerprintEntry:
    q: int
    Q: tuple[int, ...]  # 1-based
    t1: int
    t2: int
    t3: int
    p_coeffs: tuple[int, int, int, int]  # ell^3, ell^2, ell, 1

    def to_json(self) -> dict:
        return {"q": self.q, "Q": list(self.Q), "t1": self.t1, "t2": self.t2, "t3": self.t3, "p_coeffs": list(self.p_coeffs)}


@dataclass(frozen=True)
class Fingerprint:
    t: int
    entries: tuple[FingerprintEntry, ...]

    @property
    def key(self) -> tuple[tuple[int, int, int], ...]:
        """F(D) itself: the (t1, t2, t3) sequence over q."""
        return tuple((e.t1, e.t2, e.t3) for e in self.entries)

    def __eq__(self, other):
        return isinstance(other, Fingerprint) and self.t == other.t and self.key == other.key

    def __hash__(self):
        return hash((self.t, self.key))

    def to_json(self) -> dict:
        return {"t": self.t, "entries": [e.to_json() for e in self.entries]}

    @classmethod
    def from_json(cls, data: dict | str) -> "Fingerprint":
        if isinstance(data, str):
            data = json.loads(data)
        entries = tuple(
            FingerprintEntry(e["q"], tuple(e["Q"]), e["t1"], e["t2"], e["t3"], tuple(e["p_coeffs"])) for e in data["entries"]
        )
        return cls(int(data["t"]), entries)


def p_coefficients(size: int, t1: int, t2: int, t3: int) -> tuple[int, int, int, int]:
    """Coefficients of (l+1)^3 t3 + l(l+1)^2 t2 + l^2(l+1) t1 + l^3 (size - t1 - t2 - t3)."""
    return (size, 3 * t3 + 2 * t2 + t1, 3 * t3 + t2, t3)


def intersection_counts(D: STS, Q: Iterable[int]) -> tuple[int, int, int, int]:
    """(t0, t1, t2, t3): complement triples with exactly i points in Q (Q is 0-based)."""
    Q = set(Q)
    counts = [0, 0, 0, 0]
    for tr in D.complement():
        counts[sum(a in Q for a in tr)] += 1
    return tuple(counts)


def fingerprint(D: STS, limit: int = FINGERPRINT_LIMIT) -> Fingerprint:
    """F(D) by exhaustive enumeration of every q-subset Q of the points.

    For each q the chosen Q maximises the blowup size polynomial for all
    large l: its cubic coefficient does not depend on Q, so the comparison is
    lexicographic on the remaining coefficients, and exact ties go to the
    lexicographically smallest Q.
    """
    t = D.t
    if t > limit:
        raise CapacityError(f"exact fingerprint limited to t <= {limit}, got t={t}; a sampled mode is not provided")
    comp = np.array(D.complement(), dtype=np.intp).reshape(-1, 3)
    size = len(comp)
    masks = np.arange(1 << t, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(t)) & 1).astype(np.int8)
    hits = np.zeros((1 << t, 4), dtype=np.int32)
    for a, b, c in comp:
        k = bits[:, a] + bits[:, b] + bits[:, c]
        hits[np.arange(1 << t), k] += 1
    popcount = bits.sum(axis=1)
    entries = []
    for q in range(t):
        best_key, best_Q, best_counts = None, None, None
        for Q in itertools.combinations(range(t), q):
            mask = sum(1 << a for a in Q)
            _, t1, t2, t3 = (int(v) for v in hits[mask])
            c = p_coefficients(size, t1, t2, t3)
            key = c[1:]
            # combinations() yields Q in lexicographic order, so strict > keeps the smallest tie
            if best_key is None or key > best_key:
                best_key, best_Q, best_counts = key, Q, (t1, t2, t3)
        assert popcount[sum(1 << a for a in best_Q)] == q
        t1, t2, t3 = best_counts
        entries.append(FingerprintEntry(q, tuple(a + 1 for a in best_Q), t1, t2, t3, p_coefficients(size, t1, t2, t3)))
    return Fingerprint(t, tuple(entries))


def fingerprint_partition(designs: Sequence[STS]) -> list[list[int]]:
    """Group design positions by equal F(D); groups ordered by first member."""
    if not designs:
        return []
    orders = {D.t for D in designs}
    if len(orders) > 1:
        raise DomainError(f"fingerprint_partition needs one order, got {sorted(orders)}")
    groups: dict[Fingerprint, list[int]] = {}
    for i, D in enumerate(designs):
        groups.setdefault(fingerprint(D), []).append(i)
    return list(groups.values())
