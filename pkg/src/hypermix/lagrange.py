"""Lagrange polynomials of multiset collections and pattern Lagrangians.

The pattern Lagrangian is computed as the fixed point of

    lam -> max over the punctured simplex of  lambda_E(x) + lam * sum_{j in R} x_j^r

with each inner maximisation done by multi-start projected gradient ascent.
"""

from __future__ import annotations

import itertools
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import factorial
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .pattern import Pattern, lagrangian_is_one, remove_index

log = logging.getLogger(__name__)

DENSE_LIMIT = 2_000_000
VERTEX_GUARD = 1e-3
KKT_TOL = 1e-6
TIE_TOL = 1e-12


@dataclass(frozen=True)
class SimplexVector:
    coords: tuple[float, ...]
    tolerance: float = 1e-9

    def __post_init__(self):
        if any(c < -self.tolerance for c in self.coords):
            raise DomainError(f"negative coordinate in {self.coords}")
        if abs(sum(self.coords) - 1.0) > max(self.tolerance, 1e-12 * len(self.coords)):
            raise DomainError(f"coordinates sum to {sum(self.coords)}, not 1")

    @classmethod
    def of(cls, x: Iterable[float], tolerance: float = 1e-9) -> "SimplexVector":
        return cls(tuple(float(c) for c in x), tolerance)

    @classmethod
    def uniform(cls, m: int) -> "SimplexVector":
        return cls((1.0 / m,) * m)

    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)

    def is_interior(self) -> bool:
        """Membership in the punctured simplex (no standard basis vector)."""
        return max(self.coords) < 1.0 - self.tolerance

    def __len__(self):
        return len(self.coords)


class LagrangePolynomial:
    """lambda_E(x) = r! * sum_{D in E} prod_i x_i^{D(i)} / D(i)!, with exact gradient.

    Equivalently the sum over ordered r-tuples whose multiset lies in E, which
    is how the dense tensor form is filled.
    """

    def __init__(self, E: Iterable[Sequence[int]], m: int, r: int):
        self.m, self.r = m, r
        E = [tuple(D) for D in E]
        for D in E:
            if len(D) != m or sum(D) != r:
                raise DomainError(f"multiset {D} does not fit m={m}, r={r}")
        self.size = len(E)
        self.dense = m**r <= DENSE_LIMIT
        if self.dense:
            T = np.zeros((m,) * r)
            for D in E:
                idx = [i for i, c in enumerate(D) for _ in range(c)]
                for t in set(itertools.permutations(idx)):
                    T[t] = 1.0
            self.T = T
        else:
            self.idx = np.array([[i for i, c in enumerate(D) for _ in range(c)] for D in E], dtype=np.intp).reshape(-1, r)
            self.coef = np.array([factorial(r) / np.prod([factorial(c) for c in D]) for D in E])

    @classmethod
    def of(cls, P: Pattern) -> "LagrangePolynomial":
        return cls(P.E, P.m, P.r)

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.m,):
            raise DomainError(f"expected a vector of length {self.m}, got shape {x.shape}")
        return x

    def _partial(self, x: np.ndarray) -> np.ndarray:
        # contraction with r-1 copies of x; its dot with x is the value
        v = self.T
        for _ in range(self.r - 1):
            v = v @ x
        return v

    def value(self, x) -> float:
        x = self._check(x)
        if self.size == 0:
            return 0.0
        if self.dense:
            return float(self._partial(x) @ x)
        return float(self.coef @ np.prod(x[self.idx], axis=1))

    def grad(self, x) -> np.ndarray:
        x = self._check(x)
        if self.size == 0:
            return np.zeros(self.m)
        if self.dense:
            return self.r * self._partial(x)
        vals = x[self.idx]
        g = np.zeros(self.m)
        for k in range(self.r):
            others = np.prod(np.delete(vals, k, axis=1), axis=1) * self.coef
            g += np.bincount(self.idx[:, k], weights=others, minlength=self.m)
        return g


def _as_poly(E, x) -> LagrangePolynomial:
    if isinstance(E, LagrangePolynomial):
        return E
    if isinstance(E, Pattern):
        return LagrangePolynomial.of(E)
    E = [tuple(D) for D in E]
    if not E:
        raise DomainError("an empty multiset collection needs a Pattern to fix m and r")
    return LagrangePolynomial(E, len(E[0]), sum(E[0]))


def lagrange_poly(E, x) -> float:
    """Value of the Lagrange polynomial of ``E`` (a Pattern or multiplicity vectors) at ``x``."""
    coords = x.coords if isinstance(x, SimplexVector) else x
    return _as_poly(E, coords).value(coords)


def lagrange_grad(E, x) -> np.ndarray:
    coords = x.coords if isinstance(x, SimplexVector) else x
    return _as_poly(E, coords).grad(coords)


def project_simplex(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort and threshold)."""
    y = np.asarray(y, dtype=float)
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, y.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(y - theta, 0.0)


class Objective:
    """f(x) = lambda_E(x) + lam * sum_{j in R} x_j^r."""

    def __init__(self, P: Pattern, lam: float, poly: LagrangePolynomial | None = None):
        self.poly = poly or LagrangePolynomial.of(P)
        self.r = P.r
        self.lam = float(lam)
        self.rec = np.zeros(P.m, dtype=bool)
        self.rec[[j - 1 for j in P.R]] = True

    def value(self, x: np.ndarray) -> float:
        return self.poly.value(x) + self.lam * float(np.sum(x[self.rec] ** self.r))

    def grad(self, x: np.ndarray) -> np.ndarray:
        g = self.poly.grad(x)
        g[self.rec] += self.lam * self.r * x[self.rec] ** (self.r - 1)
        return g


@dataclass
class AscentRun:
    x: np.ndarray
    value: float
    converged: bool
    degenerate: bool
    iterations: int


def _ascend(f: Objective, x0: np.ndarray, rng: np.random.Generator, max_iter: int, max_restarts: int = 3) -> AscentRun:
    x = project_simplex(x0)
    fx = f.value(x)
    restarts = 0
    it = 0
    stalls = 0
    while it < max_iter:
        it += 1
        g = f.grad(x)
        step = 1.0
        while True:
            y = project_simplex(x + step * g)
            fy = f.value(y)
            if fy > fx + 1e-4 * float(g @ (y - x)) or step < 1e-20:
                break
            step *= 0.5
        moved = float(np.max(np.abs(y - x)))
        if fy < fx:
            y, fy, moved = x, fx, 0.0
        gain = fy - fx
        x, fx = y, fy
        if x.size > 1 and x.max() > 1.0 - VERTEX_GUARD:
            if restarts >= max_restarts:
                return AscentRun(x, fx, False, True, it)
            restarts += 1
            x = rng.dirichlet(np.ones(x.size))
            fx = f.value(x)
            continue
        if moved < 1e-15 or gain <= 1e-16 * max(1.0, abs(fx)):
            stalls += 1
            if stalls >= 3:
                return AscentRun(x, fx, True, False, it)
        else:
            stalls = 0
    return AscentRun(x, fx, False, False, it)


@dataclass
class MaximizeResult:
    x: SimplexVector
    value: float
    converged: bool
    degenerate: bool
    runs: int
    degenerate_runs: int


def maximize_f(
    P: Pattern,
    lam: float,
    starts: int = 32,
    seed: int = 0,
    *,
    max_iter: int = 100_000,
    extra_starts: Sequence[Sequence[float]] = (),
    threads: int = 1,
    poly: LagrangePolynomial | None = None,
) -> MaximizeResult:
    """Maximise lambda_E(x) + lam * sum_{j in R} x_j^r over the punctured simplex.

    The uniform vector is always a start; ``starts`` further starts are drawn
    uniformly from the simplex, each from its own child of ``seed`` so the
    result does not depend on execution order.  Runs that end next to a
    standard basis vector are degenerate and never returned as optimal while
    a proper run exists.
    """
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lam must lie in [0, 1], got {lam}")
    if P.m == 1:
        x = np.ones(1)
        f = Objective(P, lam, poly)
        return MaximizeResult(SimplexVector.of(x), f.value(x), True, False, 1, 0)
    f = Objective(P, lam, poly)
    extra = [np.asarray(s, dtype=float) for s in extra_starts]
    children = np.random.SeedSequence(seed).spawn(starts + 1 + len(extra))
    rngs = [np.random.default_rng(c) for c in children]
    # random starts own the first children, so their points ignore extra_starts
    inits = [rng.dirichlet(np.ones(P.m)) for rng in rngs[:starts]]
    inits += [np.full(P.m, 1.0 / P.m)] + extra

    def job(i):
        return _ascend(f, inits[i], rngs[i], max_iter)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            runs = list(pool.map(job, range(len(inits))))
    else:
        runs = [job(i) for i in range(len(inits))]

    proper = [run for run in runs if not run.degenerate]
    pool_ = proper or runs
    best_value = max(run.value for run in pool_)
    tied = [run for run in pool_ if run.value >= best_value - TIE_TOL]
    best = min(tied, key=lambda run: tuple(run.x))
    x = np.maximum(best.x, 0.0)
    x /= x.sum()
    return MaximizeResult(
        SimplexVector.of(x),
        best.value,
        best.converged,
        not proper,
        len(runs),
        len(runs) - len(proper),
    )


@dataclass
class OptimalVectorReport:
    pattern: str
    lam: float
    vector: SimplexVector
    kkt_residual: float
    min_coordinate: float
    converged: bool
    degenerate: bool
    seed: int
    history: list[float] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.converged and not self.degenerate and self.kkt_residual <= KKT_TOL and self.min_coordinate > 0

    def to_json(self) -> dict:
        return {
            "pattern": self.pattern,
            "lambda": self.lam,
            "vector": list(self.vector.coords),
            "kkt_residual": self.kkt_residual,
            "min_coordinate": self.min_coordinate,
            "converged": self.converged,
            "degenerate": self.degenerate,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, data: dict | str) -> "OptimalVectorReport":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(
            data.get("pattern", ""),
            float(data["lambda"]),
            SimplexVector.of(data["vector"]),
            float(data["kkt_residual"]),
            float(data["min_coordinate"]),
            bool(data["converged"]),
            bool(data["degenerate"]),
            int(data["seed"]),
        )


def kkt_residual(P: Pattern, x, lam: float, poly: LagrangePolynomial | None = None) -> float:
    """max_j |df/dx_j(x) - r * lam| for f = lambda_E + lam * sum_R x_j^r."""
    g = Objective(P, lam, poly).grad(np.asarray(x, dtype=float))
    return float(np.max(np.abs(g - P.r * lam)))


def polish(P: Pattern, x, lam: float, poly: LagrangePolynomial | None = None, steps: int = 20):
    """Newton refinement of a stationary point of the fixed-point system.

    Unknowns are the support coordinates of ``x`` and ``lam``; equations are
    df/dx_j = r * lam on the support and sum(x) = 1.  The Jacobian of the
    gradient comes from central differences.  Returns ``(x, lam)``, unchanged
    when Newton does not reduce the residual.
    """
    poly = poly or LagrangePolynomial.of(P)
    x = np.asarray(x, dtype=float).copy()
    support = np.nonzero(x > 1e-6)[0]
    rec = np.zeros(P.m, dtype=bool)
    rec[[j - 1 for j in P.R]] = True
    r = P.r

    def residual(z):
        y = np.zeros(P.m)
        y[support] = z[:-1]
        lam_ = z[-1]
        g = poly.grad(y)
        g[rec] += lam_ * r * y[rec] ** (r - 1)
        return np.append(g[support] - r * lam_, y.sum() - 1.0)

    z = np.append(x[support], lam)
    res = residual(z)
    norm = np.max(np.abs(res))
    h = 1e-6
    for _ in range(steps):
        if norm < 1e-15:
            break
        J = np.empty((z.size, z.size))
        for k in range(z.size):
            e = np.zeros(z.size)
            e[k] = h
            J[:, k] = (residual(z + e) - residual(z - e)) / (2 * h)
        try:
            dz = np.linalg.solve(J, -res)
        except np.linalg.LinAlgError:
            break
        z_new = z + dz
        if np.any(z_new[:-1] < 0):
            break
        res_new = residual(z_new)
        norm_new = np.max(np.abs(res_new))
        if norm_new >= norm:
            break
        z, res, norm = z_new, res_new, norm_new
    y = np.zeros(P.m)
    y[support] = z[:-1]
    return y, float(z[-1])


def _unit_vector_report(P: Pattern, seed: int) -> OptimalVectorReport:
    # witness index for the lambda = 1 characterisation
    witness = 0
    for D in sorted(P.E):
        if max(D) == P.r:
            witness = D.index(P.r)
            break
        hits = [i for i in P.R if D[i - 1] == P.r - 1]
        if hits:
            witness = hits[0] - 1
            break
    x = np.zeros(P.m)
    x[witness] = 1.0
    return OptimalVectorReport(
        P.name, 1.0, SimplexVector.of(x), kkt_residual(P, x, 1.0), float(x.min()), True, False, seed, [1.0]
    )


def pattern_lagrangian(
    P: Pattern,
    starts: int = 32,
    seed: int = 0,
    *,
    tol: float = 1e-12,
    max_rounds: int = 200,
    threads: int = 1,
    polish_vector: bool = True,
) -> OptimalVectorReport:
    """lambda_P by the monotone fixed-point iteration, with the optimal vector found."""
    if lagrangian_is_one(P):
        return _unit_vector_report(P, seed)
    poly = LagrangePolynomial.of(P)
    res = maximize_f(P, 0.0, starts, seed, poly=poly, threads=threads)
    lam = res.value
    history = [lam]
    if P.R:
        for _ in range(max_rounds):
            res = maximize_f(P, lam, starts, seed, extra_starts=[res.x.coords], poly=poly, threads=threads)
            new = max(res.value, lam)
            history.append(new)
            if abs(new - lam) < tol:
                lam = new
                break
            lam = new
        else:
            log.warning("fixed-point iteration for %s hit %d rounds", P.name or "pattern", max_rounds)
    x = res.x.array()
    if polish_vector and not res.degenerate and lam > 0:
        y, lam_y = polish(P, x, lam, poly)
        f_y = Objective(P, lam_y, poly).value(y)
        # accept only a consistent fixed point close to the ascent result
        if abs(f_y - lam_y) < 1e-12 and abs(lam_y - lam) < 1e-7 and np.max(np.abs(y - x)) < 1e-5:
            x, lam = y / y.sum(), lam_y
    return OptimalVectorReport(
        P.name,
        lam,
        SimplexVector.of(x),
        kkt_residual(P, x, lam, poly),
        float(x.min()),
        res.converged,
        res.degenerate,
        seed,
        history,
    )


@dataclass
class MinimalityReport:
    minimal: bool
    lam: float
    margins: dict[int, float]


def is_minimal(P: Pattern, tol: float = 1e-6, starts: int = 32, seed: int = 0) -> MinimalityReport:
    """Whether deleting any index strictly lowers the Lagrangian (by more than ``tol``)."""
    lam = pattern_lagrangian(P, starts, seed).lam
    if P.m == 1:
        return MinimalityReport(lam > 0, lam, {})
    margins = {j: lam - pattern_lagrangian(remove_index(P, j), starts, seed).lam for j in range(1, P.m + 1)}
    return MinimalityReport(all(v > tol for v in margins.values()), lam, margins)
