"""End-to-end checks of the nine acceptance criteria, one PASS/FAIL line each."""

import itertools
import math
import time
from functools import lru_cache
from math import comb

import numpy as np

from hypermix.feasible import (
    hausdorff_dimension,
    ifs_maps,
    limit_shadow_density,
    open_set_check,
    optimal_recipe,
    shadow_pair_count,
)
from hypermix.hypercore import complete
from hypermix.lagrange import LagrangePolynomial, pattern_lagrangian
from hypermix.mixing import (
    PatternFamily,
    RecipeTree,
    forbidden_family,
    is_subconstruction,
    lambda_n,
    lambda_table,
    optimal_compositions,
    realize,
)
from hypermix.pattern import B53, K53, bipartite, blowup_count, from_sts
from hypermix.sts import fano, pattern_from_sts, prop22_check, sts_generate, sts_validate

SQRT7 = math.sqrt(7)
LAM = 3 * (SQRT7 - 2) / 4
RHO = ((SQRT7 - 2) / 3) ** 2
A = (6 - SQRT7) / 4
B = (22 - 3 * SQRT7) / 16


def canonical_sort(x):
    # the recursive coordinate stays first; the exchangeable rest is sorted
    return [x[0]] + sorted(x[1:], reverse=True)


def test_criterion_1_lagrangian_fixed_point(acceptance):
    details, ok = [], True
    for P in (K53(), B53()):
        start = time.perf_counter()
        rep = pattern_lagrangian(P)
        elapsed = time.perf_counter() - start
        err = abs(rep.lam - LAM)
        ok &= err <= 1e-6 and elapsed < 10
        details.append(f"{P.name} err={err:.1e} time={elapsed:.1f}s")
    acceptance(1, ok, "; ".join(details))


def test_criterion_2_optimal_vectors(acceptance):
    x1, x2, x3 = (SQRT7 - 2) / 3, (5 - SQRT7) / 12, (5 - SQRT7) / 24
    expected = {"K53": [x1] + [x2] * 4, "B53": [x1, x2, x2, x3, x3, x3, x3]}
    details, ok = [], True
    for P in (K53(), B53()):
        rep = pattern_lagrangian(P)
        dev = max(abs(a - b) for a, b in zip(canonical_sort(rep.vector.coords), expected[P.name]))
        ok &= dev <= 1e-5 and rep.kkt_residual <= 1e-6
        details.append(f"{P.name} dev={dev:.1e} kkt={rep.kkt_residual:.1e}")
    acceptance(2, ok, "; ".join(details))


def _compositions(n, m):
    for cut in itertools.combinations(range(n + m - 1), m - 1):
        b = (-1,) + cut + (n + m - 1,)
        yield tuple(b[i + 1] - b[i] - 1 for i in range(m))


def _naive_k53(n):
    P = K53()

    @lru_cache(maxsize=None)
    def outside(n, k):
        return max(blowup_count(P.E, (k,) + rest) for rest in _compositions(n - k, 4))

    def rec(n):
        if n < 3:
            return 0
        return max(outside(n, k) + rec(k) for k in range(n))

    return rec(n)


def test_criterion_3_exact_counts(acceptance):
    bip = lambda_table(PatternFamily.of("bipartite"), 40) == [n * n // 4 for n in range(41)]
    fam = PatternFamily.of("K53")
    oracle = lambda_table(fam, 15) == [_naive_k53(n) for n in range(16)]
    pairs = bad = 0
    for f in (PatternFamily.of("bipartite"), fam, PatternFamily.of("B53"), PatternFamily.of("K53", "B53")):
        table = lambda_table(f, 40)
        dens = {s: table[s] / comb(s, f.r) for s in range(f.r, 41)}
        for s, t in itertools.combinations_with_replacement(range(f.r, 41), 2):
            pairs += 1
            bad += dens[s] < dens[t] - 1e-15
    ok = bip and oracle and bad == 0
    acceptance(3, ok, f"bipartite floor(n^2/4) n<=40: {bip}; naive oracle n<=15: {oracle}; monotone pairs {pairs - bad}/{pairs}")


def test_criterion_4_forbidden_membership(acceptance):
    start = time.perf_counter()
    P1 = PatternFamily.of("K53")
    k6 = is_subconstruction(complete(3, 6), P1)
    k4 = is_subconstruction(complete(3, 4), P1)
    triangle = complete(2, 3) in forbidden_family(PatternFamily.of("bipartite"), 3)
    elapsed = time.perf_counter() - start
    ok = (not k6) and k4 and triangle and elapsed < 60
    acceptance(4, ok, f"K6^3 member={k6}; K4^3 member={k4}; triangle forbidden={triangle}; time={elapsed:.1f}s")


def test_criterion_5_ifs(acceptance):
    fam = PatternFamily.of("K53", "B53")
    f1, f2 = ifs_maps(fam)
    coeff_err = max(
        abs(f1.c - (13 * SQRT7 - 20) / 18),
        abs(f2.c - (47 * SQRT7 - 64) / 72),
        abs(f1.rho - RHO),
        abs(f2.rho - RHO),
    )
    fixed_err = max(abs(f1.fixed_point - A), abs(f2.fixed_point - B))
    osc = open_set_check([f1, f2], (A, B))
    ok = coeff_err <= 1e-9 and fixed_err <= 1e-9 and osc
    acceptance(5, ok, f"coefficient err={coeff_err:.1e}; fixed point err={fixed_err:.1e}; open set={osc}")


def test_criterion_6_hausdorff(acceptance):
    err = abs(hausdorff_dimension([RHO, RHO]) - math.log(2) / math.log(4 * SQRT7 + 11))
    cantor = abs(hausdorff_dimension([1 / 3, 1 / 3]) - math.log(2) / math.log(3))
    ok = err <= 1e-6 and cantor <= 1e-9
    acceptance(6, ok, f"dimension err={err:.1e}; middle thirds err={cantor:.1e}")


def test_criterion_7_sts_suite(acceptance):
    start = time.perf_counter()
    orders = [t for t in range(3, 100) if t % 6 in (1, 3)]
    valid = all(sts_validate(sts_generate(t)) for t in orders)
    lam_err = unif_err = 0.0
    for t in (55, 61):
        rep = pattern_lagrangian(pattern_from_sts(sts_generate(t)))
        lam_err = max(lam_err, abs(rep.lam - (t - 3) / (t + 1)))
        unif_err = max(unif_err, float(np.max(np.abs(rep.vector.array() - 1 / t))))
    D = sts_generate(55)
    poly = LagrangePolynomial.of(pattern_from_sts(D))
    rng = np.random.default_rng(55)
    held = sum(prop22_check(D, x, poly).holds for x in rng.dirichlet(np.ones(55), size=1000))
    elapsed = time.perf_counter() - start
    ok = valid and lam_err <= 1e-6 and unif_err <= 1e-4 and held == 1000 and elapsed < 300
    acceptance(
        7,
        ok,
        f"{len(orders)} orders valid={valid}; lambda err={lam_err:.1e}; uniform dev={unif_err:.1e}; "
        f"inequality {held}/1000; time={elapsed:.1f}s",
    )


def test_criterion_8_balanced_bottoms(acceptance):
    fam = PatternFamily.of(from_sts(fano()))
    checked = unbalanced = 0
    for n in range(50, 61):
        witness = lambda_n(fam, n)[1]
        comps = [witness.parts] + [c for _, c in optimal_compositions(fam, n)]
        for comp in comps:
            checked += 1
            unbalanced += max(comp) - min(comp) > 1
    acceptance(8, unbalanced == 0, f"{checked} optimal bottom partitions for n=50..60, unbalanced={unbalanced}")


def _brute_count(P, sizes):
    part = [j for j, s in enumerate(sizes) for _ in range(s)]
    count = 0
    for e in itertools.combinations(range(len(part)), P.r):
        prof = [0] * P.m
        for v in e:
            prof[part[v]] += 1
        count += tuple(prof) in P.E
    return count


def test_criterion_9_property_suites(acceptance):
    rng = np.random.default_rng(9)
    library = [bipartite(), K53(), B53(), from_sts(fano())]
    grad_err = 0.0
    lipschitz_bad = 0
    h = 1e-6
    for P in library:
        poly = LagrangePolynomial.of(P)
        for x in rng.dirichlet(np.ones(P.m), size=100):
            fd = np.array([(poly.value(x + h * e) - poly.value(x - h * e)) / (2 * h) for e in np.eye(P.m)])
            grad_err = max(grad_err, float(np.max(np.abs(poly.grad(x) - fd))))
        for u, x in zip(rng.dirichlet(np.ones(P.m), size=100), rng.dirichlet(np.ones(P.m), size=100)):
            bound = P.r * P.m * np.max(np.abs(u - x)) + 1e-9
            lipschitz_bad += bool(np.any(np.abs(poly.grad(u) - poly.grad(x)) > bound))
    blowup_cases = blowup_bad = 0
    for P in (bipartite(), K53()):
        for total in range(13):
            for sizes in _compositions(total, P.m):
                blowup_cases += 1
                blowup_bad += blowup_count(P.E, sizes) != _brute_count(P, sizes)
    fam = PatternFamily.of("K53", "B53")
    shadow_devs = {}
    for pid, limit in (("K53", A), ("B53", B)):
        base = optimal_recipe(fam[pid])
        recipe = RecipeTree(pid, base.mode, base.parts, base.children)
        assert abs(limit_shadow_density(fam, recipe) - limit) < 1e-9
        for n in (200, 400):
            shadow_devs[pid, n] = abs(shadow_pair_count(fam, realize(fam, recipe, n)) / comb(n, 2) - limit)
    shadow_ok = all(shadow_devs[p, 400] < min(0.02, shadow_devs[p, 200]) for p in ("K53", "B53"))
    ok = grad_err <= 1e-6 and lipschitz_bad == 0 and blowup_bad == 0 and shadow_ok
    worst400 = max(shadow_devs[p, 400] for p in ("K53", "B53"))
    acceptance(
        9,
        ok,
        f"gradient fd err={grad_err:.1e}; Lipschitz violations={lipschitz_bad}; "
        f"blowup mismatches={blowup_bad}/{blowup_cases}; shadow deviation at n=400={worst400:.4f}",
    )
