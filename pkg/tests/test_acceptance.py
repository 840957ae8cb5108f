"""Acceptance criteria, one PASS/FAIL line each.

All comparisons are exact over Q (tolerance: none); the runtime limit of
each criterion is pinned in LIMITS and measured around the computation.
"""

from __future__ import annotations

import itertools
import time
from fractions import Fraction

import pytest

from ngkfusion.chiral_algebra import Mode, bracket
from ngkfusion.coproduct import add_into, delta2_vec
from ngkfusion.exact_linalg import RatMatrix, kernel_basis
from ngkfusion.hlz_dual import Functional, _all_pairs, crosscheck, dual_action, hlz_fuse
from ngkfusion.hw_modules import (
    find_singular_vectors,
    gram_matrix,
    heisenberg_module,
    level_basis,
    module_of,
    singular_at_levels,
    virasoro_module,
)
from ngkfusion.ngk_fusion import _module_cutoff, depth_quotient, fuse, lmax_floor
from oracles import VermaOracle, staggered_depth_prediction, verma_depth0_dimension

C, H = Fraction(-2), Fraction(-1, 8)
G = ()
LIMITS = {1: 1.0, 2: 5.0, 3: 30.0, 4: 5.0, 5: 10.0, 6: 5.0, 7: 2.0, 8: 300.0, 9: 120.0}


def L(n):
    return Mode("L", n)


@pytest.fixture
def report(capsys):
    def emit(n: int, checks: dict[str, bool], elapsed: float) -> None:
        limit = LIMITS[n]
        checks = dict(checks)
        checks[f"runtime {elapsed:.2f}s < {limit:g}s"] = elapsed < limit
        failed = [k for k, ok in checks.items() if not ok]
        status = "PASS" if not failed else "FAIL"
        detail = "all checks exact" if not failed else "failed: " + "; ".join(failed)
        with capsys.disabled():
            print(f"\nCRITERION {n}: {status} ({detail})")
        assert not failed, failed

    return emit


def _irreducible():
    return singular_at_levels(virasoro_module(C, H), [2])


def test_criterion_1_singular_vector(report):
    t = time.perf_counter()
    verma = virasoro_module(C, H)
    g = gram_matrix(verma, 2)
    ker = kernel_basis(g)
    sv = find_singular_vectors(verma, 2)
    elapsed = time.perf_counter() - t
    oracle = RatMatrix.from_rows(VermaOracle(C, H).gram(2))
    report(1, {
        "Gram = [[-3/2,-3/4],[-3/4,-3/8]]": g == RatMatrix.from_rows([["-3/2", "-3/4"], ["-3/4", "-3/8"]]),
        "Gram matches independent oracle": g == oracle,
        "det = 0": g.det() == 0,
        "kernel is 1-dimensional": len(ker) == 1,
        "kernel = L(-1)^2 - 1/2 L(-2)": [s.as_dict() for s in sv] == [
            {(L(-1), L(-1)): 1, (L(-2),): Fraction(-1, 2)}],
    }, elapsed)


def test_criterion_2_depth_zero(report):
    t = time.perf_counter()
    r = fuse(_irreducible(), _irreducible(), 0, 1)
    elapsed = time.perf_counter() - t
    m = r.l0_matrix
    report(2, {
        "dimension 2": r.dimension == 2,
        "basis (g x g, L(-1)g x g)": r.basis_pairs == ((G, G), ((L(-1),), G)),
        "L0 nonzero": m != RatMatrix.zeros(2, 2),
        "L0 nilpotent": m @ m == RatMatrix.zeros(2, 2),
        "single size-2 block at 0": r.jordan.to_json() == [{"eigenvalue": "0", "block_sizes": [2]}],
    }, elapsed)


def test_criterion_3_depth_one(report):
    t = time.perf_counter()
    m = _irreducible()
    r = fuse(m, m, 1, 1)
    elapsed = time.perf_counter() - t
    literal = {((L(-1),), (L(-1),)): Fraction(2), ((L(-1),), G): Fraction(-1, 2), (G, (L(-1),)): Fraction(1, 2)}
    states = [s.as_dict() for s in r.spurious_states]

    def proportional(a, b):
        if set(a) != set(b):
            return False
        k = next(iter(a))
        return all(a[p] * b[k] == b[p] * a[k] for p in a)

    # the literal combination must also vanish in the quotient
    vanishes = not r._space.reduce(literal)
    report(3, {
        "dimension 3": r.dimension == 3,
        "graded dims {0: 2, 1: 1}": r.graded == {0: 2, 1: 1},
        "eigenvalues {0, 0, 1}": r.jordan.eigenvalues == [0, 0, 1],
        "one spurious state": len(states) == 1,
        "spurious state proportional to 2 LxL - 1/2 Lxg + 1/2 gxL": any(proportional(s, literal) for s in states),
        "that combination vanishes in the quotient": vanishes,
    }, elapsed)


@pytest.mark.parametrize("w", [1, 2, 3])
def test_criterion_4_dual_matrix(report, w):
    m = _irreducible()
    t = time.perf_counter()
    r = hlz_fuse(m, m, 0, w)
    elapsed = time.perf_counter() - t
    w = Fraction(w)
    target = RatMatrix.from_rows([[Fraction(-1, 4), w], [-1 / (16 * w), Fraction(1, 4)]])
    report(4, {
        f"w={w}: matrix [[-1/4, w], [-1/(16w), 1/4]]": r.l0_matrix == target,
        "trace 0": r.l0_matrix.trace() == 0,
        "det 0": r.l0_matrix.det() == 0,
    }, elapsed)


def test_criterion_5_crosscheck(report):
    m = _irreducible()
    t = time.perf_counter()
    checks = {}
    for w in (1, 2):
        ngk = fuse(m, m, 0, w)
        dual = hlz_fuse(m, m, 0, w)
        rep = crosscheck(ngk, dual.l0_matrix, dual.basis_pairs, strict=False)
        checks[f"w={w}: NGK = transpose(HLZ)"] = rep.transpose_match
        checks[f"w={w}: Jordan reports equal"] = rep.jordan_match and ngk.jordan == dual.jordan
        checks[f"w={w}: same basis pairing"] = rep.basis_match
    report(5, checks, time.perf_counter() - t)


def test_criterion_6_unit_law(report):
    t = time.perf_counter()
    vac = singular_at_levels(virasoro_module(C, 0), [1])
    r = fuse(vac, _irreducible(), 0, 1)
    elapsed = time.perf_counter() - t
    dim, h = verma_depth0_dimension(C, H, 4)
    report(6, {
        "dimension 1": r.dimension == 1,
        "matches brute-force depth-0 dimension of M": r.dimension == dim,
        "L0 eigenvalue -1/8": r.jordan.eigenvalues == [Fraction(-1, 8)] == [h],
    }, elapsed)


def test_criterion_7_heisenberg(report):
    t = time.perf_counter()
    r = fuse(heisenberg_module(1), heisenberg_module(2), 0, 1)
    elapsed = time.perf_counter() - t
    a0 = dict(r.zero_mode_matrices)["a"]
    report(7, {
        "dimension <= 1": r.dimension <= 1,
        "a(0) eigenvalue 3": r.dimension == 1 and a0 == RatMatrix.from_rows([[3]]),
    }, elapsed)


@pytest.mark.slow
def test_criterion_8_depth_two(report):
    m = _irreducible()
    t = time.perf_counter()
    floor = lmax_floor(m, m, 2)
    a = fuse(m, m, 2, 1, lmax=floor)
    b = fuse(m, m, 2, 1, lmax=floor + 1)
    elapsed = time.perf_counter() - t
    predicted = staggered_depth_prediction(2)
    report(8, {
        "graded dims {0: 2, 1: 1, 2: 3}": a.graded == {0: 2, 1: 1, 2: 3},
        "matches exact-sequence prediction": a.graded == predicted,
        "total 6": a.dimension == 6,
        "stable at two consecutive lmax": (a.basis_pairs, a.l0_matrix) == (b.basis_pairs, b.l0_matrix),
    }, elapsed)


def _jacobi_ok(pres) -> bool:
    def ad(x, m):
        out = None
        for w, c in x.terms:
            if len(w) == 1:
                term = bracket(w[0], m, pres).scale(c)
                out = term if out is None else out + term
        return out

    for a, b, c in itertools.product(range(-4, 5), repeat=3):
        parts = [ad(bracket(L(a), L(b), pres), L(c)), ad(bracket(L(b), L(c), pres), L(a)),
                 ad(bracket(L(c), L(a), pres), L(b))]
        total = None
        for p in parts:
            if p is not None:
                total = p if total is None else total + p
        if total is not None and not total.is_zero():
            return False
    return True


def _homomorphism_ok(spec) -> bool:
    mod = module_of(spec)
    w = Fraction(3, 2)
    for m, n in itertools.product(range(-3, 4), repeat=2):
        room = 6 - max(-m, 1) - max(-n, 1)
        for p in _all_pairs(spec, spec, room):
            x = {p: Fraction(1)}
            lhs = add_into(delta2_vec(mod, mod, L(m), w, delta2_vec(mod, mod, L(n), w, x)),
                           delta2_vec(mod, mod, L(n), w, delta2_vec(mod, mod, L(m), w, x)), Fraction(-1))
            rhs: dict = {}
            for word, c in bracket(L(m), L(n), spec.presentation).terms:
                add_into(rhs, delta2_vec(mod, mod, word[0], w, x) if word else x, c)
            if lhs != rhs:
                return False
    return True


def _adjointness_ok(spec) -> bool:
    pairs = _all_pairs(spec, spec, 4)
    psi = Functional.from_dict({p: i % 7 - 3 for i, p in enumerate(pairs)}, 4)
    mod = module_of(spec)
    for n in range(-2, 3):
        for w in (Fraction(1), Fraction(-2, 3)):
            moved = dual_action(L(n), psi, w, spec, spec)
            for p in _all_pairs(spec, spec, moved.lmax):
                x = {p: Fraction(1)}
                if moved.evaluate(x) != psi.evaluate(delta2_vec(mod, mod, L(-n), w, x)):
                    return False
    return True


def test_criterion_9_property_suites(report):
    m = _irreducible()
    t = time.perf_counter()
    r1, r2 = fuse(m, m, 1, 2), fuse(m, m, 1, 2)
    dims = [len(depth_quotient(m, d, _module_cutoff(m, d))) for d in range(4)]
    checks = {
        "Jacobi on |index| <= 4": _jacobi_ok(m.presentation),
        "coproduct homomorphism |index| <= 3, Lmax 6": _homomorphism_ok(m),
        "adjointness |n| <= 2": _adjointness_ok(m),
        "determinism": r1.to_json() == r2.to_json() and r1.l0_matrix == r2.l0_matrix,
        "Jordan independent of w in {1, 2}": all(
            fuse(m, m, d, 1).jordan == fuse(m, m, d, 2).jordan for d in (0, 1)),
        "dim M^(d) non-decreasing, d <= 3": dims == sorted(dims) and len(level_basis(m, 0)) == 1,
    }
    report(9, checks, time.perf_counter() - t)
