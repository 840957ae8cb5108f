"""Independent reference computations, sharing no code with the package.

A Virasoro Verma module is stored on partitions: (a1, ..., ak) with
a1 >= ... >= ak >= 1 stands for L(-a1) ... L(-ak)|h>.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache


def partitions(n: int, largest: int | None = None) -> list[tuple[int, ...]]:
    largest = n if largest is None else largest
    if n == 0:
        return [()]
    out = []
    for first in range(min(n, largest), 0, -1):
        out += [(first,) + rest for rest in partitions(n - first, first)]
    return out


def ordered_partitions(n: int) -> list[tuple[int, ...]]:
    """Same order as PBW words sorted by (index, generator): L(-2) before L(-1)L(-1)."""
    return sorted(partitions(n), key=lambda p: tuple(-a for a in p))


def partition_count(n: int) -> int:
    return len(partitions(n))


class VermaOracle:
    def __init__(self, c, h) -> None:
        self.c = Fraction(c)
        self.h = Fraction(h)
        self.apply = lru_cache(maxsize=None)(self._apply)

    def _apply(self, n: int, state: tuple[int, ...]) -> tuple[tuple[tuple[int, ...], Fraction], ...]:
        out: dict[tuple[int, ...], Fraction] = {}

        def add(k, v):
            out[k] = out.get(k, 0) + v

        if not state:
            if n > 0:
                return ()
            if n == 0:
                return (((), self.h),)
            return (((-n,), Fraction(1)),)
        a, rest = state[0], state[1:]
        if n < 0 and -n >= a:
            return (((-n,) + state, Fraction(1)),)
        # L(n) L(-a) = L(-a) L(n) + (n + a) L(n - a) + c/12 (n^3 - n) delta_{n,a}
        for k, v in self.apply(n, rest):
            for k2, v2 in self.apply(-a, k):
                add(k2, v * v2)
        if n + a:
            for k, v in self.apply(n - a, rest):
                add(k, (n + a) * v)
        if n == a:
            add(rest, self.c * (n ** 3 - n) / 12)
        return tuple((k, v) for k, v in out.items() if v)

    def act(self, n: int, vec: dict) -> dict:
        out: dict = {}
        for k, v in vec.items():
            for k2, v2 in self.apply(n, k):
                out[k2] = out.get(k2, 0) + v * v2
        return {k: v for k, v in out.items() if v}

    def gram(self, level: int) -> list[list[Fraction]]:
        basis = ordered_partitions(level)
        rows = []
        for p in basis:
            row = []
            for q in basis:
                vec = {q: Fraction(1)}
                for a in p:  # adjoint of L(-a1)...L(-ak) is L(ak)...L(a1): apply L(a1) first
                    vec = self.act(a, vec)
                row.append(vec.get((), Fraction(0)))
            rows.append(row)
        return rows


def det(rows: list[list[Fraction]]) -> Fraction:
    """Plain Gaussian elimination over Q."""
    m = [list(map(Fraction, r)) for r in rows]
    n = len(m)
    out = Fraction(1)
    for i in range(n):
        piv = next((r for r in range(i, n) if m[r][i]), None)
        if piv is None:
            return Fraction(0)
        if piv != i:
            m[i], m[piv] = m[piv], m[i]
            out = -out
        out *= m[i][i]
        for r in range(i + 1, n):
            f = m[r][i] / m[i][i]
            for j in range(i, n):
                m[r][j] -= f * m[i][j]
    return out


def matmul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))] for i in range(len(a))]


def jordan_sizes_nilpotent(rows) -> list[int]:
    """Jordan block sizes at eigenvalue 0 from ranks of powers (brute force)."""
    n = len(rows)

    def rank(m):
        m = [list(map(Fraction, r)) for r in m]
        rk, col = 0, 0
        for col in range(n):
            piv = next((r for r in range(rk, n) if m[r][col]), None)
            if piv is None:
                continue
            m[rk], m[piv] = m[piv], m[rk]
            for r in range(n):
                if r != rk and m[r][col]:
                    f = m[r][col] / m[rk][col]
                    m[r] = [x - f * y for x, y in zip(m[r], m[rk])]
            rk += 1
        return rk

    ranks = [n]
    p = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for _ in range(n):
        p = matmul(p, rows)
        ranks.append(rank(p))
    ranks.append(ranks[-1])
    sizes = []
    for k in range(1, n + 1):
        count = ranks[k - 1] - 2 * ranks[k] + ranks[k + 1]
        sizes += [k] * count
    return sorted(sizes, reverse=True)


def staggered_depth_prediction(d: int) -> dict[int, int]:
    """Graded dims (by weight) of the depth-d quotient of the c=-2 fusion product of two h=-1/8 modules.

    The product sits in 0 -> V -> S -> W -> 0, V the irreducible vacuum module
    (singular vectors at levels 1 and 3) and W the h=0 module whose first
    singular vector is at level 3.  Below level 3 their level dims are
    p(n) - p(n-1) and p(n); for d <= 2 the depth-d quotient keeps levels <= d.
    """
    if d > 2:
        raise ValueError("prediction only valid below the level-3 singular vectors")
    out = {}
    for n in range(d + 1):
        vac = partition_count(n) - (partition_count(n - 1) if n >= 1 else 0)
        out[n] = vac + partition_count(n)
    return out


def verma_depth0_dimension(c, h, top: int) -> tuple[int, Fraction]:
    """Dimension of the Verma module modulo the images of all raising modes (levels <= top).

    Also returns the L(0) eigenvalue on the surviving ground state.
    """
    orc = VermaOracle(c, h)
    basis = [p for n in range(top + 1) for p in partitions(n)]
    images = []
    for p in basis:
        for k in range(1, top + 1):
            v = orc.act(-k, {p: Fraction(1)})
            if v and all(sum(q) <= top for q in v):
                images.append(v)
    rows = [[v.get(p, Fraction(0)) for p in basis] for v in images]
    rank = _rank(rows, len(basis))
    return len(basis) - rank, dict(orc.apply(0, ()))[()]


def _rank(rows, ncols) -> int:
    m = [list(r) for r in rows]
    rk = 0
    for col in range(ncols):
        piv = next((r for r in range(rk, len(m)) if m[r][col]), None)
        if piv is None:
            continue
        m[rk], m[piv] = m[piv], m[rk]
        for r in range(len(m)):
            if r != rk and m[r][col]:
                f = m[r][col] / m[rk][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[rk])]
        rk += 1
    return rk
