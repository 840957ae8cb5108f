"""Exact rational linear algebra.

Everything here works over ``fractions.Fraction``.  Dense helpers (rank,
kernel, characteristic polynomial, Jordan data) serve the small matrices
that show up in reports; :class:`EchelonSpace` is the sparse incremental
eliminator that carries the large quotient computations.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Iterable, Mapping, Sequence, Union

Rat = Fraction
RatLike = Union[Fraction, int, str]

SparseVec = dict  # column -> Fraction, zeros never stored


def rat(x: RatLike) -> Fraction:
    """Parse an exact rational from an int, Fraction or a ``"p/q"`` string."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a rational")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip().replace("−", "-")
        if not s:
            raise ValueError("empty rational")
        if "." in s or "e" in s.lower():
            raise ValueError(f"not an exact rational: {x!r}")
        return Fraction(s)
    raise TypeError(f"cannot interpret {type(x).__name__} as a rational")


def rat_str(q: RatLike) -> str:
    """Serialize as ``"p/q"`` (``"p"`` when q = 1), sign on the numerator."""
    q = rat(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class RatMatrix:
    """Immutable dense matrix of Fractions."""

    rows: int
    cols: int
    entries: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        if len(self.entries) != self.rows or any(len(r) != self.cols for r in self.entries):
            raise ValueError("entries do not match the declared shape")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[RatLike]], cols: int | None = None) -> RatMatrix:
        ents = tuple(tuple(rat(x) for x in r) for r in rows)
        ncols = cols if cols is not None else (len(ents[0]) if ents else 0)
        return cls(len(ents), ncols, ents)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> RatMatrix:
        z = Fraction(0)
        return cls(rows, cols, tuple(tuple(z for _ in range(cols)) for _ in range(rows)))

    @classmethod
    def identity(cls, n: int) -> RatMatrix:
        return cls(n, n, tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)))

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[RatLike]], rows: int | None = None) -> RatMatrix:
        nrows = rows if rows is not None else (len(columns[0]) if columns else 0)
        return cls.from_rows([[columns[j][i] for j in range(len(columns))] for i in range(nrows)],
                             cols=len(columns))

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        i, j = ij
        return self.entries[i][j]

    def column(self, j: int) -> tuple[Fraction, ...]:
        return tuple(r[j] for r in self.entries)

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def transpose(self) -> RatMatrix:
        return RatMatrix(self.cols, self.rows, tuple(zip(*self.entries)) if self.rows else
                         tuple(() for _ in range(self.cols)))

    def __add__(self, other: RatMatrix) -> RatMatrix:
        self._same_shape(other)
        return RatMatrix(self.rows, self.cols, tuple(
            tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.entries, other.entries)))

    def __sub__(self, other: RatMatrix) -> RatMatrix:
        self._same_shape(other)
        return RatMatrix(self.rows, self.cols, tuple(
            tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.entries, other.entries)))

    def scale(self, c: RatLike) -> RatMatrix:
        c = rat(c)
        return RatMatrix(self.rows, self.cols, tuple(tuple(c * a for a in r) for r in self.entries))

    def __matmul__(self, other: RatMatrix) -> RatMatrix:
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        cols = [other.column(j) for j in range(other.cols)]
        return RatMatrix(self.rows, other.cols, tuple(
            tuple(sum((a * b for a, b in zip(r, c) if a and b), Fraction(0)) for c in cols)
            for r in self.entries))

    def apply(self, v: Sequence[RatLike]) -> tuple[Fraction, ...]:
        if len(v) != self.cols:
            raise ValueError("vector length mismatch")
        vv = [rat(x) for x in v]
        return tuple(sum((a * b for a, b in zip(r, vv) if a and b), Fraction(0)) for r in self.entries)

    def power(self, k: int) -> RatMatrix:
        if not self.is_square or k < 0:
            raise ValueError("power needs a square matrix and k >= 0")
        out, base = RatMatrix.identity(self.rows), self
        while k:
            if k & 1:
                out = out @ base
            base = base @ base
            k >>= 1
        return out

    def trace(self) -> Fraction:
        if not self.is_square:
            raise ValueError("trace of a non-square matrix")
        return sum((self.entries[i][i] for i in range(self.rows)), Fraction(0))

    def det(self) -> Fraction:
        if not self.is_square:
            raise ValueError("determinant of a non-square matrix")
        return _bareiss_det(self.entries)

    def rank(self) -> int:
        return len(_bareiss_echelon(self.entries, self.cols)[1])

    def to_strings(self) -> list[list[str]]:
        return [[rat_str(x) for x in r] for r in self.entries]

    def _same_shape(self, other: RatMatrix) -> None:
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")


# -- dense elimination -------------------------------------------------------

def _integer_rows(rows: Iterable[Sequence[Fraction]]) -> list[list[int]]:
    out = []
    for r in rows:
        den = lcm(*(x.denominator for x in r)) if r else 1
        out.append([int(x * den) for x in r])
    return out


def _bareiss_echelon(rows: Sequence[Sequence[Fraction]], ncols: int) -> tuple[list[list[int]], list[int]]:
    """Fraction-free row echelon form; returns (integer rows, pivot columns)."""
    a = _integer_rows(rows)
    pivots: list[int] = []
    r, prev = 0, 1
    for c in range(ncols):
        p = next((i for i in range(r, len(a)) if a[i][c] != 0), None)
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        piv = a[r][c]
        for i in range(r + 1, len(a)):
            f = a[i][c]
            a[i] = [(piv * x - f * y) // prev for x, y in zip(a[i], a[r])]
        prev = piv
        pivots.append(c)
        r += 1
        if r == len(a):
            break
    return a[:r], pivots


def _bareiss_det(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    n = len(rows)
    if n == 0:
        return Fraction(1)
    dens = [lcm(*(x.denominator for x in r)) for r in rows]
    a = [[int(x * d) for x in r] for r, d in zip(rows, dens)]
    sign, prev = 1, 1
    for k in range(n - 1):
        p = next((i for i in range(k, n) if a[i][k] != 0), None)
        if p is None:
            return Fraction(0)
        if p != k:
            a[k], a[p] = a[p], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    total_den = 1
    for d in dens:
        total_den *= d
    return Fraction(sign * a[n - 1][n - 1], total_den)


def rref(m: RatMatrix) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form (pivots 1, pivot columns cleared)."""
    ints, pivots = _bareiss_echelon(m.entries, m.cols)
    rows = [[Fraction(x) for x in r] for r in ints]
    for i, c in enumerate(pivots):
        inv = 1 / rows[i][c]
        rows[i] = [x * inv for x in rows[i]]
    for i in range(len(pivots) - 1, -1, -1):
        c = pivots[i]
        for k in range(i):
            f = rows[k][c]
            if f:
                rows[k] = [x - f * y for x, y in zip(rows[k], rows[i])]
    return rows, pivots


def rank(m: RatMatrix) -> int:
    return m.rank()


def kernel_basis(m: RatMatrix) -> list[tuple[Fraction, ...]]:
    """Basis of the right nullspace, one vector per free column.

    Each vector has a 1 in its free column, zeros in the other free columns
    and minus the reduced-echelon entries in the pivot columns, so the output
    is unique for a given matrix.
    """
    rows, pivots = rref(m)
    pivset = set(pivots)
    basis = []
    for f in range(m.cols):
        if f in pivset:
            continue
        v = [Fraction(0)] * m.cols
        v[f] = Fraction(1)
        for i, c in enumerate(pivots):
            v[c] = -rows[i][f]
        basis.append(tuple(v))
    return basis


# -- sparse incremental elimination -------------------------------------------

class EchelonSpace:
    """Incrementally growing subspace of a coordinate space with a total column order.

    Each stored row has its pivot at its *last* (highest) nonzero column and is
    scaled so the pivot entry is 1.  Reducing a vector repeatedly cancels the
    highest pivot column present, which yields a unique normal form supported
    on non-pivot columns; non-pivot columns are therefore the canonical
    representatives of the quotient, earliest columns preferred.
    """

    def __init__(self) -> None:
        self.rows: dict[int, dict[int, Fraction]] = {}

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def pivots(self) -> frozenset[int]:
        return frozenset(self.rows)

    def reduce(self, vec: Mapping[int, Fraction]) -> dict[int, Fraction]:
        v = {k: x for k, x in vec.items() if x}
        rows = self.rows
        # max-heap of pivot columns still present in v
        heap = [-k for k in v if k in rows]
        heapq.heapify(heap)
        while heap:
            p = -heapq.heappop(heap)
            c = v.get(p)
            if not c:
                continue
            for k, x in rows[p].items():
                nv = v.get(k, 0) - c * x
                if nv:
                    if k not in v and k in rows and k != p:
                        heapq.heappush(heap, -k)
                    v[k] = nv
                else:
                    v.pop(k, None)
        return v

    def add(self, vec: Mapping[int, Fraction]) -> int | None:
        """Insert a vector; returns its new pivot column or None if dependent."""
        v = self.reduce(vec)
        if not v:
            return None
        p = max(v)
        inv = 1 / v[p]
        self.rows[p] = {k: x * inv for k, x in v.items()}
        return p

    def contains(self, vec: Mapping[int, Fraction]) -> bool:
        return not self.reduce(vec)

    def reduced_row(self, p: int) -> dict[int, Fraction]:
        """Canonical relation with pivot p: e_p plus the normal form of the rest."""
        rest = {k: x for k, x in self.rows[p].items() if k != p}
        out = self.reduce(rest)
        out[p] = Fraction(1)
        return out


def quotient_basis(ambient_dim: int, relations: Sequence[Sequence[RatLike]]
                   ) -> tuple[list[int], RatMatrix]:
    """Quotient of Q^ambient_dim by the span of ``relations``.

    Returns the representative coordinates (the earliest non-pivot ones, in
    increasing order) and the projection matrix whose column j holds the
    coordinates of e_j modulo the relations in terms of the representatives.
    """
    space = EchelonSpace()
    for r in relations:
        if len(r) != ambient_dim:
            raise ValueError("relation length does not match ambient dimension")
        space.add({i: rat(x) for i, x in enumerate(r) if x})
    reps = [i for i in range(ambient_dim) if i not in space.rows]
    index = {c: i for i, c in enumerate(reps)}
    cols = []
    for j in range(ambient_dim):
        nf = space.reduce({j: Fraction(1)})
        col = [Fraction(0)] * len(reps)
        for k, x in nf.items():
            col[index[k]] = x
        cols.append(col)
    proj = RatMatrix.from_columns(cols, rows=len(reps)) if cols else RatMatrix.zeros(0, 0)
    return reps, proj


# -- characteristic polynomial and Jordan structure ---------------------------

def charpoly(m: RatMatrix) -> list[Fraction]:
    """Coefficients of det(xI - m), leading coefficient first (Faddeev-LeVerrier)."""
    if not m.is_square:
        raise ValueError("characteristic polynomial of a non-square matrix")
    n = m.rows
    coeffs = [Fraction(1)]
    ident = RatMatrix.identity(n)
    mk = RatMatrix.zeros(n, n)
    for k in range(1, n + 1):
        mk = m @ (mk + ident.scale(coeffs[-1]))
        coeffs.append(-(mk.trace()) / k)
    return coeffs


@dataclass(frozen=True)
class JordanReport:
    """Jordan data over Q.

    ``blocks`` pairs each rational eigenvalue with its block sizes (largest
    first); ``residual_factors`` lists irreducible non-linear factors of the
    characteristic polynomial as (coefficients, multiplicity).
    """

    blocks: tuple[tuple[Fraction, tuple[int, ...]], ...]
    residual_factors: tuple[tuple[tuple[Fraction, ...], int], ...] = ()
    dimension: int = field(default=0)

    def __post_init__(self) -> None:
        total = sum(sum(b) for _, b in self.blocks)
        total += sum((len(c) - 1) * mult for c, mult in self.residual_factors)
        if total != self.dimension:
            raise ValueError("Jordan data does not add up to the matrix dimension")

    @property
    def eigenvalues(self) -> list[Fraction]:
        """Generalized eigenvalues with algebraic multiplicity, ascending."""
        return [lam for lam, sizes in self.blocks for _ in range(sum(sizes))]

    def to_json(self) -> list[dict]:
        return [{"eigenvalue": rat_str(lam), "block_sizes": list(sizes)} for lam, sizes in self.blocks]


def _factor_over_q(coeffs: Sequence[Fraction]) -> list[tuple[list[Fraction], int]]:
    import sympy

    x = sympy.Symbol("x")
    poly = sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in coeffs], x, domain="QQ")
    _, factors = poly.factor_list()
    out = []
    for f, mult in factors:
        cs = [Fraction(int(sympy.fraction(c)[0]), int(sympy.fraction(c)[1])) for c in f.all_coeffs()]
        lead = cs[0]
        out.append(([c / lead for c in cs], int(mult)))
    return out


def jordan_structure(m: RatMatrix) -> JordanReport:
    """Rational Jordan data from the factored characteristic polynomial.

    For each rational root lambda of multiplicity k the block sizes follow
    from r_j = rank((m - lambda)^j): the number of blocks of size >= j is
    r_{j-1} - r_j.
    """
    if not m.is_square:
        raise ValueError("Jordan structure of a non-square matrix")
    n = m.rows
    if n == 0:
        return JordanReport((), (), 0)
    blocks: list[tuple[Fraction, tuple[int, ...]]] = []
    residual: list[tuple[tuple[Fraction, ...], int]] = []
    for coeffs, mult in _factor_over_q(charpoly(m)):
        if len(coeffs) == 2:
            lam = -coeffs[1]
            shifted = m - RatMatrix.identity(n).scale(lam)
            ranks = [n]
            power = RatMatrix.identity(n)
            while n - ranks[-1] < mult:
                power = power @ shifted
                ranks.append(power.rank())
            at_least = [ranks[j - 1] - ranks[j] for j in range(1, len(ranks))] + [0]
            sizes: list[int] = []
            for j in range(len(at_least) - 1, 0, -1):
                sizes += [j] * (at_least[j - 1] - at_least[j])
            blocks.append((lam, tuple(sizes)))
        else:
            residual.append((tuple(coeffs), mult))
    blocks.sort(key=lambda b: b[0])
    residual.sort()
    return JordanReport(tuple(blocks), tuple(residual), n)
