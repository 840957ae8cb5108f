"""Mode calculus for Lie-type chiral algebras.

Modes are indexed by the amount they *lower* the conformal weight:
``x(-n)`` raises the L(0)-grading by n.  In the other common convention a
weight-h field has modes v_n with v_n = x(n + 1 - h); :func:`math_index`
and :func:`physics_index` convert between the two.

Brackets are linear: [x(m), y(n)] is a combination of single modes
z(m + n) with coefficients polynomial in (m, n), plus a central term
polynomial in m when m + n = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .exact_linalg import RatLike, rat, rat_str

Poly2 = tuple[tuple[int, int, Fraction], ...]  # sum of c * m^i * n^j
Poly1 = tuple[tuple[int, Fraction], ...]  # sum of c * m^i


class UnknownGenerator(KeyError):
    pass


class UnsupportedOpp(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Mode:
    """A mode x(index); ``index`` is the weight-lowering amount."""

    index: int
    generator: str

    def __init__(self, generator: str, index: int) -> None:
        object.__setattr__(self, "index", int(index))
        object.__setattr__(self, "generator", generator)

    @property
    def key(self) -> tuple[int, str]:
        return (self.index, self.generator)

    @property
    def raise_by(self) -> int:
        return -self.index

    def __str__(self) -> str:
        return f"{self.generator}({self.index})"

    def __repr__(self) -> str:
        return f"Mode({self.generator!r}, {self.index})"


Word = tuple[Mode, ...]


def word_label(word: Word) -> str:
    return "".join(str(m) for m in word)


def word_level(word: Word) -> int:
    """Total weight raised by a word of modes."""
    return -sum(m.index for m in word)


def is_canonical(word: Word) -> bool:
    return all(word[i].key <= word[i + 1].key for i in range(len(word) - 1))


@dataclass(frozen=True)
class GeneratorSpec:
    name: str
    weight: int
    quasiprimary: bool = True

    def __post_init__(self) -> None:
        if self.weight < 1:
            raise ValueError("generator weight must be >= 1")

    @property
    def quasiprimary_sign(self) -> Fraction:
        return Fraction((-1) ** self.weight)


@dataclass(frozen=True)
class BracketTerm:
    """Coefficient polynomial for one target generator in [x(m), y(n)]."""

    target: str
    poly: Poly2


@dataclass(frozen=True)
class AlgebraElement:
    """Rational combination of words; the empty word is the identity."""

    terms: tuple[tuple[Word, Fraction], ...] = ()

    @classmethod
    def from_dict(cls, d: Mapping[Word, Fraction]) -> AlgebraElement:
        items = sorted(((w, rat(c)) for w, c in d.items() if c), key=lambda t: _word_sort_key(t[0]))
        return cls(tuple(items))

    @classmethod
    def scalar(cls, c: RatLike) -> AlgebraElement:
        return cls.from_dict({(): rat(c)})

    @classmethod
    def word(cls, *modes: Mode) -> AlgebraElement:
        return cls.from_dict({tuple(modes): Fraction(1)})

    def as_dict(self) -> dict[Word, Fraction]:
        return dict(self.terms)

    def __add__(self, other: AlgebraElement) -> AlgebraElement:
        d = self.as_dict()
        for w, c in other.terms:
            d[w] = d.get(w, 0) + c
        return AlgebraElement.from_dict(d)

    def __neg__(self) -> AlgebraElement:
        return AlgebraElement(tuple((w, -c) for w, c in self.terms))

    def __sub__(self, other: AlgebraElement) -> AlgebraElement:
        return self + (-other)

    def scale(self, c: RatLike) -> AlgebraElement:
        return AlgebraElement.from_dict({w: rat(c) * x for w, x in self.terms})

    def __mul__(self, other: AlgebraElement) -> AlgebraElement:
        d: dict[Word, Fraction] = {}
        for w1, c1 in self.terms:
            for w2, c2 in other.terms:
                w = w1 + w2
                d[w] = d.get(w, 0) + c1 * c2
        return AlgebraElement.from_dict(d)

    def is_zero(self) -> bool:
        return not self.terms

    def identity_part(self) -> Fraction:
        return self.as_dict().get((), Fraction(0))

    def to_json(self) -> dict[str, str]:
        return {(word_label(w) or "1"): rat_str(c) for w, c in self.terms}

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"({rat_str(c)})*{word_label(w) or '1'}" for w, c in self.terms)


def _word_sort_key(w: Word):
    return (len(w), tuple(m.key for m in w))


def _eval2(poly: Poly2, m: int, n: int) -> Fraction:
    return sum((c * m ** i * n ** j for i, j, c in poly), Fraction(0))


def _eval1(poly: Poly1, m: int) -> Fraction:
    return sum((c * m ** i for i, c in poly), Fraction(0))


@dataclass(frozen=True)
class AlgebraPresentation:
    """Generators, linear bracket table and central parameters."""

    name: str
    generators: tuple[GeneratorSpec, ...]
    brackets: tuple[tuple[tuple[str, str], tuple[BracketTerm, ...], Poly1], ...]
    central_params: tuple[tuple[str, Fraction], ...] = ()
    _table: dict = field(default=None, init=False, repr=False, compare=False, hash=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        table = {pair: (terms, central) for pair, terms, central in self.brackets}
        object.__setattr__(self, "_table", table)
        names = self.generator_names
        for a in names:
            for b in names:
                if (a, b) not in table:
                    raise ValueError(f"bracket [{a}, {b}] missing from presentation")
        self._check_antisymmetry()

    @property
    def generator_names(self) -> tuple[str, ...]:
        return tuple(g.name for g in self.generators)

    def generator(self, name: str) -> GeneratorSpec:
        for g in self.generators:
            if g.name == name:
                return g
        raise UnknownGenerator(name)

    def param(self, name: str) -> Fraction:
        return dict(self.central_params)[name]

    def _check_antisymmetry(self) -> None:
        # [x(m), y(n)] = -[y(n), x(m)] as polynomials: swap exponents of the pair
        for (a, b), (terms, central) in self._table.items():
            other_terms, other_central = self._table[(b, a)]
            lhs: dict[tuple[str, int, int], Fraction] = {}
            for t in terms:
                for i, j, c in t.poly:
                    lhs[(t.target, i, j)] = lhs.get((t.target, i, j), 0) + c
            for t in other_terms:
                for i, j, c in t.poly:
                    lhs[(t.target, j, i)] = lhs.get((t.target, j, i), 0) + c
            if any(lhs.values()):
                raise ValueError(f"bracket [{a}, {b}] is not antisymmetric")
            # central part lives on m + n = 0, so n = -m
            cen: dict[int, Fraction] = {}
            for i, c in central:
                cen[i] = cen.get(i, 0) + c
            for i, c in other_central:
                cen[i] = cen.get(i, 0) + c * (-1) ** i
            if any(cen.values()):
                raise ValueError(f"central term of [{a}, {b}] is not antisymmetric")

    def bracket_modes(self, a: Mode, b: Mode) -> tuple[dict[Mode, Fraction], Fraction]:
        """[a, b] as (single-mode coefficients, central scalar)."""
        try:
            terms, central = self._table[(a.generator, b.generator)]
        except KeyError:
            missing = a.generator if a.generator not in self.generator_names else b.generator
            raise UnknownGenerator(missing) from None
        out: dict[Mode, Fraction] = {}
        for t in terms:
            c = _eval2(t.poly, a.index, b.index)
            if c:
                md = Mode(t.target, a.index + b.index)
                out[md] = out.get(md, 0) + c
        cen = _eval1(central, a.index) if a.index + b.index == 0 else Fraction(0)
        return {k: v for k, v in out.items() if v}, cen


def virasoro(c: RatLike) -> AlgebraPresentation:
    """[L(m), L(n)] = (m - n) L(m + n) + c/12 (m^3 - m) delta_{m+n,0}."""
    c = rat(c)
    one = Fraction(1)
    return AlgebraPresentation(
        name="virasoro",
        generators=(GeneratorSpec("L", 2),),
        brackets=((("L", "L"), (BracketTerm("L", ((1, 0, one), (0, 1, -one))),),
                   ((3, c / 12), (1, -c / 12))),),
        central_params=(("c", c),),
    )


def heisenberg() -> AlgebraPresentation:
    """[a(m), a(n)] = m delta_{m+n,0}."""
    return AlgebraPresentation(
        name="heisenberg",
        generators=(GeneratorSpec("a", 1),),
        brackets=((("a", "a"), (), ((1, Fraction(1)),)),),
    )


PRESETS = {"virasoro": virasoro, "heisenberg": heisenberg}


def preset(name: str, **params: RatLike) -> AlgebraPresentation:
    if name == "virasoro":
        return virasoro(params.get("c", 0))
    if name == "heisenberg":
        return heisenberg()
    raise ValueError(f"unknown algebra preset {name!r}")


def math_index(mode: Mode, pres: AlgebraPresentation) -> int:
    """n such that the mode is v_n in the z^{-n-1} convention."""
    return mode.index + pres.generator(mode.generator).weight - 1


def physics_index(generator: str, n: int, pres: AlgebraPresentation) -> int:
    return n + 1 - pres.generator(generator).weight


def bracket(a: Mode, b: Mode, pres: AlgebraPresentation) -> AlgebraElement:
    modes, cen = pres.bracket_modes(a, b)
    d: dict[Word, Fraction] = {(m,): c for m, c in modes.items()}
    if cen:
        d[()] = cen
    return AlgebraElement.from_dict(d)


def normal_order(word: Sequence[Mode] | AlgebraElement, pres: AlgebraPresentation) -> AlgebraElement:
    """PBW-canonical expansion: modes sorted by (index, generator name)."""
    if isinstance(word, AlgebraElement):
        out: dict[Word, Fraction] = {}
        for w, c in word.terms:
            for w2, c2 in _normal_order(tuple(w), pres).items():
                out[w2] = out.get(w2, 0) + c * c2
        return AlgebraElement.from_dict(out)
    for m in word:
        pres.generator(m.generator)
    return AlgebraElement.from_dict(_normal_order(tuple(word), pres))


@lru_cache(maxsize=None)
def _normal_order_cached(word: Word, pres: AlgebraPresentation) -> tuple[tuple[Word, Fraction], ...]:
    for i in range(len(word) - 1):
        a, b = word[i], word[i + 1]
        if a.key > b.key:
            out: dict[Word, Fraction] = {}
            head, tail = word[:i], word[i + 2:]
            _accumulate(out, _normal_order(head + (b, a) + tail, pres), 1)
            modes, cen = pres.bracket_modes(a, b)
            for md, c in modes.items():
                _accumulate(out, _normal_order(head + (md,) + tail, pres), c)
            if cen:
                _accumulate(out, _normal_order(head + tail, pres), cen)
            return tuple((w, c) for w, c in out.items() if c)
    return ((word, Fraction(1)),)


def _normal_order(word: Word, pres: AlgebraPresentation) -> dict[Word, Fraction]:
    return dict(_normal_order_cached(word, pres))


def _accumulate(out: dict, src: Mapping, c: Fraction) -> None:
    for k, v in src.items():
        out[k] = out.get(k, 0) + c * v


def opp(m: Mode, pres: AlgebraPresentation) -> tuple[Fraction, Mode]:
    """Adjoint of a quasiprimary mode: x(n) -> (-1)^h x(-n)."""
    g = pres.generator(m.generator)
    if not g.quasiprimary:
        raise UnsupportedOpp(f"generator {g.name} is not quasiprimary")
    return g.quasiprimary_sign, Mode(m.generator, -m.index)


def opp_word(word: Iterable[Mode], pres: AlgebraPresentation) -> tuple[Fraction, Word]:
    """Anti-automorphism on words: reverse the order and adjoint each mode."""
    sign = Fraction(1)
    out = []
    for m in reversed(tuple(word)):
        s, mm = opp(m, pres)
        sign *= s
        out.append(mm)
    return sign, tuple(out)


def opp_element(x: AlgebraElement, pres: AlgebraPresentation) -> AlgebraElement:
    d: dict[Word, Fraction] = {}
    for w, c in x.terms:
        s, ww = opp_word(w, pres)
        d[ww] = d.get(ww, 0) + s * c
    return AlgebraElement.from_dict(d)


def negative_words(pres: AlgebraPresentation, degree: int) -> list[Word]:
    """Canonical words of strictly negative modes raising the weight by ``degree``.

    Ordered lexicographically on their mode keys, e.g. at degree 3:
    L(-3), L(-2)L(-1), L(-1)L(-1)L(-1).
    """
    return list(_negative_words(pres.generator_names, degree))


@lru_cache(maxsize=None)
def _negative_words(names: tuple[str, ...], degree: int) -> tuple[Word, ...]:
    out: list[Word] = []
    modes = sorted((Mode(g, -k) for k in range(1, degree + 1) for g in names), key=lambda m: m.key)

    def rec(start: int, remaining: int, acc: list[Mode]) -> None:
        if remaining == 0:
            out.append(tuple(acc))
            return
        for i in range(start, len(modes)):
            md = modes[i]
            if md.raise_by <= remaining:
                acc.append(md)
                rec(i, remaining - md.raise_by, acc)
                acc.pop()

    rec(0, degree, [])
    out.sort(key=lambda w: tuple(m.key for m in w))
    return tuple(out)
