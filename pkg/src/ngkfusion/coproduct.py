"""Coproduct actions on tensor products of two modules.

With insertion points gauge-fixed to (w, 0) and (0, -w), a weight-h mode v_n
(math index n = k + h - 1 for the physics mode x(k)) acts as

    delta2(v_n) = sum_{m>=0} C(n, m) w^(n-m) v_m (x) 1  +  1 (x) v_n
    delta1(v_n) = v_n (x) 1  +  sum_{m>=0} C(n, m) (-w)^(n-m) 1 (x) v_m

The m-sums are finite on any vector: v_m kills a level-l vector once
m > l + h - 1.  Both are special cases of the general action of a smeared
mode v f(t), f = t^a (t - w)^b, which acts on the first factor through the
expansion of f(t + w) about t = 0 and on the second through that of f(t).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, Mapping

from .chiral_algebra import Mode, Word, math_index, word_label, word_level
from .exact_linalg import RatLike, rat, rat_str
from .hw_modules import HighestWeightModule, ModuleSpec, module_of

Pair = tuple[Word, Word]
TVec = dict  # Pair -> Fraction


class HeadroomExceeded(ValueError):
    """The result would leave the truncated tensor space."""


def binom(n: int, m: int) -> Fraction:
    """Generalized binomial coefficient C(n, m) for any integer n and m >= 0."""
    if m < 0:
        return Fraction(0)
    out = Fraction(1)
    for i in range(m):
        out = out * (n - i) / (i + 1)
    return out


@dataclass(frozen=True)
class RationalMonomial:
    """f(t) = t^a (t - w)^b with w != 0."""

    a: int
    b: int
    w: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "w", rat(self.w))
        if self.w == 0:
            raise ValueError("RationalMonomial needs w != 0")

    def translate(self) -> RationalMonomial:
        """f(t + w) = t^b (t + w)^a."""
        return RationalMonomial(self.b, self.a, -self.w)


def iota_expand(f: RationalMonomial, direction: Literal["plus", "minus"], order: int
                ) -> list[tuple[int, Fraction]]:
    """First ``order`` terms of the Laurent expansion of f about t = 0 (plus) or t = oo (minus).

    plus:  t^a (t - w)^b = sum_m C(b, m) (-w)^(b-m) t^(a+m)
    minus: t^a (t - w)^b = sum_m C(b, m) (-w)^m t^(a+b-m)

    Vanishing coefficients (the tail of a polynomial) are omitted.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    out = []
    for m in range(order):
        c = binom(f.b, m)
        if not c:
            continue
        if direction == "plus":
            out.append((f.a + m, c * (-f.w) ** (f.b - m)))
        elif direction == "minus":
            out.append((f.a + f.b - m, c * (-f.w) ** m))
        else:
            raise ValueError(f"unknown direction {direction!r}")
    return out


# -- tensor elements -------------------------------------------------------------

@dataclass(frozen=True)
class TensorElement:
    """Combination of basis-tensor pairs (representative words of each factor)."""

    terms: tuple[tuple[Pair, Fraction], ...] = ()

    @classmethod
    def from_dict(cls, d: Mapping[Pair, RatLike]) -> TensorElement:
        items = [((tuple(p[0]), tuple(p[1])), rat(c)) for p, c in d.items()]
        return cls(tuple(sorted(((p, c) for p, c in items if c), key=lambda t: pair_sort_key(t[0]))))

    @classmethod
    def basis(cls, w1: Word, w2: Word) -> TensorElement:
        return cls((((tuple(w1), tuple(w2)), Fraction(1)),))

    def as_dict(self) -> dict[Pair, Fraction]:
        return dict(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: TensorElement) -> TensorElement:
        return TensorElement.from_dict(add_into(self.as_dict(), other.as_dict()))

    def __sub__(self, other: TensorElement) -> TensorElement:
        return TensorElement.from_dict(add_into(self.as_dict(), other.as_dict(), Fraction(-1)))

    def scale(self, c: RatLike) -> TensorElement:
        return TensorElement.from_dict({p: rat(c) * x for p, x in self.terms})

    @property
    def max_level(self) -> int:
        return max((pair_level(p) for p, _ in self.terms), default=0)

    def to_json(self) -> dict[str, str]:
        return {pair_label(p): rat_str(c) for p, c in self.terms}

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"({rat_str(c)})*[{pair_label(p)}]" for p, c in self.terms)


def pair_level(p: Pair) -> int:
    return word_level(p[0]) + word_level(p[1])


def pair_sort_key(p: Pair):
    return (pair_level(p), word_level(p[1]), tuple(m.key for m in p[0]), tuple(m.key for m in p[1]))


def pair_label(p: Pair) -> str:
    return f"{word_label(p[0])}|hw ⊗ {word_label(p[1])}|hw"


def add_into(out: dict, src: Mapping, c: Fraction = Fraction(1)) -> dict:
    for k, v in src.items():
        nv = out.get(k, 0) + c * v
        if nv:
            out[k] = nv
        else:
            out.pop(k, None)
    return out


# -- the two gauge-fixed coproducts ------------------------------------------------

def _factor_terms(mod: HighestWeightModule, n: int, weight: int, coeff_base: Fraction, word: Word,
                  generator: str) -> dict[Word, Fraction]:
    """sum_m C(n, m) base^(n-m) v_m acting on one basis vector."""
    out: dict[Word, Fraction] = {}
    top = word_level(word) + weight - 1  # v_m kills the vector beyond this
    for m in range(0, top + 1):
        c = binom(n, m)
        if not c:
            continue
        c *= coeff_base ** (n - m)
        add_into(out, mod.act_word(Mode(generator, m - weight + 1), word), c)
    return out


def delta2_vec(mod1: HighestWeightModule, mod2: HighestWeightModule, mode: Mode, w: Fraction,
               x: Mapping[Pair, Fraction]) -> dict[Pair, Fraction]:
    """Action of delta2 on a dict-backed tensor vector."""
    weight = mod1.pres.generator(mode.generator).weight
    n = mode.index + weight - 1
    out: dict[Pair, Fraction] = {}
    for (w1, w2), c in x.items():
        for u1, c1 in _factor_terms(mod1, n, weight, w, w1, mode.generator).items():
            add_into(out, {(u1, w2): c1}, c)
        for u2, c2 in mod2.act_word(mode, w2).items():
            add_into(out, {(w1, u2): c2}, c)
    return out


def delta1_vec(mod1: HighestWeightModule, mod2: HighestWeightModule, mode: Mode, w: Fraction,
               x: Mapping[Pair, Fraction]) -> dict[Pair, Fraction]:
    weight = mod1.pres.generator(mode.generator).weight
    n = mode.index + weight - 1
    out: dict[Pair, Fraction] = {}
    for (w1, w2), c in x.items():
        for u1, c1 in mod1.act_word(mode, w1).items():
            add_into(out, {(u1, w2): c1}, c)
        for u2, c2 in _factor_terms(mod2, n, weight, -w, w2, mode.generator).items():
            add_into(out, {(w1, u2): c2}, c)
    return out


def translation_vec(mod1: HighestWeightModule, mod2: HighestWeightModule, mode: Mode, w: Fraction,
                    x: Mapping[Pair, Fraction], depth: int | None) -> dict[Pair, Fraction]:
    """delta1(v_n) x - sum_m C(n, m) (-w)^m delta2(v_{n-m}) x.

    With ``depth`` given, only the terms whose mode raises the weight by at
    most ``depth`` are kept; the others vanish in the depth quotient.  With
    ``depth=None`` the full sum is used, which is finite only when n >= 0.
    """
    weight = mod1.pres.generator(mode.generator).weight
    n = mode.index + weight - 1
    if depth is None:
        if n < 0:
            raise ValueError("the untruncated translation sum diverges for n < 0")
        top = n
    else:
        top = depth + mode.index  # raise of x(k - m) is m - k
    out = delta1_vec(mod1, mod2, mode, w, x)
    for m in range(0, top + 1):
        c = binom(n, m)
        if not c:
            continue
        shifted = Mode(mode.generator, mode.index - m)
        add_into(out, delta2_vec(mod1, mod2, shifted, w, x), -c * (-w) ** m)
    return out


def translation_reach(mode: Mode, weight: int, depth: int) -> int:
    """Largest weight raise occurring in the depth-truncated translation relation."""
    n = mode.index + weight - 1
    reach = max(-mode.index, weight - 1)
    for m in range(0, depth + mode.index + 1):
        if binom(n, m):
            reach = max(reach, m - mode.index)
    return reach


def _check_headroom(out: Mapping[Pair, Fraction], lmax: int | None) -> None:
    if lmax is None:
        return
    for p in out:
        if pair_level(p) > lmax:
            raise HeadroomExceeded(f"{pair_label(p)} exceeds truncation level {lmax}")


def delta2(mode: Mode, w: RatLike, x: TensorElement, spec1: ModuleSpec, spec2: ModuleSpec,
           lmax: int | None = None) -> TensorElement:
    """Gauge (w, 0) coproduct of a physics-indexed mode applied to x."""
    w = _nonzero(w)
    out = delta2_vec(module_of(spec1), module_of(spec2), mode, w, x.as_dict())
    _check_headroom(out, lmax)
    return TensorElement.from_dict(out)


def delta1(mode: Mode, w: RatLike, x: TensorElement, spec1: ModuleSpec, spec2: ModuleSpec,
           lmax: int | None = None) -> TensorElement:
    """Gauge (0, -w) coproduct of a physics-indexed mode applied to x."""
    w = _nonzero(w)
    out = delta1_vec(module_of(spec1), module_of(spec2), mode, w, x.as_dict())
    _check_headroom(out, lmax)
    return TensorElement.from_dict(out)


def translation_relation(mode: Mode, w: RatLike, x: TensorElement, depth: int, spec1: ModuleSpec,
                         spec2: ModuleSpec, lmax: int | None = None) -> TensorElement:
    """Depth-truncated translation relation for a mode x(k) with k < 0."""
    if mode.index >= 0:
        raise ValueError("translation relations are imposed for raising modes only")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    w = _nonzero(w)
    out = translation_vec(module_of(spec1), module_of(spec2), mode, w, x.as_dict(), depth)
    _check_headroom(out, lmax)
    return TensorElement.from_dict(out)


def hlz_coproduct_vec(mod1: HighestWeightModule, mod2: HighestWeightModule, generator: str,
                      f: RationalMonomial, x: Mapping[Pair, Fraction]) -> dict[Pair, Fraction]:
    """Action of the smeared mode v f(t) on M1 (x) M2.

    The first factor sees the expansion about 0 of f(t + w), the second that
    of f(t); a term t^p acts as the math-indexed mode v_p.
    """
    weight = mod1.pres.generator(generator).weight
    g = f.translate()
    out: dict[Pair, Fraction] = {}
    for (w1, w2), c in x.items():
        top1 = word_level(w1) + weight - 1
        for p, cf in iota_expand(g, "plus", max(0, top1 - g.a + 1)):
            add_into(out, {(u, w2): cu for u, cu in mod1.act_word(Mode(generator, p - weight + 1), w1).items()},
                     c * cf)
        top2 = word_level(w2) + weight - 1
        for p, cf in iota_expand(f, "plus", max(0, top2 - f.a + 1)):
            add_into(out, {(w1, u): cu for u, cu in mod2.act_word(Mode(generator, p - weight + 1), w2).items()},
                     c * cf)
    return out


def hlz_coproduct(generator: str, f: RationalMonomial, x: TensorElement, spec1: ModuleSpec,
                  spec2: ModuleSpec) -> TensorElement:
    return TensorElement.from_dict(hlz_coproduct_vec(module_of(spec1), module_of(spec2), generator, f,
                                                     x.as_dict()))


def _nonzero(w: RatLike) -> Fraction:
    w = rat(w)
    if w == 0:
        raise ValueError("insertion point w must be nonzero")
    return w


def math_mode_index(mode: Mode, spec: ModuleSpec) -> int:
    return math_index(mode, spec.presentation)
