"""Highest-weight modules over a Lie-type chiral algebra.

A module is the Verma module on a highest-weight vector quotiented by the
submodule generated by a list of singular vectors.  Vectors are stored as
dicts ``{word: coefficient}`` where each word is a canonical PBW monomial of
negative modes applied to the highest-weight vector.  In a quotient module
only representative words occur: at each level the submodule is eliminated
with pivots on the latest basis monomial, so the earliest monomials survive.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .chiral_algebra import (
    AlgebraElement,
    AlgebraPresentation,
    Mode,
    Word,
    heisenberg,
    negative_words,
    opp_word,
    virasoro,
    word_label,
    word_level,
)
from .exact_linalg import EchelonSpace, RatLike, RatMatrix, kernel_basis, rat, rat_str, rref

Vec = dict  # Word -> Fraction


class InvalidSingularRelation(ValueError):
    pass


@dataclass(frozen=True)
class ModuleSpec:
    """Highest-weight module data.

    ``highest_weight`` is the conformal weight of the highest-weight vector;
    ``zero_modes`` gives the eigenvalue of every zero mode x(0) on it (for the
    Virasoro algebra L(0) -> h, for the Heisenberg algebra a(0) -> momentum).
    """

    presentation: AlgebraPresentation
    highest_weight: Fraction
    zero_modes: tuple[tuple[str, Fraction], ...]
    singular_relations: tuple[tuple[int, AlgebraElement], ...] = ()
    name: str = "M"

    def __post_init__(self) -> None:
        names = set(self.presentation.generator_names)
        if set(g for g, _ in self.zero_modes) != names:
            raise ValueError("zero-mode eigenvalues must be given for every generator")
        for level, rel in self.singular_relations:
            _check_relation(self, level, rel)

    @property
    def verma(self) -> ModuleSpec:
        if not self.singular_relations:
            return self
        return ModuleSpec(self.presentation, self.highest_weight, self.zero_modes, (), self.name)

    def zero_mode(self, generator: str) -> Fraction:
        return dict(self.zero_modes)[generator]

    @property
    def singular_levels(self) -> list[int]:
        return [lvl for lvl, _ in self.singular_relations]

    def describe(self) -> dict:
        out: dict = {"algebra": self.presentation.name, "singular_levels": self.singular_levels}
        if self.presentation.name == "virasoro":
            out["c"] = rat_str(self.presentation.param("c"))
            out["h"] = rat_str(self.highest_weight)
        else:
            out["zero_modes"] = {g: rat_str(x) for g, x in self.zero_modes}
            out["weight"] = rat_str(self.highest_weight)
        return out


def virasoro_module(c: RatLike, h: RatLike, relations: Sequence[tuple[int, AlgebraElement]] = (),
                    name: str = "M") -> ModuleSpec:
    h = rat(h)
    return ModuleSpec(virasoro(c), h, (("L", h),), tuple(relations), name)


def heisenberg_module(momentum: RatLike, name: str = "F") -> ModuleSpec:
    """Fock module: hw eigenvalue of a(0) is the momentum, weight momentum^2 / 2."""
    lam = rat(momentum)
    return ModuleSpec(heisenberg(), lam * lam / 2, (("a", lam),), (), name)


# -- the computational object --------------------------------------------------

class HighestWeightModule:
    """Cached linear algebra for one ModuleSpec (use :func:`module_of`)."""

    def __init__(self, spec: ModuleSpec) -> None:
        self.spec = spec
        self.pres = spec.presentation
        self._verma_act: dict[tuple[Mode, Word], dict[Word, Fraction]] = {}
        self._act: dict[tuple[Mode, Word], dict[Word, Fraction]] = {}
        self._levels: dict[int, tuple[list[Word], dict[Word, int], EchelonSpace]] = {}
        self._lock = threading.RLock()

    # Verma module ------------------------------------------------------------

    def verma_basis(self, n: int) -> list[Word]:
        return negative_words(self.pres, n)

    def verma_act_word(self, mode: Mode, word: Word) -> dict[Word, Fraction]:
        """mode . (word |hw>) in the Verma module, canonical words only."""
        key = (mode, word)
        hit = self._verma_act.get(key)
        if hit is not None:
            return hit
        out: dict[Word, Fraction] = {}
        if not word:
            if mode.index < 0:
                out[(mode,)] = Fraction(1)
            elif mode.index == 0:
                ev = self.spec.zero_mode(mode.generator)
                if ev:
                    out[()] = ev
        elif mode.index < 0 and mode.key <= word[0].key:
            out[(mode,) + word] = Fraction(1)
        else:
            # x w0 rest = w0 (x rest) + [x, w0] rest
            first, rest = word[0], word[1:]
            for w2, c2 in self.verma_act_word(mode, rest).items():
                for w3, c3 in self.verma_act_word(first, w2).items():
                    out[w3] = out.get(w3, 0) + c2 * c3
            modes, cen = self.pres.bracket_modes(mode, first)
            for md, c in modes.items():
                for w3, c3 in self.verma_act_word(md, rest).items():
                    out[w3] = out.get(w3, 0) + c * c3
            if cen:
                out[rest] = out.get(rest, 0) + cen
            out = {w: c for w, c in out.items() if c}
        self._verma_act[key] = out
        return out

    def verma_act(self, mode: Mode, vec: Mapping[Word, Fraction]) -> dict[Word, Fraction]:
        out: dict[Word, Fraction] = {}
        for w, c in vec.items():
            for w2, c2 in self.verma_act_word(mode, w).items():
                out[w2] = out.get(w2, 0) + c * c2
        return {w: c for w, c in out.items() if c}

    def verma_apply(self, word: Sequence[Mode], vec: Mapping[Word, Fraction]) -> dict[Word, Fraction]:
        """Apply a word of modes (rightmost acts first) in the Verma module."""
        out = dict(vec)
        for md in reversed(tuple(word)):
            out = self.verma_act(md, out)
        return out

    def element_on_hw(self, x: AlgebraElement) -> dict[Word, Fraction]:
        out: dict[Word, Fraction] = {}
        for w, c in x.terms:
            for w2, c2 in self.verma_apply(w, {(): Fraction(1)}).items():
                out[w2] = out.get(w2, 0) + c * c2
        return {w: c for w, c in out.items() if c}

    # quotient module ----------------------------------------------------------

    def _level(self, n: int) -> tuple[list[Word], dict[Word, int], EchelonSpace]:
        hit = self._levels.get(n)
        if hit is not None:
            return hit
        with self._lock:
            hit = self._levels.get(n)
            if hit is not None:
                return hit
            basis = self.verma_basis(n)
            index = {w: i for i, w in enumerate(basis)}
            space = EchelonSpace()
            for k, rel in self.spec.singular_relations:
                if k > n:
                    continue
                s = self.element_on_hw(rel)
                for wd in self.verma_basis(n - k):
                    v = self.verma_apply(wd, s)
                    space.add({index[w]: c for w, c in v.items()})
            self._levels[n] = (basis, index, space)
            return self._levels[n]

    def level_basis(self, n: int) -> list[Word]:
        if n < 0:
            return []
        basis, _, space = self._level(n)
        return [w for i, w in enumerate(basis) if i not in space.rows]

    def level_dim(self, n: int) -> int:
        return len(self.level_basis(n))

    def submodule_rank(self, n: int) -> int:
        return len(self._level(n)[2])

    def submodule_vectors(self, n: int) -> list[dict[Word, Fraction]]:
        """Canonical spanning rows of the singular submodule at level n (Verma words)."""
        basis, _, space = self._level(n)
        return [{basis[k]: c for k, c in space.reduced_row(p).items()} for p in sorted(space.rows)]

    def reduce(self, vec: Mapping[Word, Fraction]) -> dict[Word, Fraction]:
        """Canonical representative of a Verma vector in the quotient."""
        by_level: dict[int, dict[int, Fraction]] = {}
        for w, c in vec.items():
            if not c:
                continue
            n = word_level(w)
            _, index, _ = self._level(n)
            lv = by_level.setdefault(n, {})
            lv[index[w]] = lv.get(index[w], 0) + c
        out: dict[Word, Fraction] = {}
        for n, v in by_level.items():
            basis, _, space = self._level(n)
            for k, c in space.reduce(v).items():
                out[basis[k]] = c
        return out

    def act_word(self, mode: Mode, word: Word) -> dict[Word, Fraction]:
        key = (mode, word)
        hit = self._act.get(key)
        if hit is None:
            hit = self.reduce(self.verma_act_word(mode, word))
            self._act[key] = hit
        return hit

    def act(self, mode: Mode, vec: Mapping[Word, Fraction]) -> dict[Word, Fraction]:
        out: dict[Word, Fraction] = {}
        for w, c in vec.items():
            for w2, c2 in self.act_word(mode, w).items():
                out[w2] = out.get(w2, 0) + c * c2
        return {w: c for w, c in out.items() if c}

    def apply(self, word: Sequence[Mode], vec: Mapping[Word, Fraction]) -> dict[Word, Fraction]:
        out = dict(vec)
        for md in reversed(tuple(word)):
            out = self.act(md, out)
        return out


_MODULES: dict[ModuleSpec, HighestWeightModule] = {}
_MODULES_LOCK = threading.Lock()


def module_of(spec: ModuleSpec) -> HighestWeightModule:
    mod = _MODULES.get(spec)
    if mod is None:
        with _MODULES_LOCK:
            mod = _MODULES.setdefault(spec, HighestWeightModule(spec))
    return mod


# -- graded vectors ------------------------------------------------------------

@dataclass(frozen=True)
class GradedVector:
    """Module element as canonical-word coefficients; see :meth:`by_level`."""

    terms: tuple[tuple[Word, Fraction], ...] = ()

    @classmethod
    def from_dict(cls, d: Mapping[Word, Fraction]) -> GradedVector:
        return cls(tuple(sorted(((w, rat(c)) for w, c in d.items() if c),
                                key=lambda t: (word_level(t[0]), tuple(m.key for m in t[0])))))

    @classmethod
    def highest_weight(cls) -> GradedVector:
        return cls((((), Fraction(1)),))

    def as_dict(self) -> dict[Word, Fraction]:
        return dict(self.terms)

    def by_level(self, spec: ModuleSpec) -> dict[int, tuple[Fraction, ...]]:
        """Level -> coefficient vector over ``level_basis(spec, level)``."""
        out: dict[int, list[Fraction]] = {}
        mod = module_of(spec)
        for w, c in self.terms:
            n = word_level(w)
            basis = mod.level_basis(n)
            vec = out.setdefault(n, [Fraction(0)] * len(basis))
            vec[basis.index(w)] += c
        return {n: tuple(v) for n, v in sorted(out.items())}

    def to_json(self) -> dict[str, str]:
        return {(word_label(w) or "1"): rat_str(c) for w, c in self.terms}

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"({rat_str(c)})*{word_label(w)}|hw" for w, c in self.terms)


def basis_label(word: Word) -> str:
    return f"{word_label(word)}|hw"


def level_basis(spec: ModuleSpec, n: int) -> list[Word]:
    """Canonical basis of the level-n component of the quotient module."""
    if n < 0:
        raise ValueError("level must be non-negative")
    return module_of(spec).level_basis(n)


def vector(spec: ModuleSpec, d: Mapping[Word, RatLike]) -> GradedVector:
    """Build a reduced vector from (possibly non-representative) Verma words."""
    mod = module_of(spec)
    canon: dict[Word, Fraction] = {}
    for w, c in d.items():
        for w2, c2 in mod.element_on_hw(AlgebraElement.word(*w)).items():
            canon[w2] = canon.get(w2, 0) + rat(c) * c2
    return GradedVector.from_dict(mod.reduce(canon))


def act(m: Mode, v: GradedVector, spec: ModuleSpec) -> GradedVector:
    """Apply a single mode; the level shifts by -m.index."""
    return GradedVector.from_dict(module_of(spec).act(m, v.as_dict()))


def reduce(spec: ModuleSpec, v: GradedVector) -> GradedVector:
    return GradedVector.from_dict(module_of(spec).reduce(v.as_dict()))


def gram_matrix(spec: ModuleSpec, n: int) -> RatMatrix:
    """Contravariant form on the level-n Verma basis: <X hw, Y hw> = hw-coefficient of opp(X) Y hw."""
    mod = module_of(spec.verma)
    basis = mod.verma_basis(n)
    rows = []
    for x in basis:
        sign, ox = opp_word(x, spec.presentation)
        row = []
        for y in basis:
            v = mod.verma_apply(ox, {y: Fraction(1)})
            row.append(sign * v.get((), Fraction(0)))
        rows.append(row)
    return RatMatrix.from_rows(rows, cols=len(basis))


def _normalization_key(w: Word):
    # reading order from the highest-weight vector outwards: L(-1)L(-1) < L(-2)
    return tuple((m.raise_by, m.generator) for m in reversed(w))


def _canonical_span(vectors: list[dict[Word, Fraction]]) -> list[dict[Word, Fraction]]:
    """Reduced echelon basis of a span, columns in normalization order."""
    if not vectors:
        return []
    cols = sorted({w for v in vectors for w in v}, key=_normalization_key)
    m = RatMatrix.from_rows([[v.get(w, Fraction(0)) for w in cols] for v in vectors], cols=len(cols))
    rows, _ = rref(m)
    return [{w: x for w, x in zip(cols, r) if x} for r in rows]


def _positive_modes(pres: AlgebraPresentation, n: int) -> list[Mode]:
    return [Mode(g, k) for k in range(1, n + 1) for g in pres.generator_names]


def find_singular_vectors(spec: ModuleSpec, n: int) -> list[AlgebraElement]:
    """Singular vectors at level n of the Verma cover.

    Starts from the kernel of the level-n Gram matrix and keeps the
    combinations annihilated by every positive generator mode x(k),
    1 <= k <= n.  The result is in reduced echelon form with monomials
    ordered by :func:`_normalization_key`, so the first monomial has
    coefficient 1.
    """
    if n < 1:
        raise ValueError("singular vectors live at positive levels")
    mod = module_of(spec.verma)
    basis = mod.verma_basis(n)
    kernel = kernel_basis(gram_matrix(spec, n))
    if not kernel:
        return []
    kvecs = [{w: c for w, c in zip(basis, v) if c} for v in kernel]
    # combined action of positive modes on the kernel, one column per kernel vector
    coords: dict[tuple[Mode, Word], int] = {}
    columns = []
    for v in kvecs:
        col: dict[int, Fraction] = {}
        for md in _positive_modes(spec.presentation, n):
            for w, c in mod.verma_act(md, v).items():
                col[coords.setdefault((md, w), len(coords))] = c
        columns.append(col)
    a = RatMatrix.from_rows([[col.get(i, Fraction(0)) for col in columns] for i in range(len(coords))],
                            cols=len(columns))
    combos = kernel_basis(a) if coords else [tuple(Fraction(int(i == j)) for j in range(len(kvecs)))
                                              for i in range(len(kvecs))]
    sing = []
    for cvec in combos:
        v: dict[Word, Fraction] = {}
        for c, kv in zip(cvec, kvecs):
            for w, x in kv.items():
                v[w] = v.get(w, 0) + c * x
        sing.append({w: x for w, x in v.items() if x})
    return [AlgebraElement.from_dict(v) for v in _canonical_span(sing)]


def is_singular(spec: ModuleSpec, level: int, rel: AlgebraElement) -> bool:
    mod = module_of(spec.verma)
    v = mod.element_on_hw(rel)
    return all(not mod.verma_act(md, v) for md in _positive_modes(spec.presentation, level))


def _check_relation(spec: ModuleSpec, level: int, rel: AlgebraElement) -> None:
    if level < 1:
        raise InvalidSingularRelation("singular relations live at positive levels")
    for w, _ in rel.terms:
        if word_level(w) != level or any(m.index >= 0 for m in w):
            raise InvalidSingularRelation(f"relation term {word_label(w)} is not a level-{level} raising word")
    verma = spec.verma
    mod = module_of(verma)
    vec = mod.element_on_hw(rel)
    if not vec:
        raise InvalidSingularRelation("relation vanishes identically")
    g = gram_matrix(verma, level)
    basis = mod.verma_basis(level)
    coords = [vec.get(w, Fraction(0)) for w in basis]
    if any(x for x in g.apply(coords)):
        raise InvalidSingularRelation("relation is not in the kernel of the Gram matrix")
    if not is_singular(verma, level, rel):
        raise InvalidSingularRelation("relation is not annihilated by the positive modes")


def auto_singular_relations(spec: ModuleSpec, max_level: int) -> tuple[tuple[int, AlgebraElement], ...]:
    """Singular vectors up to ``max_level`` that are new modulo those already found."""
    found: list[tuple[int, AlgebraElement]] = []
    base = spec.verma
    for n in range(1, max_level + 1):
        current = ModuleSpec(base.presentation, base.highest_weight, base.zero_modes, tuple(found), base.name)
        mod = module_of(current)
        for rel in find_singular_vectors(base, n):
            v = mod.verma_apply((), module_of(base).element_on_hw(rel))
            if mod.reduce(v):
                found.append((n, rel))
                current = ModuleSpec(base.presentation, base.highest_weight, base.zero_modes,
                                     tuple(found), base.name)
                mod = module_of(current)
    return tuple(found)


def with_relations(spec: ModuleSpec, relations: Iterable[tuple[int, AlgebraElement]]) -> ModuleSpec:
    return ModuleSpec(spec.presentation, spec.highest_weight, spec.zero_modes, tuple(relations), spec.name)


def singular_at_levels(spec: ModuleSpec, levels: Iterable[int]) -> ModuleSpec:
    """Impose every singular vector of the Verma cover found at the given levels."""
    rels = []
    for n in sorted(set(levels)):
        vecs = find_singular_vectors(spec.verma, n)
        if not vecs:
            raise InvalidSingularRelation(f"no singular vector at level {n}")
        rels += [(n, v) for v in vecs]
    return with_relations(spec, rels)
