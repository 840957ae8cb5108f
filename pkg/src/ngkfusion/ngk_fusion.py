"""Depth-truncated fusion quotients.

The free tensor space F_L is spanned by pairs of basis vectors of total
level <= L.  The depth-d fusion quotient is F_L modulo

* R1  singular-vector relations (implicit when the factors are already the
      quotient modules; explicit when working on the Verma covers),
* R2  delta2(W) b for every canonical word W of raising modes of total
      degree > d (these words act as zero at depth d),
* R3  the translation relations delta1(v_n) b - sum_m C(n,m)(-w)^m delta2(v_{n-m}) b,
      keeping only the terms of depth <= d,

where b runs over basis tensors with enough headroom to stay inside F_L.
The candidate space M1^ss (x) M2^(d) is placed first in the column order so
that, after elimination with pivots on the latest column, the surviving
candidate columns are the quotient basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .chiral_algebra import Mode, Word, negative_words, word_level
from .coproduct import (
    Pair,
    TensorElement,
    add_into,
    delta2_vec,
    pair_label,
    pair_level,
    pair_sort_key,
    translation_reach,
    translation_vec,
)
from .exact_linalg import EchelonSpace, JordanReport, RatLike, RatMatrix, jordan_structure, rat, rat_str
from .hw_modules import HighestWeightModule, ModuleSpec, module_of


class NotStabilized(RuntimeError):
    """Truncation too small: results changed between consecutive cutoffs."""


class CandidateNotSpanning(AssertionError):
    """The candidate space failed to span the truncated quotient."""


class DepthMismatch(ValueError):
    pass


# -- module-side quotients ---------------------------------------------------------

def _stab_window(spec: ModuleSpec) -> int:
    return max(g.weight for g in spec.presentation.generators)


def _level_quotient(mod: HighestWeightModule, n: int, vectors: Sequence[dict]) -> list[Word]:
    basis = mod.level_basis(n)
    index = {w: i for i, w in enumerate(basis)}
    space = EchelonSpace()
    for v in vectors:
        space.add({index[w]: c for w, c in v.items()})
    return [w for i, w in enumerate(basis) if i not in space.rows]


def special_subspace(spec: ModuleSpec, cutoff: int) -> list[Word]:
    """Basis of M / C1(M), C1(M) spanned by x(-n) M with n >= weight(x).

    Levels are processed up to ``cutoff``; the quotient must vanish on the
    top ``max weight`` levels, otherwise :class:`NotStabilized` is raised.
    """
    mod = module_of(spec)
    pres = spec.presentation
    window = _stab_window(spec)
    if cutoff < window:
        raise NotStabilized(f"cutoff {cutoff} is below the stabilization window {window}")
    out: list[Word] = []
    for n in range(cutoff + 1):
        vecs = []
        for g in pres.generators:
            for k in range(g.weight, n + 1):
                for b in mod.level_basis(n - k):
                    vecs.append(mod.act_word(Mode(g.name, -k), b))
        reps = _level_quotient(mod, n, vecs)
        if reps and n > cutoff - window:
            raise NotStabilized(f"special subspace still nonzero at level {n} (cutoff {cutoff})")
        out += reps
    return out


def depth_quotient(spec: ModuleSpec, d: int, cutoff: int) -> list[Word]:
    """Basis of M^(d) = M / U_{>d} M, U_{>d} spanned by raising words of degree > d."""
    if d < 0:
        raise ValueError("depth must be >= 0")
    if cutoff < d + 2:
        raise NotStabilized(f"cutoff {cutoff} must be at least depth + 2")
    mod = module_of(spec)
    out: list[Word] = []
    for n in range(cutoff + 1):
        vecs = []
        for deg in range(d + 1, n + 1):
            for wd in negative_words(spec.presentation, deg):
                for b in mod.level_basis(n - deg):
                    vecs.append(mod.apply(wd, {b: Fraction(1)}))
        reps = _level_quotient(mod, n, vecs)
        if reps and n >= cutoff - 1:
            raise NotStabilized(f"depth-{d} quotient still nonzero at level {n} (cutoff {cutoff})")
        out += reps
    return out


def _module_cutoff(spec: ModuleSpec, d: int) -> int:
    return max(d + 2, _stab_window(spec)) + max(spec.singular_levels, default=0) + 1


# -- the truncated tensor space --------------------------------------------------------

class FusionSpace:
    """Truncated free tensor space with its relation eliminator."""

    def __init__(self, spec1: ModuleSpec, spec2: ModuleSpec, d: int, w: Fraction, lmax: int,
                 cover: bool = False) -> None:
        if d < 0:
            raise ValueError("depth must be >= 0")
        if lmax < d:
            raise ValueError("lmax must be >= depth")
        self.spec1, self.spec2 = spec1, spec2
        self.d, self.w, self.lmax, self.cover = d, w, lmax, cover
        self.qmod1, self.qmod2 = module_of(spec1), module_of(spec2)
        self.mod1 = module_of(spec1.verma) if cover else self.qmod1
        self.mod2 = module_of(spec2.verma) if cover else self.qmod2
        ss = special_subspace(spec1, _module_cutoff(spec1, 0))
        dq = depth_quotient(spec2, d, _module_cutoff(spec2, d))
        self.candidates = sorted(((a, b) for a in ss for b in dq), key=pair_sort_key)
        cand = set(self.candidates)
        others = []
        for l1 in range(lmax + 1):
            for l2 in range(lmax - l1 + 1):
                for a in self.mod1.level_basis(l1):
                    for b in self.mod2.level_basis(l2):
                        if (a, b) not in cand:
                            others.append((a, b))
        others.sort(key=pair_sort_key)
        self.pairs: list[Pair] = [p for p in self.candidates if pair_level(p) <= lmax] + others
        self.column = {p: i for i, p in enumerate(self.pairs)}
        self.space = EchelonSpace()
        self.relation_count = 0
        self._r2_memo: dict[tuple[Word, Pair], dict[Pair, Fraction]] = {}

    # relation families -----------------------------------------------------------

    def _word_action(self, word: Word, p: Pair) -> dict[Pair, Fraction]:
        key = (word, p)
        hit = self._r2_memo.get(key)
        if hit is not None:
            return hit
        if not word:
            out = {p: Fraction(1)}
        else:
            inner = self._word_action(word[1:], p)
            out = delta2_vec(self.mod1, self.mod2, word[0], self.w, inner)
        self._r2_memo[key] = out
        return out

    def r1(self) -> list[dict[Pair, Fraction]]:
        if not self.cover:
            return []
        rels = []
        for l1 in range(self.lmax + 1):
            subs1 = self.qmod1.submodule_vectors(l1) if self.spec1.singular_relations else []
            for l2 in range(self.lmax - l1 + 1):
                for s in subs1:
                    for b in self.mod2.level_basis(l2):
                        rels.append({(a, b): c for a, c in s.items()})
        for l2 in range(self.lmax + 1):
            subs2 = self.qmod2.submodule_vectors(l2) if self.spec2.singular_relations else []
            for l1 in range(self.lmax - l2 + 1):
                for s in subs2:
                    for a in self.mod1.level_basis(l1):
                        rels.append({(a, b): c for b, c in s.items()})
        return rels

    def r2(self) -> list[dict[Pair, Fraction]]:
        rels = []
        for p in self.pairs:
            room = self.lmax - pair_level(p)
            for deg in range(self.d + 1, room + 1):
                for wd in negative_words(self.spec1.presentation, deg):
                    rels.append(self._word_action(wd, p))
        return rels

    def r3(self) -> list[dict[Pair, Fraction]]:
        rels = []
        gens = self.spec1.presentation.generators
        for p in self.pairs:
            room = self.lmax - pair_level(p)
            for k in range(1, room + 1):
                for g in gens:
                    if translation_reach(Mode(g.name, -k), g.weight, self.d) > room:
                        continue
                    rels.append(translation_vec(self.mod1, self.mod2, Mode(g.name, -k), self.w, {p: Fraction(1)},
                                                self.d))
        return rels

    def relations(self) -> list[dict[Pair, Fraction]]:
        return self.r1() + self.r2() + self.r3()

    def build(self) -> FusionSpace:
        for rel in self.relations():
            if rel:
                self.relation_count += 1
                self.space.add(self._columns(rel))
        return self

    # reduction -------------------------------------------------------------------------

    def _columns(self, vec: dict[Pair, Fraction]) -> dict[int, Fraction]:
        try:
            return {self.column[p]: c for p, c in vec.items()}
        except KeyError as exc:
            raise AssertionError(f"tensor {pair_label(exc.args[0])} left the truncation") from None

    def representatives(self) -> list[Pair]:
        return [p for p in self.candidates if self.column[p] not in self.space.rows]

    def reduce(self, vec: dict[Pair, Fraction]) -> dict[Pair, Fraction]:
        out = self.space.reduce(self._columns(vec))
        return {self.pairs[k]: c for k, c in out.items()}

    def coordinates(self, vec: dict[Pair, Fraction], reps: Sequence[Pair]) -> list[Fraction]:
        nf = self.reduce(vec)
        index = {p: i for i, p in enumerate(reps)}
        out = [Fraction(0)] * len(reps)
        for p, c in nf.items():
            if p not in index:
                raise CandidateNotSpanning(f"{pair_label(p)} is not reduced to the candidate basis "
                                           f"at lmax={self.lmax}")
            out[index[p]] = c
        return out

    def spurious_states(self) -> list[dict[Pair, Fraction]]:
        """Relations supported on the candidate space (candidate columns come first)."""
        ncand = len(self.candidates)
        return [{self.pairs[k]: c for k, c in self.space.reduced_row(piv).items()}
                for piv in sorted(self.space.rows) if piv < ncand]

    def check_spanning(self, level: int) -> None:
        ncand = len(self.candidates)
        for i in range(ncand, len(self.pairs)):
            p = self.pairs[i]
            if pair_level(p) > level:
                break
            if i not in self.space.rows:
                raise CandidateNotSpanning(f"{pair_label(p)} is independent of the candidate space "
                                           f"at lmax={self.lmax}")


# -- L(0) and zero modes on the quotient ------------------------------------------------

def _has_virasoro(spec: ModuleSpec) -> bool:
    try:
        return spec.presentation.generator("L").weight == 2
    except KeyError:
        return False


def l0_action(fs: FusionSpace, vec: dict[Pair, Fraction], depth: int) -> dict[Pair, Fraction]:
    """L(0) through the (w, 0) coproduct.

    For the Heisenberg algebra L(0) = a(0)^2/2 + sum_{n>=1} a(-n) a(n); at depth
    d the terms with n > d vanish because a(-n) acts as zero there.
    """
    m1, m2, w = fs.mod1, fs.mod2, fs.w
    if _has_virasoro(fs.spec1):
        return delta2_vec(m1, m2, Mode("L", 0), w, vec)
    gens = fs.spec1.presentation.generators
    if len(gens) == 1 and gens[0].weight == 1:
        a = gens[0].name
        zero = delta2_vec(m1, m2, Mode(a, 0), w, vec)
        out = {p: c / 2 for p, c in delta2_vec(m1, m2, Mode(a, 0), w, zero).items()}
        for n in range(1, depth + 1):
            low = delta2_vec(m1, m2, Mode(a, n), w, vec)
            add_into(out, delta2_vec(m1, m2, Mode(a, -n), w, low))
        return out
    raise NotImplementedError("no L(0) available for this presentation")


# -- results ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class FusionResult:
    spec1: ModuleSpec
    spec2: ModuleSpec
    basis_pairs: tuple[Pair, ...]
    l0_matrix: RatMatrix
    jordan: JordanReport
    spurious_states: tuple[TensorElement, ...]
    graded_dims: tuple[tuple[Fraction, int], ...]
    zero_mode_matrices: tuple[tuple[str, RatMatrix], ...]
    relation_count: int
    candidate_count: int
    stabilized_at: int
    w: Fraction
    depth: int
    lmax: int
    cover: bool = False
    _space: FusionSpace | None = field(default=None, compare=False, repr=False, hash=False)

    @property
    def dimension(self) -> int:
        return len(self.basis_pairs)

    @property
    def basis(self) -> list[str]:
        return [pair_label(p) for p in self.basis_pairs]

    @property
    def graded(self) -> dict[Fraction, int]:
        return dict(self.graded_dims)

    def to_json(self) -> dict:
        return {
            "basis": self.basis,
            "dimension": self.dimension,
            "candidate_count": self.candidate_count,
            "relation_count": self.relation_count,
            "l0_matrix": self.l0_matrix.to_strings(),
            "matrix_convention": "column j is the image of basis vector j",
            "jordan": self.jordan.to_json(),
            "residual_factors": [[[rat_str(c) for c in coeffs], mult]
                                 for coeffs, mult in self.jordan.residual_factors],
            "graded_dims": {rat_str(k): v for k, v in self.graded_dims},
            "zero_mode_matrices": {g: m.to_strings() for g, m in self.zero_mode_matrices},
            "spurious_states": [s.to_json() for s in self.spurious_states],
            "stabilized_at": self.stabilized_at,
            "w": rat_str(self.w),
            "depth": self.depth,
            "lmax": self.lmax,
        }


def lmax_floor(spec1: ModuleSpec, spec2: ModuleSpec, d: int) -> int:
    sing = max(spec1.singular_levels + spec2.singular_levels, default=0)
    return d + sing + 2


def _compute(spec1: ModuleSpec, spec2: ModuleSpec, d: int, w: Fraction, lmax: int, cover: bool) -> FusionResult:
    fs = FusionSpace(spec1, spec2, d, w, lmax, cover).build()
    reps = fs.representatives()
    top = max((pair_level(p) for p in fs.candidates), default=0)
    fs.check_spanning(min(top + 1, lmax))
    cols = [fs.coordinates(l0_action(fs, {p: Fraction(1)}, d), reps) for p in reps]
    l0 = RatMatrix.from_columns(cols, rows=len(reps)) if reps else RatMatrix.zeros(0, 0)
    jordan = jordan_structure(l0)
    graded = tuple((lam, sum(sizes)) for lam, sizes in jordan.blocks)
    zero_modes = []
    if not _has_virasoro(spec1):
        for g in spec1.presentation.generator_names:
            zcols = [fs.coordinates(delta2_vec(fs.mod1, fs.mod2, Mode(g, 0), w, {p: Fraction(1)}), reps)
                     for p in reps]
            zero_modes.append((g, RatMatrix.from_columns(zcols, rows=len(reps)) if reps
                               else RatMatrix.zeros(0, 0)))
    spurious = tuple(TensorElement.from_dict(s) for s in fs.spurious_states())
    return FusionResult(spec1, spec2, tuple(reps), l0, jordan, spurious, graded, tuple(zero_modes),
                        fs.relation_count, len(fs.candidates), lmax, w, d, lmax, cover, fs)


def fuse(spec1: ModuleSpec, spec2: ModuleSpec, d: int, w: RatLike = 1, lmax: int | None = None,
         cover: bool = False, enforce_floor: bool = True, escalate: int = 0) -> FusionResult:
    """Depth-d fusion quotient, accepted only if it repeats at lmax + 1.

    With lmax omitted the search starts at the floor and, if ``escalate`` > 0,
    retries up to that many larger truncations before giving up.
    """
    w = rat(w)
    if w == 0:
        raise ValueError("w must be nonzero")
    if spec1.presentation != spec2.presentation:
        raise ValueError("both modules must be over the same algebra")
    floor = lmax_floor(spec1, spec2, d)
    if lmax is not None:
        if enforce_floor and lmax < floor:
            raise ValueError(f"lmax={lmax} is below the floor depth + max singular level + 2 = {floor}")
        return _stable(spec1, spec2, d, w, lmax, cover)
    for attempt in range(escalate + 1):
        try:
            return _stable(spec1, spec2, d, w, floor + attempt, cover)
        except (NotStabilized, CandidateNotSpanning):
            if attempt == escalate:
                raise
    raise AssertionError("unreachable")


def _stable(spec1: ModuleSpec, spec2: ModuleSpec, d: int, w: Fraction, lmax: int, cover: bool) -> FusionResult:
    first = _compute(spec1, spec2, d, w, lmax, cover)
    second = _compute(spec1, spec2, d, w, lmax + 1, cover)
    same = (first.basis_pairs == second.basis_pairs and first.graded_dims == second.graded_dims
            and first.l0_matrix == second.l0_matrix)
    if not same:
        raise NotStabilized(
            f"results differ between lmax={lmax} (dim {first.dimension}) and lmax={lmax + 1} "
            f"(dim {second.dimension})")
    return first


def generate_relations(spec1: ModuleSpec, spec2: ModuleSpec, d: int, w: RatLike, lmax: int,
                       cover: bool = False) -> list[TensorElement]:
    """All R1-R3 relation vectors in the truncated tensor space, in generation order."""
    fs = FusionSpace(spec1, spec2, d, rat(w), lmax, cover)
    return [TensorElement.from_dict(r) for r in fs.relations() if r]


def mode_action(source: FusionResult, target: FusionResult, mode: Mode) -> RatMatrix:
    """Matrix of delta2(mode) from the source quotient to the target quotient.

    A mode x(k) maps depth d to depth d - k, so the target depth may be at
    most source.depth - k.  Column j is the image of source basis vector j.
    """
    if (source.spec1, source.spec2, source.w, source.lmax) != (target.spec1, target.spec2, target.w, target.lmax):
        raise DepthMismatch("source and target must share modules, w and lmax")
    if target.depth > source.depth - mode.index:
        raise DepthMismatch(f"{mode} maps depth {source.depth} to at most depth {source.depth - mode.index}, "
                            f"not {target.depth}")
    fs_t = target._space
    if fs_t is None:
        raise DepthMismatch("target result carries no reducer")
    reps_t = list(target.basis_pairs)
    cols = []
    for p in source.basis_pairs:
        img = delta2_vec(fs_t.mod1, fs_t.mod2, mode, source.w, {p: Fraction(1)})
        cols.append(fs_t.coordinates(img, reps_t))
    return RatMatrix.from_columns(cols, rows=len(reps_t)) if cols else RatMatrix.zeros(len(reps_t), 0)
