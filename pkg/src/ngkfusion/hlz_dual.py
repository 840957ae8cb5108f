"""Dual-side fusion: compatible functionals on the truncated tensor space.

A functional psi* on M1 (x) M2 carries the contragredient action

    <x(k) psi*, psi1 (x) psi2> = (-1)^h <psi*, delta2(x(-k)) (psi1 (x) psi2)>,

written out explicitly below (it deliberately does not call the coproduct
module).  Compatible functionals at depth d satisfy

  (i)  W psi* = 0 for every word W of lowering modes of total degree > d;
  (ii) for n <= -1, the action of the smeared mode v t^{h-1}(t^{-1} - w)^n
       computed through its adjoint v t^{h-1}(t - w)^n (evaluated with the
       three-point coproduct) equals the action of its expansion about t = 0,
       truncated to modes of degree <= d.

Every constraint is a vector r with <psi*, r> = 0, so solving the system is
an elimination on the same tensor basis as the quotient side.  The values on
the candidate tensors are the unknowns; they are placed first in the column
order so all other values get expressed through them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Mapping

from .chiral_algebra import Mode, Word, negative_words, opp_word, word_level
from .coproduct import (
    Pair,
    RationalMonomial,
    TensorElement,
    add_into,
    binom,
    hlz_coproduct_vec,
    iota_expand,
    pair_label,
    pair_level,
    pair_sort_key,
)
from .exact_linalg import EchelonSpace, JordanReport, RatLike, RatMatrix, jordan_structure, rat, rat_str
from .hw_modules import HighestWeightModule, ModuleSpec, module_of


class TruncationBreach(ValueError):
    """An argument tensor left the truncated domain of a functional."""


class CrosscheckMismatch(AssertionError):
    pass


class UnderdeterminedValues(RuntimeError):
    """Some required value is not fixed by the unknowns at this truncation."""


# -- the adjoint action -------------------------------------------------------------

def _pullback(mod1: HighestWeightModule, mod2: HighestWeightModule, mode: Mode, w: Fraction,
              x: Mapping[Pair, Fraction]) -> dict[Pair, Fraction]:
    """y with <mode . psi*, x> = <psi*, y>.

    For the Virasoro field this is
    <L(n) psi*, a (x) b> = sum_m C(1-n, m) w^(1-n-m) <psi*, L(m-1)a (x) b> + <psi*, a (x) L(-n)b>.
    """
    gen = mode.generator
    h = mod1.pres.generator(gen).weight
    sign = Fraction((-1) ** h)
    top = -mode.index + h - 1  # math index of the adjoint mode x(-k)
    out: dict[Pair, Fraction] = {}
    for (a, b), c in x.items():
        # first factor: C(top, m) w^(top - m) x(m - h + 1)
        for m in range(0, word_level(a) + h):
            coeff = binom(top, m)
            if not coeff:
                continue
            coeff = sign * c * coeff * w ** (top - m)
            for u, cu in mod1.act_word(Mode(gen, m - h + 1), a).items():
                key = (u, b)
                out[key] = out.get(key, 0) + coeff * cu
        for u, cu in mod2.act_word(Mode(gen, -mode.index), b).items():
            key = (a, u)
            out[key] = out.get(key, 0) + sign * c * cu
    return {k: v for k, v in out.items() if v}


def _pullback_word(mod1, mod2, word: Word, w: Fraction, x: Mapping[Pair, Fraction]) -> dict[Pair, Fraction]:
    """<x1 x2 ... xr psi*, x> = <psi*, P(xr) ... P(x1) x>."""
    out = dict(x)
    for md in word:
        out = _pullback(mod1, mod2, md, w, out)
    return out


@dataclass(frozen=True)
class Functional:
    """Values of psi* on the basis tensors of total level <= lmax."""

    values: tuple[tuple[Pair, Fraction], ...]
    lmax: int

    @classmethod
    def from_dict(cls, d: Mapping[Pair, RatLike], lmax: int) -> Functional:
        return cls(tuple(sorted(((p, rat(c)) for p, c in d.items() if rat(c)),
                                key=lambda t: pair_sort_key(t[0]))), lmax)

    def evaluate(self, x: Mapping[Pair, Fraction]) -> Fraction:
        vals = dict(self.values)
        total = Fraction(0)
        for p, c in x.items():
            if pair_level(p) > self.lmax:
                raise TruncationBreach(f"{pair_label(p)} is outside the domain (lmax={self.lmax})")
            total += c * vals.get(p, Fraction(0))
        return total

    def is_zero(self) -> bool:
        return not self.values


def _all_pairs(spec1: ModuleSpec, spec2: ModuleSpec, lmax: int) -> list[Pair]:
    m1, m2 = module_of(spec1), module_of(spec2)
    out = [(a, b) for l1 in range(lmax + 1) for l2 in range(lmax - l1 + 1)
           for a in m1.level_basis(l1) for b in m2.level_basis(l2)]
    out.sort(key=pair_sort_key)
    return out


def _reach(mode: Mode, h: int) -> int:
    return max(-mode.index, mode.index, h - 1, 0)


def dual_action(mode: Mode, psi: Functional, w: RatLike, spec1: ModuleSpec, spec2: ModuleSpec) -> Functional:
    """The functional mode . psi*, on the largest domain where it is computable."""
    w = rat(w)
    m1, m2 = module_of(spec1), module_of(spec2)
    h = spec1.presentation.generator(mode.generator).weight
    lmax = psi.lmax - max(mode.index, h - 1, 0)
    if lmax < 0:
        raise TruncationBreach("no room left for this mode")
    vals = {}
    for p in _all_pairs(spec1, spec2, lmax):
        y = _pullback(m1, m2, mode, w, {p: Fraction(1)})
        vals[p] = psi.evaluate(y)
    return Functional.from_dict(vals, lmax)


# -- compatibility constraints ---------------------------------------------------------

def compat_relation(generator: str, n: int, x: Mapping[Pair, Fraction], w: Fraction, d: int,
                    mod1: HighestWeightModule, mod2: HighestWeightModule, j: int | None = None
                    ) -> dict[Pair, Fraction]:
    """Constraint vector for the smeared mode v t^j (t^{-1} - w)^n acting on psi*.

    (a) adjoint route: (v t^j (t^{-1}-w)^n)^opp = (-1)^h v t^{2h-2-j} (t - w)^n, acted on
        M1 (x) M2 by the three-point coproduct;
    (b) expansion route: t^j (t^{-1}-w)^n = (-w)^n t^{j-n} (t - 1/w)^n expanded about 0,
        each t^p acting on psi* as the mode v_p; modes lowering by more than d drop out.
    Returns (a) - (b); compatible functionals vanish on it.  ``j`` defaults to h - 1.
    """
    h = mod1.pres.generator(generator).weight
    if j is None:
        j = h - 1
    sign = Fraction((-1) ** h)
    direct = hlz_coproduct_vec(mod1, mod2, generator, RationalMonomial(2 * h - 2 - j, n, w), x)
    out = {p: sign * c for p, c in direct.items()}
    f = RationalMonomial(j - n, n, 1 / w)
    scale = (-w) ** n
    # math index p acts as physics x(p - h + 1); keep lowering amounts <= d
    order = d + h - 1 - (j - n) + 1
    for p, coeff in iota_expand(f, "plus", max(order, 0)):
        k = p - h + 1
        if k > d:
            continue
        add_into(out, _pullback(mod1, mod2, Mode(generator, k), w, x), -scale * coeff)
    return out


@dataclass
class DualConstraintSystem:
    """Linear constraints on functional values; solved by elimination."""

    spec1: ModuleSpec
    spec2: ModuleSpec
    w: Fraction
    annihilation_depth: int
    lmax: int
    unknowns: list[Pair]
    variables: list[Pair]
    equation_count: int = 0
    space: EchelonSpace = field(default_factory=EchelonSpace, repr=False)

    def __post_init__(self) -> None:
        self.column = {p: i for i, p in enumerate(self.variables)}

    def impose(self, vec: Mapping[Pair, Fraction]) -> None:
        if not vec:
            return
        try:
            cols = {self.column[p]: c for p, c in vec.items()}
        except KeyError as exc:
            raise TruncationBreach(f"{pair_label(exc.args[0])} is outside the truncation") from None
        self.equation_count += 1
        self.space.add(cols)

    @property
    def free_unknowns(self) -> list[Pair]:
        return [p for p in self.unknowns if self.column[p] not in self.space.rows]

    @property
    def solution_dimension(self) -> int:
        return len(self.free_unknowns)

    @property
    def unknown_relations(self) -> list[TensorElement]:
        """Constraints among the unknowns themselves (dual spurious states)."""
        nu = len(self.unknowns)
        return [TensorElement.from_dict({self.variables[k]: c for k, c in self.space.reduced_row(p).items()})
                for p in sorted(self.space.rows) if p < nu]

    def value_form(self, x: Mapping[Pair, Fraction]) -> dict[Pair, Fraction]:
        """<psi*, x> as a combination of the free unknowns."""
        try:
            cols = {self.column[p]: c for p, c in x.items()}
        except KeyError as exc:
            raise TruncationBreach(f"{pair_label(exc.args[0])} is outside the truncation") from None
        nf = self.space.reduce(cols)
        free = set(self.free_unknowns)
        out = {self.variables[k]: c for k, c in nf.items()}
        stray = [p for p in out if p not in free]
        if stray:
            raise UnderdeterminedValues(f"value on {pair_label(stray[0])} is not fixed by the unknowns "
                                        f"at lmax={self.lmax}")
        return out


def _positive_words(spec: ModuleSpec, degree: int) -> list[Word]:
    """Lowering words of a given degree, as adjoints of canonical raising words."""
    return [opp_word(wd, spec.presentation)[1] for wd in negative_words(spec.presentation, degree)]


def compat_constraints(w: RatLike, d: int, lmax: int, spec1: ModuleSpec, spec2: ModuleSpec,
                       family: Literal["standard", "general"] = "standard") -> DualConstraintSystem:
    """Assemble and solve the depth-d compatibility system on levels <= lmax."""
    from .ngk_fusion import _module_cutoff, depth_quotient, special_subspace

    w = rat(w)
    if w == 0:
        raise ValueError("w must be nonzero")
    m1, m2 = module_of(spec1), module_of(spec2)
    ss = special_subspace(spec1, _module_cutoff(spec1, 0))
    dq = depth_quotient(spec2, d, _module_cutoff(spec2, d))
    unknowns = sorted(((a, b) for a in ss for b in dq if word_level(a) + word_level(b) <= lmax),
                      key=pair_sort_key)
    taken = set(unknowns)
    variables = unknowns + [p for p in _all_pairs(spec1, spec2, lmax) if p not in taken]
    system = DualConstraintSystem(spec1, spec2, w, d, lmax, unknowns, variables)

    # (i) lower truncation
    memo: dict[tuple[Word, Pair], dict[Pair, Fraction]] = {}

    def word_pullback(word: Word, p: Pair) -> dict[Pair, Fraction]:
        key = (word, p)
        if key not in memo:
            if not word:
                memo[key] = {p: Fraction(1)}
            else:
                memo[key] = _pullback(m1, m2, word[-1], w, word_pullback(word[:-1], p))
        return memo[key]

    for p in variables:
        room = lmax - pair_level(p)
        for deg in range(d + 1, room + 1):
            for wd in _positive_words(spec1, deg):
                system.impose(word_pullback(wd, p))

    # (ii) compatibility with the expansion about 0
    for g in spec1.presentation.generators:
        h = g.weight
        js = [h - 1] if family == "standard" else list(range(0, 2 * h - 1))
        for p in variables:
            room = lmax - pair_level(p)
            for j in js:
                n = -1
                while True:
                    if _compat_room(h, n, j, d, word_level(p[0])) > room:
                        break
                    system.impose(compat_relation(g.name, n, {p: Fraction(1)}, w, d, m1, m2, j))
                    n -= 1
    return system


def _compat_room(h: int, n: int, j: int, d: int, level1: int) -> int:
    """Largest level raise in compat_relation for exponents (j, n)."""
    j_opp = 2 * h - 2 - j
    # first factor: expansion of t^n (t + w)^{j_opp} starts at t^n -> physics index n - h + 1
    first = h - 1 - n
    # second factor: t^{j_opp} (t - w)^n starts at t^{j_opp}
    second = h - 1 - j_opp
    # expansion route: physics indices from j - n - h + 1 up to d
    low = j - n - h + 1
    expansion = max(-low, d, h - 1)
    return max(first, second, expansion, 0)


def dual_operator_matrix(system: DualConstraintSystem, pullback) -> RatMatrix:
    """Matrix of a dual operator A on the solution space.

    With phi_j the solution taking value delta_jk on free unknown u_k, the entry
    (k, j) is (A phi_j)(u_k) = phi_j(P u_k): the coefficient of u_j in the value
    form of the pullback of u_k.  Column j is the image of phi_j.
    """
    free = system.free_unknowns
    rows = []
    for u in free:
        form = system.value_form(pullback({u: Fraction(1)}))
        rows.append([form.get(v, Fraction(0)) for v in free])
    return RatMatrix.from_rows(rows, cols=len(free)) if free else RatMatrix.zeros(0, 0)


def _l0_pullback(system: DualConstraintSystem):
    m1, m2 = module_of(system.spec1), module_of(system.spec2)
    w, d = system.w, system.annihilation_depth
    pres = system.spec1.presentation
    names = pres.generator_names
    if "L" in names and pres.generator("L").weight == 2:
        return lambda x: _pullback(m1, m2, Mode("L", 0), w, x)
    if len(names) == 1 and pres.generators[0].weight == 1:
        a = names[0]

        def sugawara(x):
            # <(a0^2/2 + sum_n a(-n) a(n)) psi*, x>
            z = _pullback(m1, m2, Mode(a, 0), w, x)
            out = {p: c / 2 for p, c in _pullback(m1, m2, Mode(a, 0), w, z).items()}
            for n in range(1, d + 1):
                y = _pullback(m1, m2, Mode(a, -n), w, x)
                add_into(out, _pullback(m1, m2, Mode(a, n), w, y))
            return out

        return sugawara
    raise NotImplementedError("no L(0) available for this presentation")


def dual_l0_matrix(system: DualConstraintSystem, w: RatLike | None = None) -> RatMatrix:
    """L(0) on the compatible functionals, in the basis dual to the free unknowns."""
    if w is not None and rat(w) != system.w:
        raise ValueError("w does not match the constraint system")
    return dual_operator_matrix(system, _l0_pullback(system))


@dataclass(frozen=True)
class DualResult:
    basis_pairs: tuple[Pair, ...]
    l0_matrix: RatMatrix
    jordan: JordanReport
    solution_dimension: int
    unknown_count: int
    equation_count: int
    unknown_relations: tuple[TensorElement, ...]
    zero_mode_matrices: tuple[tuple[str, RatMatrix], ...]
    stabilized_at: int
    w: Fraction
    depth: int

    @property
    def basis(self) -> list[str]:
        return [f"<{pair_label(p)}>" for p in self.basis_pairs]

    def to_json(self) -> dict:
        return {
            "basis": self.basis,
            "solution_dimension": self.solution_dimension,
            "unknown_count": self.unknown_count,
            "equation_count": self.equation_count,
            "l0_matrix": self.l0_matrix.to_strings(),
            "matrix_convention": "column j is the image of the functional dual to unknown j",
            "jordan": self.jordan.to_json(),
            "trace": rat_str(self.l0_matrix.trace()),
            "determinant": rat_str(self.l0_matrix.det()),
            "unknown_relations": [s.to_json() for s in self.unknown_relations],
            "zero_mode_matrices": {g: m.to_strings() for g, m in self.zero_mode_matrices},
            "stabilized_at": self.stabilized_at,
            "w": rat_str(self.w),
            "depth": self.depth,
        }


def _dual_once(spec1, spec2, d, w, lmax, family) -> DualResult:
    system = compat_constraints(w, d, lmax, spec1, spec2, family)
    mat = dual_l0_matrix(system)
    zero = []
    if "L" not in spec1.presentation.generator_names:
        m1, m2 = module_of(spec1), module_of(spec2)
        for g in spec1.presentation.generator_names:
            zero.append((g, dual_operator_matrix(system, lambda x, g=g: _pullback(m1, m2, Mode(g, 0), w, x))))
    return DualResult(tuple(system.free_unknowns), mat, jordan_structure(mat), system.solution_dimension,
                      len(system.unknowns), system.equation_count, tuple(system.unknown_relations),
                      tuple(zero), lmax, w, d)


def hlz_fuse(spec1: ModuleSpec, spec2: ModuleSpec, d: int, w: RatLike = 1, lmax: int | None = None,
             family: Literal["standard", "general"] = "standard") -> DualResult:
    """Solve the dual system at lmax and lmax + 1 and require identical answers."""
    from .ngk_fusion import NotStabilized, lmax_floor

    w = rat(w)
    if lmax is None:
        lmax = lmax_floor(spec1, spec2, d)
    first = _dual_once(spec1, spec2, d, w, lmax, family)
    second = _dual_once(spec1, spec2, d, w, lmax + 1, family)
    if (first.basis_pairs, first.l0_matrix) != (second.basis_pairs, second.l0_matrix):
        raise NotStabilized(f"dual results differ between lmax={lmax} and lmax={lmax + 1}")
    return first


@dataclass(frozen=True)
class CrosscheckReport:
    transpose_match: bool
    jordan_match: bool
    basis_match: bool
    ngk_matrix: RatMatrix
    hlz_matrix: RatMatrix

    @property
    def ok(self) -> bool:
        return self.transpose_match and self.jordan_match and self.basis_match

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "transpose_match": self.transpose_match,
            "jordan_match": self.jordan_match,
            "basis_match": self.basis_match,
            "ngk_l0_matrix": self.ngk_matrix.to_strings(),
            "hlz_l0_matrix": self.hlz_matrix.to_strings(),
        }


def crosscheck(ngk, hlz_matrix: RatMatrix, hlz_basis: tuple[Pair, ...] | None = None,
               strict: bool = True) -> CrosscheckReport:
    """The quotient-side L(0) matrix must be the transpose of the dual one."""
    n = ngk.l0_matrix
    tmatch = (n.rows, n.cols) == (hlz_matrix.cols, hlz_matrix.rows) and n.transpose() == hlz_matrix
    jmatch = jordan_structure(n) == jordan_structure(hlz_matrix) if n.is_square and hlz_matrix.is_square else False
    bmatch = hlz_basis is None or tuple(hlz_basis) == tuple(ngk.basis_pairs)
    report = CrosscheckReport(tmatch, jmatch, bmatch, n, hlz_matrix)
    if strict and not report.ok:
        raise CrosscheckMismatch(f"NGK matrix {n.to_strings()} vs HLZ matrix {hlz_matrix.to_strings()} "
                                 f"(transpose {tmatch}, jordan {jmatch}, basis {bmatch})")
    return report
