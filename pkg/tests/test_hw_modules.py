from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ngkfusion.chiral_algebra import AlgebraElement, Mode
from ngkfusion.exact_linalg import RatMatrix
from ngkfusion.hw_modules import (
    InvalidSingularRelation,
    GradedVector,
    ModuleSpec,
    act,
    auto_singular_relations,
    find_singular_vectors,
    gram_matrix,
    heisenberg_module,
    is_singular,
    level_basis,
    reduce,
    singular_at_levels,
    vector,
    virasoro_module,
)
from oracles import VermaOracle, ordered_partitions, partition_count

C, H = Fraction(-2), Fraction(-1, 8)


def L(n):
    return Mode("L", n)


def word_of(p):
    return tuple(L(-a) for a in p)


def part_of(w):
    return tuple(-m.index for m in w)


@pytest.fixture(scope="module")
def m_irr():
    return singular_at_levels(virasoro_module(C, H), [2])


def test_level2_gram_and_singular_vector():
    spec = virasoro_module(C, H)
    g = gram_matrix(spec, 2)
    assert g == RatMatrix.from_rows([["-3/2", "-3/4"], ["-3/4", "-3/8"]])
    assert g.det() == 0
    assert gram_matrix(spec, 1) == RatMatrix.from_rows([["-1/4"]])
    (sv,) = find_singular_vectors(spec, 2)
    assert sv.as_dict() == {(L(-1), L(-1)): 1, (L(-2),): Fraction(-1, 2)}
    assert find_singular_vectors(spec, 1) == []


@settings(max_examples=25, deadline=None)
@given(st.fractions(min_value=-3, max_value=3, max_denominator=6),
       st.fractions(min_value=-2, max_value=2, max_denominator=8), st.integers(1, 4))
def test_gram_matches_oracle(c, h, level):
    g = gram_matrix(virasoro_module(c, h), level)
    assert g.to_strings() == RatMatrix.from_rows(VermaOracle(c, h).gram(level)).to_strings()
    assert g == g.transpose()


def test_gram_symmetric_up_to_level5():
    spec = virasoro_module(Fraction(1, 2), Fraction(1, 16))
    for n in range(1, 6):
        g = gram_matrix(spec, n)
        assert g == g.transpose()


@settings(max_examples=40, deadline=None)
@given(st.integers(-3, 3), st.integers(0, 3))
def test_verma_action_matches_oracle(n, level):
    spec = virasoro_module(C, H)
    orc = VermaOracle(C, H)
    for p in ordered_partitions(level):
        mine = act(L(n), vector(spec, {word_of(p): 1}), spec).as_dict()
        ref = orc.act(n, {p: Fraction(1)})
        assert {part_of(w): c for w, c in mine.items()} == ref


def test_quotient_dimensions(m_irr):
    assert [len(level_basis(m_irr, n)) for n in range(6)] == [
        partition_count(n) - (partition_count(n - 2) if n >= 2 else 0) for n in range(6)]
    vac = singular_at_levels(virasoro_module(C, 0), [1])
    assert [len(level_basis(vac, n)) for n in range(6)] == [1, 0, 1, 1, 2, 2]
    fock = heisenberg_module(3)
    assert [len(level_basis(fock, n)) for n in range(6)] == [partition_count(n) for n in range(6)]


def test_quotient_representatives(m_irr):
    assert level_basis(m_irr, 2) == [(L(-2),)]
    v = vector(m_irr, {(L(-1), L(-1)): 1})
    assert v.as_dict() == {(L(-2),): Fraction(1, 2)}


def test_singular_vector_vanishes_in_quotient(m_irr):
    v = vector(m_irr, {(L(-1), L(-1)): 1, (L(-2),): Fraction(-1, 2)})
    assert v.as_dict() == {}
    assert reduce(m_irr, GradedVector.from_dict({(L(-2),): 3})).as_dict() == {(L(-2),): 3}


def test_quotient_action_is_well_defined(m_irr):
    # L(1) L(-1)^2 and (1/2) L(1) L(-2) agree in the quotient
    a = act(L(1), vector(m_irr, {(L(-1), L(-1)): 1}), m_irr)
    b = act(L(1), vector(m_irr, {(L(-2),): Fraction(1, 2)}), m_irr)
    assert a == b


def test_relation_validation():
    verma = virasoro_module(C, H)
    bad = AlgebraElement.from_dict({(L(-2),): 1})
    with pytest.raises(InvalidSingularRelation):
        ModuleSpec(verma.presentation, H, verma.zero_modes, ((2, bad),))
    with pytest.raises(InvalidSingularRelation):
        singular_at_levels(verma, [1])
    good = find_singular_vectors(verma, 2)[0]
    assert is_singular(verma, 2, good)


def test_auto_detection():
    verma = virasoro_module(C, H)
    found = auto_singular_relations(verma, 3)
    assert [lvl for lvl, _ in found] == [2]
    vac = auto_singular_relations(virasoro_module(C, 0), 3)
    assert [lvl for lvl, _ in vac] == [1]


def test_heisenberg_zero_mode():
    f = heisenberg_module(2)
    assert f.highest_weight == 2
    v = act(Mode("a", 0), vector(f, {(Mode("a", -1),): 1}), f)
    assert v.as_dict() == {(Mode("a", -1),): 2}


def test_graded_vector_coordinates(m_irr):
    v = vector(m_irr, {(): 1, (L(-1),): 2, (L(-1), L(-1)): 4})
    assert v.by_level(m_irr) == {0: (1,), 1: (2,), 2: (2,)}
