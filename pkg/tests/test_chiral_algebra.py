from __future__ import annotations

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ngkfusion.chiral_algebra import (
    AlgebraElement,
    AlgebraPresentation,
    BracketTerm,
    GeneratorSpec,
    Mode,
    UnsupportedOpp,
    bracket,
    heisenberg,
    is_canonical,
    math_index,
    negative_words,
    normal_order,
    opp_element,
    opp_word,
    physics_index,
    preset,
    virasoro,
)

VIR = virasoro(Fraction(-2))
VIR_GENERIC = virasoro(Fraction(7, 3))


def L(n):
    return Mode("L", n)


def ad(x: AlgebraElement, m: Mode, pres) -> AlgebraElement:
    """[x, m] for x a combination of single modes and scalars."""
    out = AlgebraElement()
    for w, c in x.terms:
        if len(w) == 1:
            out = out + bracket(w[0], m, pres).scale(c)
    return out


def test_virasoro_bracket_values():
    assert bracket(L(2), L(-2), VIR).as_dict() == {(L(0),): 4, (): Fraction(-1)}
    assert bracket(L(1), L(-1), VIR).as_dict() == {(L(0),): 2}
    assert bracket(L(3), L(1), VIR_GENERIC).as_dict() == {(L(4),): 2}


def test_heisenberg_bracket_values():
    h = heisenberg()
    assert bracket(Mode("a", 2), Mode("a", -2), h).as_dict() == {(): 2}
    assert bracket(Mode("a", 1), Mode("a", 1), h).is_zero()


@pytest.mark.parametrize("pres", [VIR, VIR_GENERIC, heisenberg()], ids=["c=-2", "c=7/3", "heis"])
def test_antisymmetry(pres):
    g = pres.generator_names[0]
    for m, n in itertools.product(range(-6, 7), repeat=2):
        assert bracket(Mode(g, m), Mode(g, n), pres) == bracket(Mode(g, n), Mode(g, m), pres).scale(-1)


@pytest.mark.parametrize("pres", [VIR, VIR_GENERIC], ids=["c=-2", "c=7/3"])
def test_jacobi_all_triples(pres):
    rng = range(-4, 5)
    for a, b, c in itertools.product(rng, repeat=3):
        x, y, z = L(a), L(b), L(c)
        total = (ad(bracket(x, y, pres), z, pres) + ad(bracket(y, z, pres), x, pres)
                 + ad(bracket(z, x, pres), y, pres))
        assert total.is_zero(), (a, b, c)


def test_presentation_rejects_non_antisymmetric_table():
    with pytest.raises(ValueError):
        AlgebraPresentation("bad", (GeneratorSpec("x", 1),),
                            ((("x", "x"), (BracketTerm("x", ((1, 0, Fraction(1)),)),), ()),))


def test_normal_order_example():
    assert normal_order([L(-1), L(-2)], VIR).as_dict() == {(L(-2), L(-1)): 1, (L(-3),): 1}


words = st.lists(st.builds(Mode, st.just("L"), st.integers(-3, 3)), min_size=0, max_size=4)


@settings(max_examples=80, deadline=None)
@given(words)
def test_normal_order_idempotent_and_canonical(word):
    once = normal_order(word, VIR)
    assert normal_order(once, VIR) == once
    assert all(is_canonical(w) for w, _ in once.terms)


@settings(max_examples=80, deadline=None)
@given(st.integers(-4, 4), st.integers(-4, 4))
def test_commutator_matches_bracket(m, n):
    lhs = normal_order([L(m), L(n)], VIR) - normal_order([L(n), L(m)], VIR)
    assert lhs == bracket(L(m), L(n), VIR)


@settings(max_examples=60, deadline=None)
@given(words, words)
def test_opp_is_anti_automorphism_and_involution(u, v):
    x, y = AlgebraElement.word(*u), AlgebraElement.word(*v)
    lhs = normal_order(opp_element(x * y, VIR), VIR)
    rhs = normal_order(opp_element(y, VIR) * opp_element(x, VIR), VIR)
    assert lhs == rhs
    assert opp_element(opp_element(x, VIR), VIR) == x


@settings(max_examples=60, deadline=None)
@given(st.integers(-4, 4), st.integers(-4, 4))
def test_opp_respects_bracket(m, n):
    # opp([x, y]) = [opp y, opp x]
    lhs = opp_element(bracket(L(m), L(n), VIR), VIR)
    s1, y = opp_word([L(n)], VIR)
    s2, x = opp_word([L(m)], VIR)
    assert lhs == bracket(y[0], x[0], VIR).scale(s1 * s2)


def test_opp_heisenberg_sign():
    sign, w = opp_word([Mode("a", 2)], heisenberg())
    assert (sign, w) == (-1, (Mode("a", -2),))


def test_opp_requires_quasiprimary():
    pres = AlgebraPresentation("nq", (GeneratorSpec("x", 1, quasiprimary=False),),
                               ((("x", "x"), (), ((1, Fraction(1)),)),))
    with pytest.raises(UnsupportedOpp):
        opp_word([Mode("x", 1)], pres)


def test_negative_words_order():
    assert negative_words(VIR, 3) == [(L(-3),), (L(-2), L(-1)), (L(-1), L(-1), L(-1))]
    assert len(negative_words(VIR, 6)) == 11


def test_index_conventions():
    assert math_index(L(-2), VIR) == -1
    assert physics_index("L", -1, VIR) == -2
    assert math_index(Mode("a", -1), heisenberg()) == -1


def test_preset_lookup():
    assert preset("virasoro", c=-2) == VIR
    with pytest.raises(ValueError):
        preset("w3")
