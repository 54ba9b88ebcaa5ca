import itertools

import pytest
from hypothesis import given, settings, strategies as st

from branchsig.hopf import (add_term, antipode, apply_product, coproduct, coproduct_sum,
                            counit, deconcatenate, deconcatenate_sum, product, psi, psi_split,
                            reduced_coproduct, shuffle, shuffle_sums, split_product)
from branchsig.trees import (EMPTY_FOREST, EMPTY_WORD, Forest, Word, forest, forests_up_to,
                             graft, leaf, parse_forest, parse_tree, trees_up_to, word)

from oracles import cut_coproduct, interleavings

F = parse_forest
T = parse_tree
U = EMPTY_FOREST


def test_coproduct_primitive():
    assert coproduct(leaf(1)) == {(F("1"), U): 1, (U, F("1")): 1}


def test_coproduct_chain_matches_cut_oracle():
    chain = T("3(2(1))")
    expected = {(F("3(2(1))"), U): 1, (U, F("3(2(1))")): 1,
                (F("1"), F("3(2)")): 1, (F("2(1)"), F("3")): 1}
    assert coproduct(chain) == expected == cut_coproduct(F("3(2(1))"))


def test_coproduct_two_leaves():
    expected = {(F("1*2"), U): 1, (U, F("1*2")): 1, (F("1"), F("2")): 1, (F("2"), F("1")): 1}
    assert coproduct(F("1*2")) == expected == cut_coproduct(F("1*2"))


def test_coproduct_matches_cut_oracle_exhaustive():
    for f in forests_up_to(5, 2, offset=1):
        assert coproduct(f) == cut_coproduct(f), f.key


def test_reduced_coproduct():
    assert reduced_coproduct(leaf(1)) == {}
    assert reduced_coproduct(T("2(1)")) == {(F("1"), F("2")): 1}
    assert reduced_coproduct(T("3(2(1))")) == {(F("1"), F("3(2)")): 1, (F("2(1)"), F("3")): 1}
    with pytest.raises(ValueError):
        reduced_coproduct(U)


def test_antipode_examples():
    assert antipode(leaf(1)) == {F("1"): -1}
    assert antipode(T("2(1)")) == {F("2(1)"): -1, F("1*2"): 1}
    assert antipode(U) == {U: 1}


def _tensor_left(s):
    out = {}
    for (a, b), c in s.items():
        for (a1, a2), c1 in coproduct(a).items():
            add_term(out, (a1, a2, b), c * c1)
    return out


def _tensor_right(s):
    out = {}
    for (a, b), c in s.items():
        for (b1, b2), c2 in coproduct(b).items():
            add_term(out, (a, b1, b2), c * c2)
    return out


def test_coassociativity_exhaustive():
    for f in forests_up_to(5, 2):
        d = coproduct(f)
        assert _tensor_left(d) == _tensor_right(d), f.key


def test_multiplicativity_exhaustive():
    fs = forests_up_to(4, 2, include_unit=True)
    for f, g in itertools.product(fs, fs):
        if f.size + g.size > 5:
            continue
        assert coproduct(f * g) == split_product(coproduct(f), coproduct(g))


def test_antipode_axiom_exhaustive():
    for f in forests_up_to(5, 2, include_unit=True):
        left, right = {}, {}
        for (a, b), c in coproduct(f).items():
            for g, s in antipode(a).items():
                add_term(left, g * b, c * s)
            for g, s in antipode(b).items():
                add_term(right, a * g, c * s)
        expected = {U: 1} if counit(f) else {}
        assert left == expected and right == expected, f.key
    assert apply_product({(F("1"), F("2")): 1}) == {F("1*2"): 1}


def test_shuffle_examples():
    assert shuffle(word(1), word(1)) == {word(1, 1): 2}
    assert shuffle(word(1), word(2)) == {word(1, 2): 1, word(2, 1): 1}
    assert shuffle(word(1, 2), word(3)) == interleavings(word(1, 2), word(3))
    assert shuffle(word(1, 2), word(3)) == {word(1, 2, 3): 1, word(1, 3, 2): 1, word(3, 1, 2): 1}
    assert shuffle(EMPTY_WORD, word(2)) == {word(2): 1}


letters = st.sampled_from([leaf(1), leaf(2), T("2(1)"), T("3(1,2)")])
words = st.lists(letters, max_size=3).map(Word)


@given(words, words)
def test_shuffle_commutative_and_oracle(u, v):
    assert shuffle(u, v) == shuffle(v, u) == interleavings(u, v)


@given(words, words, words)
@settings(max_examples=60)
def test_shuffle_associative(u, v, w):
    a = shuffle_sums(shuffle(u, v), {w: 1})
    b = shuffle_sums({u: 1}, shuffle(v, w))
    assert a == b


def test_deconcatenate():
    assert deconcatenate(EMPTY_WORD) == [(EMPTY_WORD, EMPTY_WORD)]
    assert deconcatenate(word(1, 2)) == [(EMPTY_WORD, word(1, 2)), (word(1), word(2)), (word(1, 2), EMPTY_WORD)]
    assert len(deconcatenate(word(1, 2, 1, 3))) == 5


def test_psi_goldens():
    assert psi(leaf(1)) == {word(1): 1}
    assert psi(T("2(1)")) == {Word([T("2(1)")]): 1, word(1, 2): 1}
    cherry = {Word([T("3(1,2)")]): 1, Word([leaf(1), T("3(2)")]): 1, Word([leaf(2), T("3(1)")]): 1,
              word(2, 1, 3): 1, word(1, 2, 3): 1}
    assert psi(T("3(1,2)")) == cherry
    chain = {Word([T("3(2(1))")]): 1, Word([leaf(1), T("3(2)")]): 1, Word([T("2(1)"), leaf(3)]): 1,
             word(1, 2, 3): 1}
    assert psi(T("3(2(1))")) == chain
    assert psi(U) == {EMPTY_WORD: 1}


def test_psi_algebra_morphism_exhaustive():
    fs = forests_up_to(4, 2, include_unit=True)
    for f, g in itertools.product(fs, fs):
        if f.size + g.size > 5:
            continue
        assert psi(f * g) == shuffle_sums(psi(f), psi(g))


def test_psi_coalgebra_morphism_exhaustive():
    for h in trees_up_to(4, 2):
        assert psi_split(coproduct(h)) == deconcatenate_sum(psi(h)), h.key


def test_psi_grading_and_leading_term():
    for h in trees_up_to(5, 2):
        s = psi(h)
        assert s[Word([h])] == 1
        assert all(w.degree == h.size for w in s)


def test_linear_helpers():
    assert product({F("1"): 2}, {F("2"): 3}) == {F("1*2"): 6}
    assert coproduct_sum({F("1"): 2, F("2"): -2})[(U, F("1"))] == 2
