from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from mpradon import catalog
from mpradon.decide import (ConfigurationError, PolySurface, choose_rescaling, counterexample_multiplier,
                            euclidean_diagonal_multiplier, heis_default_bumps, heis_dilate, heis_inv, heis_mul,
                            heis_op, newton_verdict, pure_exponents, select_witness)


def P(*quads):
    return PolySurface.from_quadruples(quads)


@pytest.mark.parametrize("entry", catalog.NEWTON_CORPUS, ids=[e["name"] for e in catalog.NEWTON_CORPUS])
def test_corpus(entry):
    v = newton_verdict(PolySurface.from_quadruples(entry["polynomial"]), entry.get("mode", "product"))
    assert v.classification == entry["expect"]
    if entry["witness"] is not None:
        assert list(v.witnesses[0]) == entry["witness"]


def test_corpus_size():
    assert len(catalog.NEWTON_CORPUS) >= 12


def test_exit_codes():
    assert newton_verdict(P([1, 0, 1, 1], [0, 1, 1, 1])).exit_code == 0
    assert newton_verdict(P([3, 0, 1, 1], [0, 3, 1, 1], [1, 1, 1, 1])).exit_code == 3
    assert newton_verdict(P([1, 1, 1, 1])).exit_code == 4


def test_polysurface_validation():
    with pytest.raises(ValueError):
        P([0, 0, 1, 1])
    with pytest.raises(ValueError):
        P([1, 0, 1, 0])
    with pytest.raises(ValueError):
        P([1, 0, 1])
    with pytest.raises(ValueError):
        newton_verdict(P([1, 0, 1, 1], [1, 0, -1, 1]))


def test_coefficients_cancel_exactly():
    p = P([1, 0, 1, 3], [1, 0, 2, 3], [0, 1, 1, 1])
    assert p.as_dict() == {(1, 0): Fraction(1), (0, 1): Fraction(1)}


def test_pure_exponents():
    assert pure_exponents(P([3, 0, 1, 1], [0, 2, 1, 1], [5, 0, 1, 1])) == (3, 2)
    assert pure_exponents(P([1, 1, 1, 1]))[0] == float("inf")


def test_flag_needs_b_le_a():
    p = P([1, 0, 1, 1], [0, 2, 1, 1], [1, 1, 1, 1])
    with pytest.raises(ConfigurationError):
        newton_verdict(p, "flag")
    v = newton_verdict(p, "flag", allow_swap=True)
    assert v.swapped


def test_unknown_mode():
    with pytest.raises(ValueError):
        newton_verdict(P([1, 0, 1, 1]), "flags")


_terms = st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5), st.integers(-5, 5).filter(bool)),
                  min_size=1, max_size=5)


def _poly(terms):
    acc = {}
    for e, f, c in terms:
        if (e, f) != (0, 0):
            acc[(e, f)] = c
    return PolySurface(list(acc.items()))


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), _terms)
def test_product_verdict_matches_integer_oracle(a0, b0, terms):
    p = _poly(terms + [(a0, 0, 1), (0, b0, 1)])
    a, b = pure_exponents(p)
    # integer form of e/a + f/b >= 1
    bounded = all(e * b + f * a >= a * b for (e, f), _ in p.coeffs)
    assert (newton_verdict(p).classification == "bounded") == bounded


@settings(max_examples=60, deadline=None)
@given(_terms, st.fractions(min_value=Fraction(1, 4), max_value=4))
def test_verdict_invariant_under_swap_and_scaling(terms, lam):
    p = _poly(terms)
    assume(not p.is_zero())
    v = newton_verdict(p)
    assert newton_verdict(p.swapped()).classification == v.classification
    assert newton_verdict(p.scaled(lam)).classification == v.classification


def test_select_witness():
    w, a, b = select_witness(P([3, 0, 1, 1], [0, 3, 1, 1], [1, 1, 1, 1]))
    assert tuple(w) == (1, 1) and (a, b) == (3, 3)
    with pytest.raises(ValueError):
        select_witness(P([1, 0, 1, 1], [0, 1, 1, 1]))


@settings(max_examples=40, deadline=None)
@given(*[st.tuples(*[st.floats(-3, 3)] * 3)] * 3)
def test_heisenberg_group_law(g, h, k):
    lhs = heis_mul(heis_mul(g, h), k)
    rhs = heis_mul(g, heis_mul(h, k))
    assert np.allclose(lhs, rhs, atol=1e-9)
    assert np.allclose(heis_mul(g, heis_inv(g)), 0.0, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(*[st.tuples(*[st.floats(-3, 3)] * 3)] * 2, st.floats(0.1, 2), st.floats(0.1, 2))
def test_heisenberg_dilations_are_automorphisms(g, h, d1, d2):
    d = (d1, d2)
    lhs = heis_dilate(heis_mul(g, h), d)
    rhs = heis_mul(heis_dilate(g, d), heis_dilate(h, d))
    assert np.allclose(lhs, rhs, atol=1e-9)


def test_heis_op_exclusive_arguments():
    with pytest.raises(ValueError):
        heis_op((0, 0, 0))
    with pytest.raises(ValueError):
        heis_op((0, 0, 0), (1, 1, 1), (1, 1))


@pytest.mark.parametrize("M", [1, 2, 4])
def test_euclidean_diagonal_sum(M):
    phi, psi = heis_default_bumps()
    out = euclidean_diagonal_multiplier(phi, psi, M, nodes=512)
    assert out["count"] == 2 * M + 1
    assert abs(out["sum"] - out["count"] * out["psi_hat_1"]) <= 0.01 * abs(out["count"] * out["psi_hat_1"])


def test_counterexample_growth_small():
    p = P([3, 0, 1, 1], [0, 3, 1, 1], [1, 1, 1, 1])
    tau = 2.0**20
    r = choose_rescaling(p, tau, 8)
    v4 = abs(counterexample_multiplier(p, tau, 4, rescale=r).value)
    v8 = abs(counterexample_multiplier(p, tau, 8, rescale=r).value)
    assert 1.6 <= v8 / v4 <= 2.4
