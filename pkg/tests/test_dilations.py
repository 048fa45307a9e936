import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mpradon.dilations import (DilationScheme, ParamLattice, cancellation_structure, degree,
                               lattice_enumerate, scale_point)

HEIS = DilationScheme([[1, 0], [0, 1], [1, 1]])


def test_scale_point_heisenberg():
    out = scale_point(HEIS, [0.5, 0.25], [1.0, 1.0, 1.0])
    assert np.array_equal(out, [0.5, 0.25, 0.125])


def test_scale_point_identity():
    t = np.array([0.3, -2.0, 7.0])
    assert np.array_equal(scale_point(HEIS, [1.0, 1.0], t), t)


def test_scale_point_shape_errors():
    with pytest.raises(ValueError):
        scale_point(HEIS, [0.5], [1, 1, 1])
    with pytest.raises(ValueError):
        scale_point(HEIS, [0.5, 0.5], [1, 1])


def test_scale_point_composition_seeded():
    rng = np.random.default_rng(7)
    scheme = DilationScheme([[1, 0], [Fraction(1, 2), 2], [1, 1]])
    for _ in range(1000):
        d1, d2 = rng.uniform(0.01, 1, 2), rng.uniform(0.01, 1, 2)
        t = rng.normal(size=3)
        lhs = scale_point(scheme, d1, scale_point(scheme, d2, t))
        rhs = scale_point(scheme, d1 * d2, t)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-15, atol=0)


def test_degree_examples():
    d = degree(HEIS, (1, 0, 1))
    assert d.components == (2, 1) and d.kind == "non-pure"
    assert degree(HEIS, (0, 0, 0)).kind == "zero"
    d = degree(DilationScheme([[1, 0], [0, 1]]), (3, 0))
    assert d.components == (3, 0) and d.is_pure


@given(st.lists(st.integers(0, 5), min_size=3, max_size=3), st.lists(st.integers(0, 5), min_size=3, max_size=3))
def test_degree_additive(a, b):
    scheme = DilationScheme([[Fraction(1, 3), 0], [0, 2], [1, Fraction(5, 7)]])
    s = degree(scheme, [x + y for x, y in zip(a, b)])
    assert s.components == (degree(scheme, a) + degree(scheme, b)).components


def test_scheme_validation():
    with pytest.raises(ValueError):
        DilationScheme([[0, 0]])
    with pytest.raises(ValueError):
        DilationScheme([[1, -1]])
    with pytest.raises(ValueError):
        DilationScheme([[1, 0], [1]])


def test_lattice_enumerate_examples():
    assert lattice_enumerate(ParamLattice("product", 2), 1) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert lattice_enumerate(ParamLattice("flag", 2), 1) == [(0, 0), (0, 1), (1, 1)]
    pts = lattice_enumerate(ParamLattice("flag", 3), 2)
    brute = [p for p in itertools.product(range(3), repeat=3) if p[0] <= p[1] <= p[2]]
    assert len(pts) == len(brute) == 10


def test_custom_lattice_min_closure_enforced():
    with pytest.raises(ValueError):
        # j1 + j2 >= 1 (written as -j1 - j2 <= -1) is not closed under min
        ParamLattice("custom", 2, ((-1, -1, -1),))


def test_lattice_json_roundtrip():
    lat = ParamLattice("custom", 2, ((-1, 1, 0),))
    assert ParamLattice.from_json(lat.to_json()) == lat


def test_cancellation_product_example():
    scheme = DilationScheme([[1, 0], [0, 1]])
    cs = cancellation_structure(scheme, ParamLattice("product", 2), (3, 0))
    assert cs.required_subsets == [(0,)]
    assert cs.minimal_set == (1,)
    cs0 = cancellation_structure(scheme, ParamLattice("product", 2), (0, 0))
    assert cs0.required_subsets == []


def test_cancellation_flag_example():
    scheme = DilationScheme([[1, 0], [0, 1]])
    cs = cancellation_structure(scheme, ParamLattice("flag", 2), (2, 5), C=1.0)
    assert cs.minimal_set == ()
    assert cs.classes[0] == frozenset({0}) and cs.classes[1] == frozenset({1})
    assert sorted(cs.required_subsets) == [(0,), (1,)]


def test_cancellation_rejects_non_member():
    with pytest.raises(ValueError):
        cancellation_structure(DilationScheme([[1, 0], [0, 1]]), ParamLattice("flag", 2), (3, 1))


@pytest.mark.parametrize("kind", ["product", "flag"])
def test_product_minimality_and_membership(kind):
    scheme = DilationScheme([[1, 0], [0, 1], [1, 1]])
    lat = ParamLattice(kind, 2)
    for j in lattice_enumerate(lat, 8):
        cs = cancellation_structure(scheme, lat, j)
        for mu, cls in cs.classes.items():
            assert mu in cls
        if kind == "product":
            assert set(cs.minimal_set) == {mu for mu in range(2) if j[mu] == 0}


@pytest.mark.parametrize("kind", ["product", "flag"])
def test_presets_agree_with_brute_force(kind):
    scheme = DilationScheme([[1, 0], [0, 1], [1, 1]])
    lat = ParamLattice(kind, 2)
    custom = lat.as_custom()
    for j in lattice_enumerate(lat, 6):
        a = cancellation_structure(scheme, lat, j)
        b = cancellation_structure(scheme, custom, j, search_bound=max(j) + 16)
        assert sorted(a.required_subsets) == sorted(b.required_subsets), j
        assert set(a.minimal_set) == set(b.minimal_set)
