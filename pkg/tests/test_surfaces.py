import numpy as np
import pytest

from mpradon import catalog
from mpradon.surfaces import (SurfaceMap, WSpec, compose_gamma, curvature_check, gamma_from_w, leaf_membership,
                              multi_indices, omega, structure_residuals, taylor_fields, w_from_gamma, wj_from_gamma)

RNG = np.random.default_rng(7)


def _samples(N, n, k=20, r=0.5):
    return RNG.uniform(-r, r, size=(k, N)), RNG.uniform(-r, r, size=(k, n))


def test_multi_indices_order():
    assert multi_indices(2, 2) == [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] or \
        sorted(multi_indices(2, 2)) == sorted([(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)])
    assert multi_indices(1, 3, 0) == [(0,), (1,), (2,), (3,)]


def test_translation_generator_gives_translation():
    t, x = _samples(1, 1)
    assert np.allclose(gamma_from_w(catalog.wspec("translate"), t, x), x + t, atol=1e-10)


def test_dilation_generator_gives_exponential_scaling():
    t, x = _samples(1, 1)
    assert np.allclose(gamma_from_w(catalog.wspec("dilate"), t, x), x * np.exp(t), atol=1e-9)


def test_square_generator():
    # W = t^2 d/dx integrates to x + t^2 / 2
    t, x = _samples(1, 1)
    assert np.allclose(gamma_from_w(catalog.wspec("square"), t, x), x + 0.5 * t**2, atol=1e-10)


def test_heisenberg_generator_is_group_translation():
    t, x = _samples(2, 3)
    got = gamma_from_w(catalog.wspec("heisenberg"), t, x)
    s, u = t[:, 0], t[:, 1]
    want = np.stack([x[:, 0] + s, x[:, 1] + u, x[:, 2] + 2 * s * x[:, 1] - 2 * u * x[:, 0]], axis=1)
    assert np.allclose(got, want, atol=1e-9)


def test_omega_semigroup():
    w = catalog.wspec("mixed")
    t, x = _samples(2, 2, k=10)
    for eps, e0 in [(0.7, 0.5), (1.0, 0.3)]:
        a = omega(w, e0 * eps, t, x)
        b = omega(w, eps, e0 * t, x)
        assert np.max(np.abs(a - b)) <= 1e-8


@pytest.mark.parametrize("name", ["translate", "square", "exp-scale", "bilinear", "parabola", "shear"])
def test_w_from_closed_form_matches_known_generator(name):
    g = catalog.surface({"catalog": name})
    w = catalog.exact_w(name)
    t, x = _samples(g.N, g.n, k=10, r=0.4)
    got = w_from_gamma(g, t, x)
    want = np.zeros_like(x)
    for alpha, X in w.terms.items():
        want += np.prod(t ** np.array(alpha), axis=1)[:, None] * X(x)
    assert np.max(np.abs(got - want)) <= 1e-6


def test_bilinear_generator_coefficient():
    # x - s t : the only Taylor field is X_(1,1) = -2 d/dx
    tf = taylor_fields(catalog.surface({"catalog": "bilinear"}), order=2, x_points=np.zeros((1, 1)))
    assert tf.nonzero() == [(1, 1)]
    assert tf.values[(1, 1)] == pytest.approx(np.array([[-2.0]]), abs=1e-5)


@pytest.mark.parametrize("ref", ["translate", "heisenberg", "grushin-curve", "three-param"])
def test_gamma_w_round_trip(ref):
    w = catalog.wspec(ref)
    g = SurfaceMap.from_wspec(w)
    t, x = _samples(w.N, w.n, k=10, r=0.4)
    want = np.zeros_like(x)
    for alpha, X in w.terms.items():
        want += np.prod(t ** np.array(alpha), axis=1)[:, None] * X(x)
    assert np.max(np.abs(w_from_gamma(g, t, x) - want)) <= 1e-6
    assert np.max(np.abs(g.inv(t, g(t, x)) - x)) <= 1e-9


@pytest.mark.parametrize("ref", ["heisenberg", "mixed", "three-param"])
def test_structure_identities(ref):
    g = SurfaceMap.from_wspec(catalog.wspec(ref))
    t, x = _samples(g.N, g.n, k=5, r=0.3)
    r_sum, r_int = structure_residuals(g, t, x)
    assert r_sum <= 1e-6
    assert r_int <= 1e-5


def test_wj_of_translation_is_coordinate_field():
    g = catalog.surface({"catalog": "translate"})
    t, x = _samples(1, 1, k=5)
    assert np.allclose(wj_from_gamma(g, 0, t, x), 1.0, atol=1e-8)


def test_compose_gamma_translations_add():
    g = catalog.surface({"catalog": "translate"})
    x = np.array([[0.2]])
    assert np.allclose(compose_gamma([g, g], np.array([[0.1, 0.3]]), x), 0.6, atol=1e-12)


@pytest.mark.parametrize("ref,x0,expect", catalog.CURVATURE_CASES)
def test_curvature_catalog_cz_equals_cj(ref, x0, expect):
    g = catalog.surface(ref)
    cz = curvature_check(g, x0, "CZ")
    cj = curvature_check(g, x0, "CJ")
    assert cz.holds == expect
    assert cj.holds == expect


def test_curvature_unknown_mode():
    with pytest.raises(ValueError):
        curvature_check(catalog.surface({"catalog": "translate"}), [0.0], "CX")


def test_curvature_wspec_heisenberg_cz():
    rep = curvature_check(catalog.wspec("heisenberg"), [0.0, 0.0, 0.0], "CZ")
    assert rep.holds and rep.margin >= 1.0


def test_flat_perturbation_leaves_its_leaf():
    # every Taylor field of x - flat(t) vanishes, yet gamma_t(0) != 0
    g = catalog.surface({"catalog": "flat-translate"})
    out = leaf_membership(g, [0.0], [[0.5], [0.8]])
    assert out["rank"] == 0
    assert out["status"] == "FAIL"
    assert out["max_distance"] == pytest.approx(np.exp(-1 / 0.64), rel=1e-9)


def test_translation_stays_in_leaf():
    out = leaf_membership(catalog.surface({"catalog": "translate"}), [0.0], [[0.5]])
    assert out["status"] == "PASS" and out["rank"] == 1


def test_wspec_json_round_trip():
    w = catalog.wspec("heisenberg")
    w2 = WSpec.from_json(w.to_json())
    assert w2.terms == w.terms and w2.N == w.N and w2.n == w.n
