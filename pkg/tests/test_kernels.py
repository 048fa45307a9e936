import csv
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mpradon.dilations import DilationScheme, ParamLattice
from mpradon.kernels import (Bump1D, BumpSpec, DyadicKernel, check_cancellation, constant_family,
                             default_eta, delta0_coefficients, delta0_family, dilate_bump, mollifier,
                             pairing_increments, product_decay_constant, synthesize_partial, telescoping_error,
                             write_grid_csv)

S1 = DilationScheme([[1]])
S2 = DilationScheme([[1, 0], [0, 1]])


def test_mollifier_support_and_value():
    assert mollifier(np.array([-1.0, 1.0, 1.5]))[:3].tolist() == [0.0, 0.0, 0.0]
    assert mollifier(np.array([0.0]))[0] == pytest.approx(np.exp(-1.0))


def test_mollifier_derivative_matches_finite_difference():
    x = np.linspace(-0.9, 0.9, 37)
    h = 1e-5
    fd = (mollifier(x + h) - mollifier(x - h)) / (2 * h)
    np.testing.assert_allclose(mollifier(x, 1), fd, atol=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.25), st.floats(-0.1, 0.1), st.integers(0, 6), st.integers(0, 6),
       st.sampled_from(["mollifier", "polymollifier"]))
def test_dilation_preserves_integral(r, c, j1, j2, kind):
    b = BumpSpec.separable([Bump1D(kind, power=2, radius=r, center=c), Bump1D("mollifier", radius=r)])
    d = dilate_bump(b, S2, (j1, j2))
    assert abs(d.integral(512) - b.integral(512)) <= 1e-10


def test_dilation_identity_at_zero():
    b = BumpSpec.separable([Bump1D("dmollifier", order=1, radius=0.2)])
    x = np.linspace(-0.3, 0.3, 101)[:, None]
    assert np.array_equal(dilate_bump(b, S1, (0,))(x), b(x))


def test_dilation_support_and_sup():
    b = BumpSpec.separable([Bump1D("mollifier", radius=0.25)])
    d = dilate_bump(b, S1, (3,))
    x = np.linspace(-0.3, 0.3, 4096)
    v0, v3 = b(x[:, None]), d(x[:, None])
    assert d.box()[0] == pytest.approx((-0.25 / 8, 0.25 / 8))
    assert np.all(v3[np.abs(x) >= 0.25 / 8] == 0)
    assert v3.max() / v0.max() == pytest.approx(8.0, rel=1e-3)


def _odd_family(scheme, lattice):
    odd = Bump1D("dmollifier", order=1, radius=0.2)
    return constant_family(scheme, lattice, BumpSpec.separable([odd, odd]))


def test_cancellation_odd_family_passes():
    rep = check_cancellation(_odd_family(S2, ParamLattice("product", 2)), quad_tol=1e-12, bound=3)
    assert rep.status == "PASS" and rep.max_residual <= 1e-12


def test_cancellation_even_bump_fails():
    odd = Bump1D("dmollifier", order=1, radius=0.2)
    even = Bump1D("mollifier", radius=0.2).normalized()
    fam = {j: BumpSpec.separable([odd, odd]) for j in itertools.product(range(3), repeat=2)}
    fam[(2, 1)] = BumpSpec.separable([even, odd])
    k = DyadicKernel(S2, ParamLattice("product", 2), fam)
    rep = check_cancellation(k, quad_tol=1e-10, bound=2)
    assert rep.status == "FAIL"
    assert rep.max_residual > 0.1


def test_cancellation_delta0_family_passes():
    k = delta0_family(default_eta(S2), S2)
    rep = check_cancellation(k, quad_tol=1e-10, bound=3)
    assert rep.status == "PASS"


def test_full_cancellation_passes_every_lattice():
    for lat in (ParamLattice("product", 2), ParamLattice("flag", 2), ParamLattice("custom", 2, ((-1, 1, 0),))):
        rep = check_cancellation(_odd_family(S2, lat), quad_tol=1e-12, bound=3)
        assert rep.status == "PASS", lat


def test_synthesize_empty_family_is_zero():
    k = DyadicKernel(S2, ParamLattice("product", 2), {})
    axes = [np.linspace(-0.3, 0.3, 17)] * 2
    assert not synthesize_partial(k, 3, axes).any()


def test_synthesize_linear():
    lat = ParamLattice("product", 2)
    b1 = BumpSpec.separable([Bump1D("dmollifier", order=1, radius=0.2)] * 2)
    b2 = BumpSpec.separable([Bump1D("dmollifier", order=2, radius=0.15), Bump1D("dmollifier", order=1)])
    axes = [np.linspace(-0.3, 0.3, 33)] * 2
    f = synthesize_partial(constant_family(S2, lat, b1), 2, axes)
    g = synthesize_partial(constant_family(S2, lat, b2), 2, axes)
    fg = synthesize_partial(constant_family(S2, lat, b1 + b2), 2, axes)
    np.testing.assert_allclose(fg, f + g, atol=1e-13 * max(1.0, np.abs(fg).max()))


@pytest.mark.parametrize("exps", [[[1]], [[1], [1]], [[1, 0], [0, 1]], [[1, 0], [0, 1], [1, 1]]])
@pytest.mark.parametrize("m", [1, 2, 3])
def test_delta0_telescoping(exps, m):
    scheme = DilationScheme(exps)
    assert telescoping_error(default_eta(scheme), scheme, m, 64 if scheme.N < 3 else 32) <= 1e-12


def test_telescoping_oracle_on_narrow_target():
    # the narrow target itself, sampled directly, against the synthesized sum
    scheme = DilationScheme([[1, 0], [0, 1], [1, 1]])
    eta = default_eta(scheme)
    target = dilate_bump(eta, scheme, (3, 3))
    axes = [np.linspace(lo, hi, 17) for lo, hi in target.box()]
    exact = target.eval_tensor(axes)
    part = synthesize_partial(delta0_family(eta, scheme), 3, axes)
    assert np.max(np.abs(exact)) > 0
    assert np.max(np.abs(part - exact)) <= 1e-12 * np.max(np.abs(exact))


def test_delta0_m0_is_eta():
    eta = default_eta(S1)
    fam = delta0_family(eta, S1)
    x = np.linspace(-0.3, 0.3, 101)[:, None]
    np.testing.assert_array_equal(fam.bump((0,))(x), eta(x))


def test_delta0_coefficient_audit():
    for m in range(1, 5):
        coef = delta0_coefficients(2, m)
        for q, c in coef.items():
            assert c == (1 if q == (m, m) else 0), (q, c)


def test_delta0_requires_unit_integral_and_product():
    with pytest.raises(ValueError):
        delta0_family(default_eta(S1).scaled_by(2.0), S1)
    with pytest.raises(ValueError):
        delta0_family(default_eta(S2), S2, ParamLattice("flag", 2))


def test_pairing_increments_decay():
    b = BumpSpec.separable([Bump1D("dmollifier", order=1, radius=0.25)])
    k = constant_family(S1, ParamLattice("product", 1), b)
    out = pairing_increments(k, lambda t: np.cos(3 * t[..., 0]) + t[..., 0] ** 3 + np.sin(t[..., 0]), 6)
    assert out["eps"] > 0.5
    assert out["r2"] >= 0.95


def test_product_decay_constant_stable():
    odd = Bump1D("dmollifier", order=1, radius=0.25)
    k = constant_family(S2, ParamLattice("product", 2), BumpSpec.separable([odd, odd]))
    axes = [np.linspace(-0.25, 0.25, 81)] * 2
    c4 = product_decay_constant(k, 4, axes, 0.02)
    c8 = product_decay_constant(k, 8, axes, 0.02)
    assert 0 < c8 <= 2 * c4 and c4 <= 2 * c8


def test_bumpspec_support_radius_checked():
    with pytest.raises(ValueError):
        BumpSpec.separable([Bump1D(radius=0.3), Bump1D(radius=0.3)], support_radius=0.25)
    b = BumpSpec.separable([Bump1D(radius=0.1), Bump1D(radius=0.1)], support_radius=0.25)
    assert BumpSpec.from_json(b.to_json()) == b
    n = b.norms()
    assert 0 < n["C0"] < n["C1"] < np.inf


def test_grid_csv_header(tmp_path):
    axes = [np.linspace(0, 1, 3), np.linspace(0, 1, 2)]
    path = tmp_path / "g.csv"
    write_grid_csv(path, axes, np.arange(6.0).reshape(3, 2))
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t1", "t2", "value"]
    assert len(rows) == 7
