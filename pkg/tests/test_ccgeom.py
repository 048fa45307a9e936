import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mpradon import catalog
from mpradon.ccgeom import (DegenerateChartError, SubunitPath, chart_verify, flow_endpoint, flow_endpoints,
                            scaling_chart)
from mpradon.vfields import DegreedField, VField

DX = VField.parse(["1", "0"])
DY = VField.parse(["0", "1"])
XDY = VField.parse(["0", "x1"])


def _rk4_oracle(F, x0, segments, steps=4000):
    """Plain fixed-step RK4 of the piecewise-constant controlled ODE."""
    x = np.array(x0, dtype=float)
    S = len(segments)
    h = 1.0 / (S * steps)
    for a in segments:
        f = lambda y: sum(ak * Fk(y) for ak, Fk in zip(a, F))
        for _ in range(steps):
            k1 = f(x)
            k2 = f(x + h / 2 * k1)
            k3 = f(x + h / 2 * k2)
            k4 = f(x + h * k3)
            x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def test_single_field_endpoint():
    f = DegreedField(VField.parse(["1"]), [1])
    end = flow_endpoint([f], SubunitPath(np.array([[0.999]])), [0.0], delta=[0.5])
    assert end[0] == pytest.approx(0.4995, abs=1e-12)


def test_zero_path():
    x0 = np.array([0.3, -0.2])
    assert np.array_equal(flow_endpoint([DX, XDY], SubunitPath.zero(2), x0), x0)


def test_grushin_two_segment_oracle():
    path = SubunitPath(np.array([[0.9, 0.0], [0.0, 0.5]]))
    got = flow_endpoint([DX, XDY], path, [0.0, 0.0])
    F = [lambda y: np.array([1.0, 0.0]), lambda y: np.array([0.0, y[0]])]
    assert np.allclose(got, _rk4_oracle(F, [0.0, 0.0], path.coeffs), atol=1e-8)
    # each segment lasts 1/2: x = 0.9 / 2, then y = 0.5 * x / 2
    assert np.allclose(got, [0.45, 0.1125], atol=1e-10)


def test_subunit_path_rejects_unit_speed():
    with pytest.raises(ValueError):
        SubunitPath(np.array([[1.0, 0.0]]))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 1.0), st.floats(0.1, 1.0))
def test_multiscale_consistency(seed, d1, d2):
    # pre-scaling the fields equals scaling the controls
    rng = np.random.default_rng(seed)
    path = SubunitPath.random(rng, 2, segments=3)
    fields = [DegreedField(DX, [1, 0]), DegreedField(XDY, [0, 1])]
    a = flow_endpoint(fields, path, [0.2, 0.1], delta=[d1, d2])
    scaled = SubunitPath(path.coeffs * np.array([d1, d2]))
    b = flow_endpoint([DX, XDY], scaled, [0.2, 0.1])
    assert np.max(np.abs(a - b)) <= 1e-9


def test_ball_monotonicity():
    # the same path is still subunit after shrinking delta' <= delta in coefficient form
    rng = np.random.default_rng(3)
    paths = [SubunitPath.random(rng, 2) for _ in range(5)]
    fields = [DegreedField(DX, [1, 0]), DegreedField(XDY, [0, 1])]
    small = flow_endpoints(fields, paths, [0.5, 0.0], delta=[0.25, 0.25])
    for p, e in zip(paths, small):
        bigger = SubunitPath(p.coeffs * 0.5)
        assert np.allclose(flow_endpoint(fields, bigger, [0.5, 0.0], delta=[0.5, 0.5]), e, atol=1e-9)


def test_constant_chart():
    ch = scaling_chart([DX, DY], [0.3, 0.4])
    u = np.array([[0.1, -0.2], [0.05, 0.0]])
    assert np.allclose(ch.phi(u), [0.3, 0.4] + u, atol=1e-12)
    assert np.allclose(ch.det_Y(u), 1.0, atol=1e-6)
    assert ch.n0 == 2


def test_single_field_chart_is_one_dimensional():
    ch = scaling_chart([DX], [0.0, 0.0])
    assert ch.n0 == 1 and ch.J0 == (0,)


def test_degenerate_chart():
    with pytest.raises(DegenerateChartError):
        scaling_chart([XDY], [0.0, 0.0])


def test_grushin_chart_and_det_oracle():
    ch = scaling_chart([DX, XDY], [1.0, 0.0])
    assert ch.J0 == (0, 1) and ch.n0 == 2
    assert np.array_equal(ch.phi(np.zeros(2)), [1.0, 0.0])
    # Phi(u) = (1 + u1, u2 (1 + u1/2)); |det Y| = (1 + u1) / (1 + u1/2)
    u = np.array([[0.2, 0.1], [-0.2, 0.15], [0.0, -0.2]])
    want_phi = np.stack([1 + u[:, 0], u[:, 1] * (1 + u[:, 0] / 2)], axis=1)
    assert np.allclose(ch.phi(u), want_phi, atol=1e-9)
    assert np.allclose(ch.det_Y(u), (1 + u[:, 0]) / (1 + u[:, 0] / 2), atol=1e-6)


def test_pullback_pushes_forward():
    ch = scaling_chart([DX, XDY], [1.0, 0.0])
    u = np.array([[0.1, 0.1]])
    D = ch.dphi(u)[0]
    Y = ch.pullback(u)[0]
    Z = np.stack([DX(ch.phi(u))[0], XDY(ch.phi(u))[0]], axis=1)
    assert np.max(np.abs(D @ Y - Z)) <= 1e-6


@pytest.mark.parametrize("name", ["constant", "grushin", "heisenberg"])
def test_catalog_charts_verify(name):
    d = catalog.CHARTS[name]
    degs = d.get("degrees")
    fields = [VField.parse(f) for f in d["fields"]]
    if degs:
        fields = [DegreedField(f, g) for f, g in zip(fields, degs)]
    ch = scaling_chart(fields, d["x0"], d.get("delta"))
    rep = chart_verify(ch, samples=100, paths=100, det_bound=d["det_bound"], seed=1)
    assert rep.phi0_exact and rep.injective and rep.passed


def test_heisenberg_chart_base_matrix():
    d = catalog.CHARTS["heisenberg"]
    fields = [DegreedField(VField.parse(f), g) for f, g in zip(d["fields"], d["degrees"])]
    ch = scaling_chart(fields, d["x0"], d["delta"])
    assert np.allclose(ch.Zx0, [[0.5, 0, 0], [0, 0.25, 0], [0, 0, -0.5]])
    assert ch.n0 == 3
