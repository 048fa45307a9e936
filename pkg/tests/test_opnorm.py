import numpy as np
import pytest
import scipy.sparse as sps
from hypothesis import given, settings, strategies as st

from mpradon.dilations import DilationScheme
from mpradon.kernels import Bump1D, BumpSpec
from mpradon.opnorm import (ConvergenceError, Cutoff, GridSpec, adjoint, cotlar_bound, deposit, discretize_piece,
                            fit_decay, fourier_table_1d, interp_entries, l1delta_seminorm, plateau, product_op,
                            spectral_norm, transport_density, transversality_probe)


def test_gridspec_basics():
    g = GridSpec.cube(2, 1.0, 5)
    assert g.shape == (5, 5) and g.size == 25 and g.ndim == 2
    assert np.allclose(g.h, [0.5, 0.5])
    assert g.points().shape == (25, 2)
    assert g.cell_volume() == pytest.approx(0.25)
    assert list(g.inside(np.array([[0.0, 0.0], [1.5, 0.0]]))) == [True, False]


def test_plateau():
    assert np.allclose(plateau([0.0, 0.3, 0.5]), 1.0)
    assert np.allclose(plateau([1.0, 1.3]), 0.0)
    v = plateau(np.linspace(0.5, 1.0, 11))
    assert np.all(np.diff(v) <= 1e-15)


def test_interp_entries_reproduce_linear_functions():
    g = GridSpec.cube(2, 1.0, 9)
    nodes = g.points()
    f = 2.0 * nodes[:, 0] - 0.5 * nodes[:, 1] + 0.3
    pts = np.random.default_rng(0).uniform(-0.9, 0.9, size=(20, 2))
    r, c, v = interp_entries(g, pts, np.ones(20), np.arange(20))
    A = sps.coo_matrix((v, (r, c)), shape=(20, g.size)).tocsr()
    assert np.allclose(A @ f, 2.0 * pts[:, 0] - 0.5 * pts[:, 1] + 0.3, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 12), st.integers(2, 12))
def test_spectral_norm_matches_svd(seed, m, n):
    A = np.random.default_rng(seed).normal(size=(m, n))
    want = np.linalg.svd(A, compute_uv=False)[0]
    assert spectral_norm(A, tol=1e-13, maxiter=200_000) == pytest.approx(want, rel=1e-5)


def test_spectral_norm_diagonal_and_zero():
    assert spectral_norm(np.diag([3.0, 1.0, 2.0])) == pytest.approx(3.0, rel=1e-8)
    assert spectral_norm(np.zeros((3, 3))) == 0.0


def test_spectral_norm_convergence_error():
    A = np.diag([1.0, 0.999999, 0.5])
    with pytest.raises(ConvergenceError):
        spectral_norm(A, tol=1e-16, maxiter=2)


def test_product_and_adjoint():
    rng = np.random.default_rng(1)
    A, B = rng.normal(size=(4, 5)), rng.normal(size=(5, 3))
    P = product_op(A, B)
    x, y = rng.normal(size=3), rng.normal(size=4)
    assert np.allclose(P.matvec(x), A @ B @ x)
    assert np.allclose(adjoint(P).matvec(y), (A @ B).T @ y)


def test_fit_decay_exact_synthetic():
    table = {(j, k): 2.0 ** (1.0 - 1.5 * abs(j - k)) for j in range(5) for k in range(5)}
    slope, intercept, r2 = fit_decay(table)
    assert slope == pytest.approx(-1.5) and intercept == pytest.approx(1.0) and r2 == pytest.approx(1.0)


def test_cotlar_bound_geometric_sum():
    table = {(j, k): 4.0 ** -abs(j - k) for j in range(3) for k in range(3)}
    # worst row is the middle one: 1 + 2 * 2^-1
    assert cotlar_bound(table) == pytest.approx(2.0)


def _translation_pieces(bump, jmax=3, points=128):
    grid = GridSpec.cube(1, 1.0, points)
    cut = Cutoff.for_grid(grid, 0.75)
    spec = BumpSpec.separable([bump])
    surf = lambda t, x: x - t
    return {j: discretize_piece(surf, spec, (j,), DilationScheme.isotropic(1), grid, cut, cut)
            for j in range(jmax + 1)}, grid, cut


def test_discretized_convolution_on_constants():
    # T_j 1 = psi1 * int varsigma = psi1 for a unit-mass bump away from the edge
    b = Bump1D("mollifier", radius=0.25).normalized()
    ops, grid, cut = _translation_pieces(b)
    x = grid.axes()[0]
    inner = np.abs(x) < 0.2
    for op in ops.values():
        out = op.matrix @ np.ones(grid.size)
        assert np.allclose(out[inner], 1.0, atol=1e-3)


def test_cancelling_pieces_decay_and_match_fourier_oracle():
    b = Bump1D("dmollifier", order=1, radius=0.25)
    ops, grid, _ = _translation_pieces(b, jmax=4)
    tab = {}
    for j in ops:
        for k in ops:
            tab[(j, k)] = spectral_norm(product_op(adjoint(ops[k]), ops[j]))
    slope, _, _ = fit_decay(tab)
    orc = fourier_table_1d(BumpSpec.separable([b]), range(5), xi_max=np.pi / grid.h[0])
    oslope, _, _ = fit_decay(orc)
    assert slope < -0.5
    assert abs(slope - oslope) / abs(oslope) <= 0.15


def test_fourier_table_symmetric():
    b = Bump1D("dmollifier", order=1, radius=0.25)
    orc = fourier_table_1d(BumpSpec.separable([b]), range(3))
    for (j, k), v in orc.items():
        assert v == pytest.approx(orc[(k, j)])


def test_deposit_conserves_mass():
    g = GridSpec.cube(1, 1.0, 41)
    pts = np.random.default_rng(0).uniform(-0.9, 0.9, size=(100, 1))
    h = deposit(g, pts, np.full(100, 0.01))
    assert np.trapezoid(h, g.axes()[0]) == pytest.approx(1.0, rel=1e-9)


def test_transport_identity_density():
    g = GridSpec((-1.0,), (1.0,), (201,))
    b = Bump1D("mollifier", radius=0.5).normalized()
    res = transport_density(lambda t: t, lambda t: b(t[:, 0]), [(-0.5, 0.5)], g)
    y = g.axes()[0]
    assert np.trapezoid(np.abs(res.h - b(y)), y) <= 0.02
    assert res.mass == pytest.approx(1.0, rel=1e-6)


def test_tent_seminorm_is_two():
    g = GridSpec((-2.0,), (2.0,), (2001,))
    tent = np.maximum(0.0, 1.0 - np.abs(g.axes()[0]))
    # int |tent(y - z) - tent(y)| dy = 2 z - z^2 / 2 for small z, so the ratio tends to 2
    assert l1delta_seminorm(tent, g, 1.0, [0.002, 0.004, 0.01]) == pytest.approx(2.0, rel=0.03)


def test_seminorm_rejects_bad_delta():
    g = GridSpec.cube(1, 1.0, 11)
    with pytest.raises(ValueError):
        l1delta_seminorm(np.zeros(11), g, 0.0, [0.1])


def test_transversality_probe_orders():
    lin = transversality_probe(lambda t: t, [(-0.5, 0.5)])
    sq = transversality_probe(lambda t: t**2, [(-0.5, 0.5)])
    flat = transversality_probe(lambda t: 0.0 * t, [(-0.5, 0.5)])
    assert lin["passed"] and lin["order"] == 0
    assert sq["passed"] and sq["order"] == 1
    assert not flat["passed"]
