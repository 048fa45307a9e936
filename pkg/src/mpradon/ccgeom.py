"""Carnot–Carathéodory geometry: controlled flows, balls and scaling charts.

Given fields ``X_1, ..., X_q`` with formal degrees ``d_j`` and a scale
``delta``, the scaled fields are ``Z_j = delta^{d_j} X_j``.  The ball
``B(x0, delta)`` is the set of endpoints of paths ``gamma' = sum a_j Z_j``
with ``sum a_j^2 < 1``; membership is only ever demonstrated (by exhibiting
a path), never refuted.

The scaling chart at ``x0`` is ``Phi(u) = exp(u . Z_J0) x0`` where ``J0``
picks the ``n0`` columns of ``Z(x0)`` with the largest ``n0 x n0`` minor.
Pulling the ``Z_j`` back through ``Phi`` gives fields ``Y_j`` on a
Euclidean ball whose determinant should be comparable to one.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ._ode import IntegrationError, rk4_halving
from .dilations import delta_power
from .vfields import DegreedField, VField


class ReachabilityError(IntegrationError):
    """A controlled path left the admissible domain."""


class DegenerateChartError(ValueError):
    pass


def _as_callables(fields, delta=None):
    """Evaluator ``Z(y) -> (B, n, q)`` for degreed fields scaled by ``delta``."""
    vf, scales = [], []
    for f in fields:
        if isinstance(f, DegreedField):
            vf.append(f.field)
            scales.append(1.0 if delta is None else delta_power(delta, f.degree.components))
        elif isinstance(f, VField):
            vf.append(f)
            scales.append(1.0)
        else:
            raise TypeError("fields must be VField or DegreedField")
    scales = np.array(scales)

    def Z(y):
        return np.stack([s * X(y) for s, X in zip(scales, vf)], axis=-1)
    return Z, vf[0].n, len(vf)


@dataclass(frozen=True)
class SubunitPath:
    """Piecewise-constant controls: ``coeffs[k]`` on ``[k/S, (k+1)/S)``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if c.shape[0] > 16:
            raise ValueError("at most 16 segments")
        if np.any(np.linalg.norm(c, axis=1) >= 1):
            raise ValueError("controls must satisfy sum a_j^2 < 1 on every segment")
        object.__setattr__(self, "coeffs", c)

    @property
    def segments(self):
        return self.coeffs.shape[0]

    @classmethod
    def zero(cls, q, segments=1):
        return cls(np.zeros((segments, q)))

    @classmethod
    def random(cls, rng, q, segments=4, radius=0.999):
        """Directions uniform on the sphere, magnitudes uniform in ``[0, radius)``."""
        d = rng.normal(size=(segments, q))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return cls(d * radius * rng.uniform(0, 1, (segments, 1)))


def flow_endpoints(fields, controls, x0, delta=None, ode_tol=1e-10, box=1e6):
    """Endpoints of a batch of piecewise-constant controlled paths.

    ``controls`` has shape ``(B, S, q)`` (or is a list of :class:`SubunitPath`
    with equal segment counts).  Each segment is integrated with RK4 step
    halving; the batch shares step counts.
    """
    if isinstance(controls, SubunitPath):
        controls = [controls]
    if isinstance(controls, (list, tuple)):
        controls = np.stack([p.coeffs for p in controls])
    controls = np.asarray(controls, dtype=float)
    B, S, q = controls.shape
    Z, n, q2 = _as_callables(fields, delta)
    if q != q2:
        raise ValueError("control width does not match the field count")
    y = np.broadcast_to(np.asarray(x0, dtype=float), (B, n)).copy()
    for k in range(S):
        a = controls[:, k, :]

        def f(s, yy, a=a):
            return np.einsum("bnq,bq->bn", Z(yy), a)
        try:
            y, _ = rk4_halving(f, y, 0.0, 1.0 / S, tol=ode_tol, box=box)
        except IntegrationError as exc:
            raise ReachabilityError(f"path left the domain in segment {k}: {exc}", exc.partial) from exc
    return y


def flow_endpoint(fields, path: SubunitPath, x0, delta=None, ode_tol=1e-10, box=1e6):
    """Endpoint at time 1 of ``gamma' = sum_j a_j(t) Z_j(gamma)``, ``gamma(0) = x0``."""
    return flow_endpoints(fields, [path], x0, delta, ode_tol, box)[0]


def _max_minor(mat, k):
    """Largest ``|det|`` over ``k x k`` minors of ``mat`` (rows and columns)."""
    n, m = mat.shape
    best = 0.0
    for rows in itertools.combinations(range(n), k):
        for cols in itertools.combinations(range(m), k):
            best = max(best, abs(float(np.linalg.det(mat[np.ix_(rows, cols)]))))
    return best


@dataclass
class ScalingChart:
    x0: np.ndarray
    delta: tuple | None
    n0: int
    J0: tuple
    Zx0: np.ndarray
    eta1: float
    xi1: float
    ode_tol: float
    fields: list = field(repr=False, default_factory=list)

    def _Z(self):
        return _as_callables(self.fields, self.delta)[0]

    def phi(self, u):
        """``Phi(u)``: time-one flow of ``sum_k u_k Z_{J0[k]}`` from ``x0`` (batched)."""
        u = np.asarray(u, dtype=float)
        single = u.ndim == 1
        u = np.atleast_2d(u)
        Z = self._Z()
        J = list(self.J0)

        def f(s, y):
            return np.einsum("bnk,bk->bn", Z(y)[:, :, J], u)
        y0 = np.broadcast_to(self.x0, (len(u), len(self.x0))).copy()
        if not np.any(u):
            y = y0
        else:
            y, _ = rk4_halving(f, y0, 0.0, 1.0, tol=self.ode_tol)
        return y[0] if single else y

    def dphi(self, u, h=1e-5):
        """Jacobian ``dPhi(u)`` (B, n, n0) by central differences in one batched flow."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        B, k = u.shape
        E = np.eye(k) * h
        pts = np.concatenate([u[:, None, :] + E[None], u[:, None, :] - E[None]], axis=1).reshape(-1, k)
        vals = self.phi(pts).reshape(B, 2 * k, -1)
        return np.transpose((vals[:, :k] - vals[:, k:]) / (2 * h), (0, 2, 1))

    def pullback(self, u):
        """``Y(u)`` (B, n0, q) with ``dPhi(u) Y_j(u) = Z_j(Phi(u))`` (least squares)."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        D = self.dphi(u)
        Zp = self._Z()(self.phi(u))
        return np.stack([np.linalg.lstsq(D[b], Zp[b], rcond=None)[0] for b in range(len(u))])

    def det_Y(self, u):
        """``|det_{n0 x n0} Y(u)|``: the largest ``n0 x n0`` minor of ``Y(u)``."""
        Y = self.pullback(u)
        return np.array([_max_minor(Yb, self.n0) for Yb in Y])

    def invert(self, y, u0=None, tol=1e-10, maxit=40):
        """Gauss–Newton solve of ``Phi(u) = y``; returns ``(u, ok)`` per row."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        u = np.zeros((len(y), self.n0)) if u0 is None else np.array(u0, dtype=float)
        ok = np.zeros(len(y), dtype=bool)
        for _ in range(maxit):
            r = self.phi(u) - y
            res = np.linalg.norm(r, axis=1)
            ok = res <= tol
            if ok.all():
                break
            D = self.dphi(u)
            step = np.stack([np.linalg.lstsq(D[b], r[b], rcond=None)[0] for b in range(len(y))])
            step[ok] = 0.0
            u = u - step
            if np.any(np.linalg.norm(u, axis=1) > 10 * self.eta1):
                u = np.clip(u, -10 * self.eta1, 10 * self.eta1)
        r = np.linalg.norm(self.phi(u) - y, axis=1)
        return u, r <= tol

    def to_json(self):
        return {"x0": self.x0.tolist(), "delta": None if self.delta is None else list(self.delta),
                "n0": self.n0, "J0": list(self.J0), "eta1": self.eta1, "xi1": self.xi1,
                "Z_x0": self.Zx0.tolist()}


def scaling_chart(fields, x0, delta=None, ode_tol: float = 1e-10, eta1: float = 0.25, xi1: float = 0.05,
                  rank_tol: float = 1e-10) -> ScalingChart:
    """Build the chart ``Phi(u) = exp(u . Z_J0) x0`` for ``Z = delta X``.

    ``n0`` is the numerical rank of ``Z(x0)``; ``J0`` is the first
    (lexicographic) column set attaining the largest ``n0 x n0`` minor.
    """
    x0 = np.asarray(x0, dtype=float)
    fields = list(fields)
    Z, n, q = _as_callables(fields, delta)
    Zx0 = Z(x0[None, :])[0]
    if not np.any(Zx0):
        raise DegenerateChartError("all fields vanish at x0 (n0 = 0)")
    n0 = int(np.linalg.matrix_rank(Zx0, tol=rank_tol * max(1.0, np.abs(Zx0).max())))
    if n0 == 0:
        raise DegenerateChartError("n0 = 0")
    best, J0 = -1.0, None
    for cols in itertools.combinations(range(q), n0):
        v = _max_minor(Zx0[:, cols], n0)
        if v > best * (1 + 1e-12) + 1e-300:
            best, J0 = v, cols
    return ScalingChart(x0, None if delta is None else tuple(float(d) for d in delta), n0, J0, Zx0,
                        eta1, xi1, ode_tol, fields)


@dataclass
class ChartReport:
    phi0_exact: bool
    injective: bool
    min_separation_ratio: float
    inclusion_tried: int
    inclusion_failures: int
    det_min: float
    det_max: float
    det_ratio: float
    det_bound: float
    passed: bool
    samples: dict

    def to_json(self):
        d = dict(self.__dict__)
        d["status"] = "PASS" if self.passed else "FAIL"
        return d


def chart_verify(chart: ScalingChart, samples: int = 200, probe_radius: float | None = None,
                 paths: int = 200, det_bound: float = 4.0, seed: int = 0, segments: int = 4) -> ChartReport:
    """Sampled checks of a scaling chart.

    (i) ``Phi(0) = x0`` exactly; (ii) injectivity: no two of ``samples``
    points of the ``eta1``-ball map within 1e-9 of each other unless they
    are within 1e-7; (iii) inclusion: endpoints of ``paths`` random subunit
    paths for ``Z`` at radius ``probe_radius`` (default ``eta1 / 8``) are
    inverted by Gauss–Newton inside the ``eta1``-ball; (iv) the ratio
    ``max / min`` of ``|det Y(u)|`` over the samples is at most ``det_bound``.
    """
    rng = np.random.default_rng(seed)
    k = chart.n0
    phi0 = chart.phi(np.zeros(k))
    exact = bool(np.array_equal(phi0, chart.x0))
    d = rng.normal(size=(samples, k))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    U = d * chart.eta1 * rng.uniform(0, 1, (samples, 1)) ** (1.0 / k)
    Pts = chart.phi(U)
    from scipy.spatial.distance import pdist
    du = pdist(U)
    dp = pdist(Pts)
    bad = (dp <= 1e-9) & (du > 1e-7)
    injective = not bool(bad.any())
    sep = float(np.min(dp / np.maximum(du, 1e-300)))
    xi = chart.eta1 / 8 if probe_radius is None else probe_radius
    q = len(chart.fields)
    ctrl = np.stack([SubunitPath.random(rng, q, segments).coeffs for _ in range(paths)])
    ends = flow_endpoints(chart.fields, ctrl * xi, chart.x0, chart.delta, chart.ode_tol)
    u_inv, ok = chart.invert(ends)
    ok &= np.linalg.norm(u_inv, axis=1) <= chart.eta1
    fails = int((~ok).sum())
    dets = chart.det_Y(U)
    dmin, dmax = float(dets.min()), float(dets.max())
    ratio = dmax / dmin if dmin > 0 else float("inf")
    passed = exact and injective and fails == 0 and ratio <= det_bound
    return ChartReport(exact, injective, sep, paths, fails, dmin, dmax, ratio, det_bound, passed,
                       {"samples": samples, "paths": paths, "probe_radius": xi, "segments": segments,
                        "seed": seed})


def chart_csv_rows(chart: ScalingChart, U):
    """Rows ``u1..un0, detY, inversion_ok`` for plotting."""
    U = np.atleast_2d(U)
    dets = chart.det_Y(U)
    _, ok = chart.invert(chart.phi(U))
    return [list(map(float, u)) + [float(dv), int(o)] for u, dv, o in zip(U, dets, ok)]
