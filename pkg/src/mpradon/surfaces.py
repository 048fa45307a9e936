"""Surfaces ``gamma_t(x)`` and their generating fields ``W(t, x)``.

A surface is a smooth family of maps ``gamma_t`` with ``gamma_0 = id``.  It
is encoded by

    W(t, x) = d/de|_{e=1} gamma_{e t} o gamma_t^{-1}(x),

and conversely ``gamma_t(x) = omega(1, t, x)`` where
``d omega/de = (1/e) W(e t, omega)``, ``omega(0) = x``.  For
``W(t, x) = sum_alpha t^alpha X_alpha(x)`` the right-hand side is
``sum_alpha e^{|alpha| - 1} t^alpha X_alpha(omega)``, which is regular at
``e = 0``.

Besides the two directions of this correspondence the module provides the
partial generators ``W_j``, compositions ``Gamma``, Taylor-coefficient
fields and the curvature checks (C_Z), (C_Y), (C_J).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import sympy as sp

from ._ode import IntegrationError, rk4_halving
from .dilations import DilationScheme, degree as _degree
from .vfields import VField, bracket

HOLD_THRESHOLD = 1e-8
INDETERMINATE_FLOOR = 1e-12


def multi_indices(N: int, max_order: int, min_order: int = 1):
    """Multi-indices ``alpha`` in ``N^N`` with ``min_order <= |alpha| <= max_order`` (graded lex)."""
    out = []
    for k in range(min_order, max_order + 1):
        for a in itertools.product(range(k + 1), repeat=N):
            if sum(a) == k:
                out.append(tuple(a))
    return sorted(out, key=lambda a: (sum(a), tuple(-v for v in a)))


def _monomials(t, alphas):
    """``t^alpha`` for each alpha: ``t`` (B, N) -> (B, len(alphas))."""
    t = np.asarray(t, dtype=float)
    return np.stack([np.prod(t ** np.array(a, dtype=float), axis=-1) for a in alphas], axis=-1)


@dataclass(frozen=True)
class WSpec:
    """``W(t, x) = sum_{0 < |alpha| <= L} t^alpha X_alpha(x)``."""

    N: int
    n: int
    terms: dict
    scheme: DilationScheme | None = None
    name: str = "W"

    def __post_init__(self):
        terms = {}
        for a, X in dict(self.terms).items():
            a = tuple(int(v) for v in a)
            if len(a) != self.N or sum(a) == 0 or min(a) < 0:
                raise ValueError(f"invalid multi-index {a}")
            if X.n != self.n:
                raise ValueError("field dimension mismatch")
            terms[a] = X
        object.__setattr__(self, "terms", terms)
        if self.scheme is not None and self.scheme.N != self.N:
            raise ValueError("scheme dimension mismatch")

    @property
    def L(self) -> int:
        return max(sum(a) for a in self.terms) if self.terms else 0

    def degree_of(self, alpha):
        scheme = self.scheme or DilationScheme.isotropic(self.N)
        return _degree(scheme, alpha)

    def __call__(self, t, x) -> np.ndarray:
        t = np.atleast_2d(np.asarray(t, dtype=float))
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(np.broadcast_shapes(x.shape, t.shape[:-1] + (self.n,)))
        for a, X in self.terms.items():
            out = out + _monomials(t, [a])[..., :1] * X(x)
        return out

    def rhs(self, t):
        """Desingularized right-hand side ``f(e, y) = sum e^{|a|-1} t^a X_a(y)`` for batched ``t``."""
        t = np.atleast_2d(np.asarray(t, dtype=float))
        items = [(sum(a) - 1, _monomials(t, [a]), X) for a, X in self.terms.items()]

        def f(e, y):
            out = np.zeros_like(y)
            for p, mono, X in items:
                out = out + (e**p if p else 1.0) * mono * X(y)
            return out
        return f

    def to_json(self):
        return {"N": self.N, "n": self.n, "name": self.name,
                "terms": [{"alpha": list(a), "field": X.to_text()} for a, X in self.terms.items()],
                "exponents": None if self.scheme is None else self.scheme.to_json()}

    @classmethod
    def from_json(cls, d):
        n = int(d["n"])
        terms = {tuple(t["alpha"]): VField.parse(t["field"], n) for t in d["terms"]}
        scheme = DilationScheme.from_json(d["exponents"]) if d.get("exponents") else None
        return cls(int(d["N"]), n, terms, scheme, d.get("name", "W"))


def _batch(t, x, N, n):
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    single = t.ndim == 1 and x.ndim == 1
    t = np.atleast_2d(t)
    x = np.atleast_2d(x)
    B = max(len(t), len(x))
    t = np.broadcast_to(t, (B, N)).copy()
    x = np.broadcast_to(x, (B, n)).copy()
    return t, x, single


def omega(w: WSpec, eps: float, t, x, ode_tol: float = 1e-10, box: float | None = 1e6):
    """``omega(eps, t, x)``: solution of the desingularized ODE at ``eps``."""
    t, x, single = _batch(t, x, w.N, w.n)
    y, _ = rk4_halving(w.rhs(t), x, 0.0, float(eps), tol=ode_tol, box=box)
    return y[0] if single else y


def gamma_from_w(w: WSpec, t, x, ode_tol: float = 1e-10, box: float | None = 1e6):
    """``gamma_t(x) = omega(1, t, x)`` (batched over rows of ``t`` and ``x``)."""
    return omega(w, 1.0, t, x, ode_tol, box)


def _newton_inverse(fwd, t, x, tol=1e-13, maxit=50, h=1e-7):
    """Solve ``fwd(t, y) = x`` for ``y`` by Newton with a finite-difference Jacobian."""
    y = x.copy()
    n = x.shape[1]
    for _ in range(maxit):
        r = fwd(t, y) - x
        if np.max(np.abs(r)) <= tol:
            return y, True
        J = np.empty((len(y), n, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            J[:, :, k] = (fwd(t, y + e) - fwd(t, y - e)) / (2 * h)
        try:
            step = np.linalg.solve(J, r[..., None])[..., 0]
        except np.linalg.LinAlgError:
            return y, False
        y = y - step
    r = fwd(t, y) - x
    return y, bool(np.max(np.abs(r)) <= 1e3 * tol)


@dataclass
class SurfaceMap:
    """A surface ``gamma`` with forward and inverse evaluators.

    ``forward(t, x)`` and ``inverse(t, x)`` take batches ``t`` (B, N) and
    ``x`` (B, n).  Use the constructors :meth:`closed_form`,
    :meth:`from_wspec` and :meth:`exponential`.
    """

    kind: str
    N: int
    n: int
    forward: Callable
    inverse: Callable | None = None
    rho: float = 1.0
    name: str = "gamma"
    wspec: WSpec | None = None
    meta: dict = field(default_factory=dict)

    def __call__(self, t, x):
        t, x, single = _batch(t, x, self.N, self.n)
        y = self.forward(t, x)
        return y[0] if single else y

    def inv(self, t, x):
        t, x, single = _batch(t, x, self.N, self.n)
        if self.inverse is not None:
            y = self.inverse(t, x)
        else:
            y, ok = _newton_inverse(self.forward, t, x)
            if not ok:
                raise IntegrationError("Newton inversion failed")
        return y[0] if single else y

    @classmethod
    def closed_form(cls, N, n, forward, inverse=None, name="gamma", rho=1.0):
        return cls("closed-form", N, n, forward, inverse, rho, name)

    @classmethod
    def from_wspec(cls, w: WSpec, ode_tol: float = 1e-10, rho: float = 1.0, box: float | None = 1e6):
        """ODE-defined surface; the inverse integrates the same ODE from ``e = 1`` back to 0."""

        def fwd(t, x):
            y, _ = rk4_halving(w.rhs(t), x, 0.0, 1.0, tol=ode_tol, box=box)
            return y

        def inv(t, x):
            y, _ = rk4_halving(w.rhs(t), x, 1.0, 0.0, tol=ode_tol, box=box)
            return y
        return cls("ode", w.N, w.n, fwd, inv, rho, w.name, w, {"ode_tol": ode_tol})

    @classmethod
    def exponential(cls, N, n, terms: dict, ode_tol: float = 1e-10, name="exp", rho=1.0):
        """``gamma_t(x) = exp(sum_alpha t^alpha X_alpha) x`` (time-one flow)."""
        alphas = list(terms)
        fields = [terms[a] for a in alphas]

        def flow(t, x, sign):
            mono = _monomials(t, alphas)

            def f(s, y):
                out = np.zeros_like(y)
                for k, X in enumerate(fields):
                    out = out + mono[:, k:k + 1] * X(y)
                return sign * out
            y, _ = rk4_halving(f, x, 0.0, 1.0, tol=ode_tol)
            return y
        return cls("exponential", N, n, lambda t, x: flow(t, x, 1.0), lambda t, x: flow(t, x, -1.0),
                   rho, name, None, {"terms": terms})


# ---------------------------------------------------------------------------
# W and W_j from gamma


def _fd_param(gamma: SurfaceMap, t, y, direction, scale_mode, h):
    """Central difference (Richardson once) of ``gamma_{t(s)}(y)`` at ``s = 0``.

    ``scale_mode``: ``t(s) = (1 + s) t``; otherwise ``t(s) = t + s * direction``.
    """
    B = len(t)
    offs = np.array([h, -h, h / 2, -h / 2])
    if scale_mode:
        ts = np.concatenate([(1 + o) * t for o in offs])
    else:
        ts = np.concatenate([t + o * direction for o in offs])
    ys = np.concatenate([y] * 4)
    g = gamma.forward(ts, ys).reshape(4, B, gamma.n)
    D1 = (g[0] - g[1]) / (2 * h)
    D2 = (g[2] - g[3]) / h
    return (4 * D2 - D1) / 3


def w_from_gamma(gamma: SurfaceMap, t, x, fd_step: float = 1e-4):
    """``W(t, x) = d/de|_{e=1} gamma_{e t}(gamma_t^{-1}(x))`` by finite differences."""
    t, x, single = _batch(t, x, gamma.N, gamma.n)
    y = gamma.inv(t, x)
    W = _fd_param(gamma, t, y, None, True, fd_step)
    return W[0] if single else W


def wj_from_gamma(gamma: SurfaceMap, j: int, t, x, fd_step: float = 1e-4):
    """``W_j(t, x) = d/ds_j|_{s=0} gamma_{t+s}(gamma_t^{-1}(x))``."""
    t, x, single = _batch(t, x, gamma.N, gamma.n)
    y = gamma.inv(t, x)
    e = np.zeros(gamma.N)
    e[j] = 1.0
    W = _fd_param(gamma, t, y, e, False, fd_step)
    return W[0] if single else W


def compose_gamma(gammas, tau, x, inverse_mask=None):
    """``Gamma(tau, x) = gamma^1_{t^1} o ... o gamma^m_{t^m}(x)``.

    ``tau`` concatenates ``t^1, ..., t^m`` (batched rows allowed).  The
    rightmost factor is applied first.  ``inverse_mask[i]`` replaces factor
    ``i`` by its inverse.
    """
    tau = np.asarray(tau, dtype=float)
    x = np.asarray(x, dtype=float)
    single = tau.ndim == 1 and x.ndim == 1
    tau = np.atleast_2d(tau)
    x = np.atleast_2d(x)
    B = max(len(tau), len(x))
    tau = np.broadcast_to(tau, (B, tau.shape[1]))
    y = np.broadcast_to(x, (B, x.shape[1])).copy()
    offs = np.cumsum([0] + [g.N for g in gammas])
    if tau.shape[1] != offs[-1]:
        raise ValueError(f"tau must have {offs[-1]} entries")
    mask = [False] * len(gammas) if inverse_mask is None else list(inverse_mask)
    for i in reversed(range(len(gammas))):
        g = gammas[i]
        ti = tau[:, offs[i]:offs[i + 1]]
        if np.any(np.linalg.norm(ti, axis=1) > g.rho):
            raise ValueError(f"factor {i} ({g.name}) evaluated outside |t| <= {g.rho}")
        try:
            y = g.inv(ti, y) if mask[i] else g(ti, y)
        except IntegrationError as exc:
            raise IntegrationError(f"factor {i} ({g.name}) failed: {exc}") from exc
    return y[0] if single else y


# ---------------------------------------------------------------------------
# Taylor fields


def _cheb_nodes(p, r):
    k = np.arange(p)
    return r * np.cos((2 * k + 1) * np.pi / (2 * p))


def _poly_fit(points, values, alphas, r):
    """Least-squares fit of ``values`` by monomials ``(points / r)^alpha``."""
    V = _monomials(points / r, alphas)
    coef, *_ = np.linalg.lstsq(V, values, rcond=None)
    scale = np.array([r ** -sum(a) for a in alphas])
    return coef * scale[:, None]


@dataclass
class TaylorFields:
    """Estimated ``X_alpha`` (values at ``x_points``) keyed by ``alpha``."""

    values: dict
    x_points: np.ndarray
    exact: dict | None = None
    floor: float = 0.0

    def nonzero(self):
        return [a for a, v in self.values.items() if np.max(np.abs(v)) > 0]


def taylor_fields(obj, order: int = 4, x_points=None, radius: float = 0.1, floor: float = 1e-6,
                  fd_step: float = 1e-4, which=None) -> TaylorFields:
    """Taylor coefficients ``X_alpha`` of ``W`` (or of ``W_j`` when ``which = j``).

    A :class:`WSpec` is echoed exactly.  For a :class:`SurfaceMap` the
    generator is sampled at Chebyshev nodes ``|t_i| <= radius`` and fitted
    by a polynomial of total degree ``order + 2``; coefficients with
    ``1 <= |alpha| <= order`` (``0 <= |alpha|`` for ``W_j``) are returned.
    Entries below ``floor`` are set to zero (finite-difference noise).
    """
    if order > 6:
        raise ValueError("order is limited to 6")
    if isinstance(obj, WSpec):
        exact = {a: X for a, X in obj.terms.items() if sum(a) <= order}
        vals = {}
        if x_points is not None:
            xp = np.atleast_2d(x_points)
            vals = {a: X(xp) for a, X in exact.items()}
        return TaylorFields(vals, None if x_points is None else np.atleast_2d(x_points), exact, 0.0)
    gamma = obj
    N, n = gamma.N, gamma.n
    xp = np.atleast_2d(np.asarray(x_points, dtype=float))
    deg = order + 2
    p = deg + 1
    nodes = _cheb_nodes(p, radius)
    T = np.array(list(itertools.product(nodes, repeat=N)))
    lo = 1 if which is None else 0
    alphas = multi_indices(N, deg, 0)
    P, X = len(T), len(xp)
    tt = np.repeat(T, X, axis=0)
    xx = np.tile(xp, (P, 1))
    if which is None:
        W = w_from_gamma(gamma, tt, xx, fd_step)
    else:
        W = wj_from_gamma(gamma, which, tt, xx, fd_step)
    W = W.reshape(P, X * n)
    coef = _poly_fit(T, W, alphas, radius)
    out = {}
    for k, a in enumerate(alphas):
        if lo <= sum(a) <= order:
            v = coef[k].reshape(X, n)
            v = np.where(np.abs(v) < floor, 0.0, v)
            out[a] = v
    return TaylorFields(out, xp, None, floor)


def _fit_field_near(obj, alpha_list, x0, order, radius_x=0.05, xdeg=2, floor=1e-6, which=None):
    """Polynomial vector fields in ``x`` approximating ``X_alpha`` near ``x0``."""
    n = len(x0)
    p = xdeg + 2
    nodes = _cheb_nodes(p, radius_x)
    offs = np.array(list(itertools.product(nodes, repeat=n)))
    xs = x0[None, :] + offs
    tf = taylor_fields(obj, order, xs, floor=floor, which=which)
    xalphas = multi_indices(n, xdeg, 0)
    syms = sp.symbols(" ".join(f"x{i + 1}" for i in range(n)), real=True) if n > 1 else \
        (sp.Symbol("x1", real=True),)
    fields = {}
    for a in alpha_list:
        if a not in tf.values:
            continue
        vals = tf.values[a]
        if np.max(np.abs(vals)) == 0:
            continue
        coef = _poly_fit(offs, vals, xalphas, radius_x)
        comps = []
        for i in range(n):
            expr = 0
            for c, xa in zip(coef[:, i], xalphas):
                if abs(c) < floor:
                    continue
                mono = 1
                for s, x0i, k in zip(syms, x0, xa):
                    mono = mono * (s - float(x0i)) ** k
                expr += float(c) * mono
            comps.append(expr)
        fields[a] = VField(n, tuple(comps))
    return fields


@dataclass
class CurvatureReport:
    mode: str
    holds: bool
    status: str  # holds, fails, indeterminate, uncertified
    order_used: tuple
    witness: object
    margin: float
    threshold: float = HOLD_THRESHOLD

    def to_json(self):
        return {"mode": self.mode, "holds": self.holds, "status": self.status,
                "order_used": list(self.order_used), "witness": str(self.witness),
                "margin": self.margin, "threshold": self.threshold}


def _minor_margin(mat):
    """Largest ``|det|`` over all ``n x n`` column minors of an ``n x K`` matrix."""
    n, K = mat.shape
    best, arg = 0.0, None
    for cols in itertools.combinations(range(K), n):
        d = abs(float(np.linalg.det(mat[:, cols])))
        if d > best:
            best, arg = d, cols
    return best, arg


def _status(margin, threshold):
    if margin > threshold:
        return "holds"
    if margin >= INDETERMINATE_FLOOR:
        return "indeterminate"
    return "fails"


def _iterated_brackets(fields, Mprime):
    words = [((k,), f) for k, f in enumerate(fields)]
    out = list(words)
    level = words
    for _ in range(2, Mprime + 1):
        new = []
        for (wa, fa) in words:
            for (wb, fb) in level:
                b = bracket(fa, fb)
                if not b.is_zero():
                    new.append((wa + wb, b))
        out.extend(new)
        level = new
    return out


def curvature_check(obj, x0, mode: str = "CZ", M: int = 2, Mprime: int = 2,
                    threshold: float = HOLD_THRESHOLD, floor: float = 1e-6,
                    stencil_radius: float = 0.1) -> CurvatureReport:
    """Check (C_Z), (C_Y) or (C_J) at ``x0``.

    CZ: the Taylor fields ``X_alpha`` (``|alpha| <= M``) and their iterated
    brackets up to length ``Mprime`` evaluated at ``x0``; margin is the
    largest ``|det|`` of an ``n x n`` minor.  CY: the same with the Taylor
    fields of every ``W_j``.  CJ: the largest ``|d_tau^beta det|`` over
    ``|beta| <= M`` and all ``n x n`` minors of ``dGamma/dtau`` at
    ``tau = 0``, ``Gamma`` being the ``n``-fold self-composition.
    """
    x0 = np.asarray(x0, dtype=float)
    n = len(x0)
    mode = mode.upper()
    if mode in ("CZ", "CY"):
        N = obj.N
        if isinstance(obj, WSpec):
            if mode == "CY":
                raise ValueError("CY needs a SurfaceMap")
            labels = [a for a in sorted(obj.terms) if sum(a) <= M]
            fields = [obj.terms[a] for a in labels]
        else:
            try:
                if mode == "CZ":
                    alist = multi_indices(N, M, 1)
                    fmap = _fit_field_near(obj, alist, x0, M, floor=floor)
                    labels = [a for a in alist if a in fmap]
                    fields = [fmap[a] for a in labels]
                else:
                    alist = multi_indices(N, M, 0)
                    labels, fields = [], []
                    for j in range(N):
                        fmap = _fit_field_near(obj, alist, x0, M, floor=floor, which=j)
                        labels.extend((a, j) for a in alist if a in fmap)
                        fields.extend(fmap[a] for a in alist if a in fmap)
            except (IntegrationError, np.linalg.LinAlgError) as exc:
                return CurvatureReport(mode, False, "uncertified", (M, Mprime), str(exc), 0.0, threshold)
        if not fields:
            return CurvatureReport(mode, False, "fails", (M, Mprime), None, 0.0, threshold)
        words = _iterated_brackets(fields, Mprime)
        mat = np.stack([f(x0[None, :])[0] for _, f in words], axis=1)
        margin, cols = _minor_margin(mat)
        st = _status(margin, threshold)
        wit = None if cols is None else [tuple(labels[k] for k in words[c][0]) for c in cols]
        return CurvatureReport(mode, st == "holds", st, (M, Mprime), wit, margin, threshold)
    if mode == "CJ":
        return _cj_check(obj, x0, M, threshold, stencil_radius)
    raise ValueError(f"unknown mode {mode!r}")


def _halton(count, dim):
    primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]
    out = np.zeros((count, dim))
    for d in range(dim):
        b = primes[d]
        for i in range(count):
            f, r, k = 1.0, 0.0, i + 1
            while k > 0:
                f /= b
                r += f * (k % b)
                k //= b
            out[i, d] = r
    return out


def _cj_check(gamma, x0, M, threshold, r):
    n = len(x0)
    gammas = [gamma] * n
    D = gamma.N * n
    betas = multi_indices(D, M + 1, 0)
    count = max(3 * len(betas), 20)
    pts = r * (2 * _halton(count, D) - 1)
    pts[0] = 0.0
    h = 1e-5
    rows = []
    for k in range(D):
        e = np.zeros(D)
        e[k] = h
        rows.append((pts + e, pts - e))
    allp = np.concatenate([a for pair in rows for a in pair])
    try:
        vals = compose_gamma(gammas, allp, x0[None, :])
    except (IntegrationError, ValueError) as exc:
        return CurvatureReport("CJ", False, "uncertified", (M,), str(exc), 0.0, threshold)
    vals = vals.reshape(2 * D, count, n)
    J = np.stack([(vals[2 * k] - vals[2 * k + 1]) / (2 * h) for k in range(D)], axis=-1)  # (count, n, D)
    minors = []
    for cols in itertools.combinations(range(D), n):
        minors.append(np.linalg.det(J[:, :, cols]))
    minors = np.stack(minors, axis=-1)  # (count, #minors)
    coef = _poly_fit(pts, minors, betas, r)
    best, arg = 0.0, None
    for k, b in enumerate(betas):
        if sum(b) > M:
            continue
        fact = float(np.prod([math.factorial(v) for v in b]))
        for m in range(minors.shape[1]):
            v = abs(coef[k, m]) * fact
            if v > best:
                best, arg = v, (b, m)
    st = _status(best, threshold)
    return CurvatureReport("CJ", st == "holds", st, (M,), arg, best, threshold)


# ---------------------------------------------------------------------------
# structure identities and leaf membership


def structure_residuals(gamma: SurfaceMap, t, x, fd_step: float = 1e-4, outer_step: float = 1e-3):
    """Residuals of ``W = sum_j t_j W_j`` and of the integrability identity.

    Returns ``(max |W - sum t_j W_j|, max |d_k W_j - d_j W_k - [W_j, W_k]|)``;
    ``t``- and ``x``-derivatives of ``W_j`` use Richardson-extrapolated
    central differences with step ``outer_step``.
    """
    t, x, _ = _batch(t, x, gamma.N, gamma.n)
    N, n = gamma.N, gamma.n
    W = w_from_gamma(gamma, t, x, fd_step)
    Wj = [wj_from_gamma(gamma, j, t, x, fd_step) for j in range(N)]
    r1 = float(np.max(np.abs(W - sum(t[:, j:j + 1] * Wj[j] for j in range(N)))))
    if N < 2:
        return r1, 0.0

    def d_param(j, k):
        H = outer_step

        def at(s):
            tt = t.copy()
            tt[:, k] += s
            return wj_from_gamma(gamma, j, tt, x, fd_step)
        D1 = (at(H) - at(-H)) / (2 * H)
        D2 = (at(H / 2) - at(-H / 2)) / H
        return (4 * D2 - D1) / 3

    def jac_x(j):
        H = outer_step
        cols = []
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0

            def at(s):
                return wj_from_gamma(gamma, j, t, x + s * e, fd_step)
            D1 = (at(H) - at(-H)) / (2 * H)
            D2 = (at(H / 2) - at(-H / 2)) / H
            cols.append((4 * D2 - D1) / 3)
        return np.stack(cols, axis=-1)  # (B, n, n): d(W_j)_a / dx_i

    Jx = [jac_x(j) for j in range(N)]
    r2 = 0.0
    for j in range(N):
        for k in range(j + 1, N):
            lhs = d_param(j, k) - d_param(k, j)
            br = np.einsum("bai,bi->ba", Jx[k], Wj[j]) - np.einsum("bai,bi->ba", Jx[j], Wj[k])
            r2 = max(r2, float(np.max(np.abs(lhs - br))))
    return r1, r2


def leaf_membership(gamma: SurfaceMap, x0, t_probe, order: int = 4, Mprime: int = 2, tol: float = 1e-8,
                    floor: float = 1e-6) -> dict:
    """Whether ``gamma_t(x0)`` stays in the leaf through ``x0`` of the Taylor-field algebra.

    The Taylor fields (and brackets) at ``x0`` span the tangent space of the
    leaf.  If they all vanish the leaf is ``{x0}`` and membership means
    ``gamma_t(x0) = x0``.  Otherwise membership is tested to first order:
    the displacement must lie in the span at ``x0`` (a necessary condition).
    """
    x0 = np.asarray(x0, dtype=float)
    n = len(x0)
    alist = multi_indices(gamma.N, order, 1)
    if isinstance(gamma, WSpec):
        raise ValueError("leaf membership needs a SurfaceMap")
    fmap = _fit_field_near(gamma, alist, x0, order, floor=floor)
    fields = [fmap[a] for a in alist if a in fmap]
    words = _iterated_brackets(fields, Mprime) if fields else []
    mat = np.stack([f(x0[None, :])[0] for _, f in words], axis=1) if words else np.zeros((n, 0))
    rank = int(np.linalg.matrix_rank(mat, tol=1e-8)) if mat.size else 0
    t_probe = np.atleast_2d(t_probe)
    disp = gamma(t_probe, np.broadcast_to(x0, (len(t_probe), n))) - x0
    if rank == 0:
        dist = np.linalg.norm(disp, axis=1)
    else:
        U, _, _ = np.linalg.svd(mat)
        Q = U[:, :rank]
        dist = np.linalg.norm(disp - disp @ Q @ Q.T, axis=1)
    worst = float(dist.max())
    return {"member": worst <= tol, "rank": rank, "max_distance": worst, "tol": tol,
            "status": "PASS" if worst <= tol else "FAIL"}
