"""Discretized dyadic pieces, operator norms and almost-orthogonality.

A piece

    T_j f(x) = psi1(x) int f(gamma_{2^-j t}(x)) psi2(gamma_{2^-j t}(x)) kappa(2^-j t, x) varsigma_j(t) dt

is assembled as a sparse matrix on a uniform grid: Gauss–Legendre nodes in
``t``, multilinear interpolation of ``f`` at the off-grid image points.
Norms are estimated by power iteration, decay in ``|j - k|`` is fitted on
``log2 ||T_k^* T_j||`` and the Cotlar–Stein sum is formed from the table.
All of this is numerical evidence on finite grids, not a bound.

The module also contains the density diagnostics: pushforward densities
``h = Psi_*(psi dtau)`` by linear deposition and the ``L^1_delta``
modulus ``sup_z int |h(y - z) - h(y)| dy / |z|^delta``.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from .dilations import DilationScheme, dyadic_factors


class GridError(ValueError):
    """Raised when a required image point falls outside the grid."""


class ConvergenceError(RuntimeError):
    def __init__(self, msg, last=None):
        super().__init__(msg)
        self.last = last


# ---------------------------------------------------------------------------
# grids and interpolation


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid with ``shape[i]`` nodes from ``lo[i]`` to ``hi[i]`` inclusive."""

    lo: tuple
    hi: tuple
    shape: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        shape = tuple(int(v) for v in np.atleast_1d(self.shape))
        if not (len(lo) == len(hi) == len(shape)):
            raise ValueError("lo, hi and shape must have equal length")
        if any(b <= a for a, b in zip(lo, hi)) or any(s < 2 for s in shape):
            raise ValueError("degenerate grid")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "shape", shape)

    @classmethod
    def cube(cls, n, half_width, points):
        return cls((-half_width,) * n, (half_width,) * n, (points,) * n)

    @property
    def ndim(self):
        return len(self.shape)

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def h(self):
        return tuple((b - a) / (s - 1) for a, b, s in zip(self.lo, self.hi, self.shape))

    def axes(self):
        return [np.linspace(a, b, s) for a, b, s in zip(self.lo, self.hi, self.shape)]

    def points(self):
        """Grid points in C order, shape ``(size, ndim)``."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def cell_volume(self):
        return float(np.prod(self.h))

    def inside(self, pts, slack=1e-12):
        pts = np.atleast_2d(pts)
        lo = np.array(self.lo) - slack
        hi = np.array(self.hi) + slack
        return np.all((pts >= lo) & (pts <= hi), axis=-1)

    def to_json(self):
        return {"lo": list(self.lo), "hi": list(self.hi), "shape": list(self.shape)}


def interp_entries(grid: GridSpec, pts, weights, rows):
    """COO triplets of multilinear interpolation at ``pts`` scaled by ``weights``.

    Points must lie inside the grid (callers filter or validate first).
    """
    pts = np.atleast_2d(pts)
    n = grid.ndim
    lo = np.array(grid.lo)
    h = np.array(grid.h)
    shape = np.array(grid.shape)
    s = (pts - lo) / h
    base = np.clip(np.floor(s).astype(np.int64), 0, shape - 2)
    frac = np.clip(s - base, 0.0, 1.0)
    strides = np.array([int(np.prod(shape[k + 1:])) for k in range(n)], dtype=np.int64)
    R, C, V = [], [], []
    for corner in itertools.product((0, 1), repeat=n):
        c = np.array(corner)
        w = weights * np.prod(np.where(c == 1, frac, 1.0 - frac), axis=-1)
        idx = (base + c) @ strides
        keep = w != 0
        R.append(rows[keep])
        C.append(idx[keep])
        V.append(w[keep])
    return np.concatenate(R), np.concatenate(C), np.concatenate(V)


def plateau(u):
    """Smooth cutoff: 1 for ``|u| <= 1/2``, 0 for ``|u| >= 1``."""
    u = np.abs(np.asarray(u, dtype=float))

    def f(s):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    s = np.clip(2.0 * (1.0 - u), 0.0, 1.0)
    return f(s) / (f(s) + f(1.0 - s))


@dataclass(frozen=True)
class Cutoff:
    """Tensor plateau cutoff: 1 on ``|x_i - c_i| <= r_i / 2``, supported in ``|x_i - c_i| < r_i``."""

    center: tuple
    radius: tuple

    @classmethod
    def for_grid(cls, grid: GridSpec, outer: float = 0.75):
        """Centered cutoff supported in ``outer`` times each half-width (1 on half of that)."""
        c = tuple(0.5 * (a + b) for a, b in zip(grid.lo, grid.hi))
        r = tuple(outer * 0.5 * (b - a) for a, b in zip(grid.lo, grid.hi))
        return cls(c, r)

    def __call__(self, x):
        x = np.atleast_2d(x)
        out = np.ones(len(x))
        for i, (c, r) in enumerate(zip(self.center, self.radius)):
            out = out * plateau((x[:, i] - c) / r)
        return out

    def box(self):
        return [(c - r, c + r) for c, r in zip(self.center, self.radius)]


def _gl(lo, hi, n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


@dataclass
class DiscretizedOp:
    matrix: sps.csr_matrix
    grid: GridSpec
    meta: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.matrix.shape


def discretize_piece(surface, bump, j, scheme: DilationScheme, grid: GridSpec, psi1=None, psi2=None,
                     kappa=None, tnodes=None, chunk: int = 4096) -> DiscretizedOp:
    """Sparse matrix of the piece ``T_j`` on ``grid``.

    ``A[r, c] = sum_q w_q varsigma(t_q) kappa(2^-j t_q, x_r) psi1(x_r)
    psi2(y_qr) L_c(y_qr)`` with ``y_qr = gamma(2^-j t_q, x_r)`` and ``L_c``
    the multilinear hat function of node ``c``.  Nodes ``t_q`` are
    Gauss–Legendre on the support box of the bump; ``tnodes`` per axis
    defaults to two per grid cell covered by the dilated support (at least
    16, at most 512).

    Raises :class:`GridError` if an image point with nonzero weight leaves
    the grid.  ``psi1``/``psi2``/``kappa`` default to 1.
    """
    fac = dyadic_factors(scheme, j)
    box = bump.box()
    hmin = min(grid.h)
    axes, wts = [], []
    for i, (a, b) in enumerate(box):
        n = tnodes or int(min(512, max(16, math.ceil(2 * (b - a) / fac[i] / hmin) + 1)))
        x, w = _gl(a, b, n)
        axes.append(x)
        wts.append(w)
    T = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(box))
    W = np.ones(1)
    for w in wts:
        W = np.multiply.outer(W, w)
    Wq = W.ravel() * bump(T)
    keep = Wq != 0
    T, Wq = T[keep], Wq[keep]
    Ts = T / fac
    X = grid.points()
    p1 = np.ones(len(X)) if psi1 is None else psi1(X)
    rows_all = np.nonzero(p1)[0]
    Rs, Cs, Vs = [], [], []
    Q = len(Ts)
    step = max(1, chunk // max(Q, 1)) if Q else 1
    for start in range(0, len(rows_all), step):
        rows = rows_all[start:start + step]
        xr = np.repeat(X[rows], Q, axis=0)
        tq = np.tile(Ts, (len(rows), 1))
        y = surface(tq, xr)
        w = np.repeat(p1[rows], Q) * np.tile(Wq, len(rows))
        if kappa is not None:
            w = w * kappa(tq, xr)
        if psi2 is not None:
            w = w * psi2(y)
        inside = grid.inside(y)
        bad = (~inside) & (w != 0)
        if bad.any():
            k = int(np.nonzero(bad)[0][0])
            raise GridError(f"image of x={xr[k].tolist()} under t={tq[k].tolist()} leaves the grid "
                            f"({y[k].tolist()})")
        r, c, v = interp_entries(grid, y[inside], w[inside], np.repeat(rows, Q)[inside])
        Rs.append(r)
        Cs.append(c)
        Vs.append(v)
    R = np.concatenate(Rs) if Rs else np.zeros(0, dtype=np.int64)
    C = np.concatenate(Cs) if Cs else np.zeros(0, dtype=np.int64)
    V = np.concatenate(Vs) if Vs else np.zeros(0)
    A = sps.csr_matrix((V, (R, C)), shape=(grid.size, grid.size))
    A.sum_duplicates()
    return DiscretizedOp(A, grid, {"j": list(map(float, j)), "tnodes": [len(a) for a in axes]})


# ---------------------------------------------------------------------------
# norms


def _as_op(A):
    if isinstance(A, DiscretizedOp):
        A = A.matrix
    return aslinearoperator(A)


def spectral_norm(A, tol: float = 1e-8, maxiter: int = 10000, seed: int = 0, return_info: bool = False):
    """Largest singular value by power iteration on ``A^T A``.

    The start vector is drawn from ``default_rng(seed)``; iteration stops
    when the Rayleigh-quotient estimate of ``sigma^2`` changes by less than
    ``tol`` relative.  Raises :class:`ConvergenceError` after ``maxiter``.
    """
    op = _as_op(A)
    n = op.shape[1]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    est = 0.0
    for it in range(1, maxiter + 1):
        Av = op.matvec(v)
        new = float(Av @ Av)
        w = op.rmatvec(Av)
        nw = np.linalg.norm(w)
        if nw == 0:
            return (0.0, {"iterations": it}) if return_info else 0.0
        v = w / nw
        if it > 1 and abs(new - est) <= tol * max(new, 1e-300):
            sigma = math.sqrt(nw) if nw > 0 else 0.0
            sigma = max(math.sqrt(new), min(sigma, math.sqrt(new) * (1 + tol)))
            return (sigma, {"iterations": it}) if return_info else sigma
        est = new
    raise ConvergenceError(f"power iteration did not converge in {maxiter} iterations", math.sqrt(est))


def product_op(*ops):
    """Matrix-free product ``ops[0] @ ops[1] @ ...`` with the matching adjoint."""
    ops = [_as_op(o) for o in ops]
    m, n = ops[0].shape[0], ops[-1].shape[1]

    def mv(x):
        for o in reversed(ops):
            x = o.matvec(x)
        return x

    def rmv(x):
        for o in ops:
            x = o.rmatvec(x)
        return x
    return LinearOperator((m, n), matvec=mv, rmatvec=rmv, dtype=float)


def adjoint(A):
    op = _as_op(A)
    return LinearOperator((op.shape[1], op.shape[0]), matvec=op.rmatvec, rmatvec=op.matvec, dtype=float)


def _default_distance(j, k):
    j = np.atleast_1d(np.asarray(j, dtype=float))
    k = np.atleast_1d(np.asarray(k, dtype=float))
    return float(np.max(np.abs(j - k)))


@dataclass
class DecayFit:
    table: dict
    table_star: dict
    slope: float
    intercept: float
    r2: float
    distances: list

    @property
    def eps(self):
        return -self.slope

    def max_norm(self):
        return max(self.table.values())

    def rows(self):
        return [(j, k, v) for (j, k), v in sorted(self.table.items())]

    def to_json(self):
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2, "eps": self.eps,
                "max_norm": self.max_norm(),
                "table": [{"j": _key(j), "k": _key(k), "norm": v} for (j, k), v in sorted(self.table.items())]}


def _key(j):
    return list(j) if isinstance(j, tuple) else j


def fit_decay(table: dict, distance=_default_distance, min_distance: float = 1.0):
    """Least-squares fit ``log2 norm ~ intercept + slope * |j - k|`` over pairs with ``|j - k| >= 1``."""
    d, y = [], []
    for (j, k), v in table.items():
        dist = distance(j, k)
        if dist >= min_distance and v > 0:
            d.append(dist)
            y.append(math.log2(v))
    if len(set(d)) < 3:
        raise ValueError("fewer than 3 distinct |j - k| values")
    d, y = np.array(d), np.array(y)
    A = np.vstack([np.ones_like(d), d]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - pred) ** 2)) / ss if ss > 0 else 1.0
    return float(coef[1]), float(coef[0]), r2


def pair_table(ops: dict, tol: float = 1e-8, both: bool = True, seed: int = 0, maxiter: int = 10000):
    """``||T_k^* T_j||`` (and ``||T_j T_k^*||``) over unordered pairs; mirrored to all ordered pairs."""
    keys = sorted(ops)
    tab, tab2 = {}, {}
    for a, j in enumerate(keys):
        for k in keys[a:]:
            v = spectral_norm(product_op(adjoint(ops[k]), ops[j]), tol, maxiter, seed)
            tab[(j, k)] = tab[(k, j)] = v
            if both:
                w = spectral_norm(product_op(ops[j], adjoint(ops[k])), tol, maxiter, seed)
                tab2[(j, k)] = tab2[(k, j)] = w
    return tab, tab2


def ao_decay_fit(ops: dict, tol: float = 1e-8, distance=_default_distance, both: bool = True,
                 seed: int = 0, maxiter: int = 10000) -> DecayFit:
    """Norm table over all pairs of pieces and the fitted decay rate.

    ``ops`` maps lattice points to assembled pieces (see
    :func:`discretize_piece`).  The fit uses ``log2 ||T_k^* T_j||``.
    """
    tab, tab2 = pair_table(ops, tol, both, seed, maxiter)
    dists = sorted({distance(j, k) for (j, k) in tab})
    slope, icpt, r2 = fit_decay(tab, distance)
    return DecayFit(tab, tab2, slope, icpt, r2, dists)


def cotlar_bound(table: dict, table_star: dict | None = None) -> float:
    """``sup_j sum_k max(||T_j^* T_k||^{1/2}, ||T_j T_k^*||^{1/2})``."""
    keys = sorted({j for j, _ in table})
    best = 0.0
    for j in keys:
        s = 0.0
        for k in keys:
            a = table.get((j, k), table.get((k, j), 0.0))
            b = a if table_star is None else table_star.get((j, k), table_star.get((k, j), 0.0))
            s += max(math.sqrt(a), math.sqrt(b))
        best = max(best, s)
    return best


def fourier_table_1d(bump, jset, xi_max: float | None = None, points: int = 20001, nodes: int = 256):
    """Oracle ``sup_xi |hat(varsigma)(2^-k xi) hat(varsigma)(2^-j xi)|`` for a 1-D bump.

    ``hat(varsigma)`` is computed by Gauss–Legendre quadrature on its
    support and the supremum is taken on a uniform frequency grid
    reaching well past the largest dilated bandwidth.
    """
    (lo, hi), = bump.box()
    x, w = _gl(lo, hi, nodes)
    vals = bump(x[:, None]) * w
    jmax = max(jset)
    if xi_max is None:
        xi_max = 2.0 ** jmax * 60.0 / (hi - lo)
    xi = np.linspace(0.0, xi_max, points)
    out = {}
    cache = {}
    for j in jset:
        s = 2.0 ** (-j) * xi
        cache[j] = np.abs(np.exp(-1j * np.outer(s, x)) @ vals)
    for j in jset:
        for k in jset:
            out[(j, k)] = float(np.max(cache[j] * cache[k]))
    return out


def write_table_csv(path, table: dict) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "k", "norm"])
        for (j, k), v in sorted(table.items()):
            w.writerow([_fmt_key(j), _fmt_key(k), repr(float(v))])


def _fmt_key(j):
    return " ".join(str(v) for v in j) if isinstance(j, tuple) else str(j)


def write_fit_csv(path, fit: DecayFit) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["slope", "intercept", "r2"])
        w.writerow([repr(fit.slope), repr(fit.intercept), repr(fit.r2)])


# ---------------------------------------------------------------------------
# transported densities and L^1_delta


@dataclass
class DensityResult:
    h: np.ndarray
    grid: GridSpec
    mass: float
    weight_mass: float
    probe: dict
    warnings: list

    def to_json(self):
        return {"mass": self.mass, "weight_mass": self.weight_mass, "probe": self.probe,
                "warnings": self.warnings, "grid": self.grid.to_json()}


def _jacobian_det(psi_map, tau, h=1e-4):
    tau = np.atleast_2d(tau)
    D = tau.shape[1]
    cols = []
    for k in range(D):
        e = np.zeros(D)
        e[k] = h
        d = (psi_map(tau + e) - psi_map(tau - e)) / (2 * h)
        cols.append(d[:, None] if d.ndim == 1 else d)
    J = np.stack(cols, axis=-1)
    n = J.shape[1]
    dets = [np.linalg.det(J[:, :, list(c)]) for c in itertools.combinations(range(D), n)]
    return np.stack(dets, axis=-1)


def transversality_probe(psi_map, box, max_order: int = 3, samples: int = 7, threshold: float = 1e-6) -> dict:
    """Finite-difference scan of ``(d/dtau)^alpha det_{n x n} dPsi/dtau`` for ``|alpha| <= max_order``.

    At each of ``samples^D`` points the largest ``|(d/dtau)^alpha det|``
    over minors and ``|alpha| <= k`` is formed; the probe passes at the
    smallest order ``k`` for which this stays above ``threshold`` at every
    sample point.  ``alpha`` reports the multi-index used at the worst
    point and ``margin`` the minimum over points.
    """
    D = len(box)
    axes = [np.linspace(a + 0.05 * (b - a), b - 0.05 * (b - a), samples) for a, b in box]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, D)
    H = 1e-2 * min(b - a for a, b in box)
    best = np.zeros(len(pts))
    arg = [None] * len(pts)
    for order in range(max_order + 1):
        for alpha in itertools.product(range(order + 1), repeat=D):
            if sum(alpha) != order:
                continue
            stencil = [(np.zeros(D), 1.0)]
            for k, m in enumerate(alpha):
                for _ in range(m):
                    e = np.zeros(D)
                    e[k] = H
                    stencil = [(s + e * sign * 0.5, c * sign / H) for s, c in stencil for sign in (1.0, -1.0)]
            val = sum(c * _jacobian_det(psi_map, pts + s) for s, c in stencil)
            mag = np.max(np.abs(val), axis=-1)
            better = mag > best
            best = np.where(better, mag, best)
            for i in np.nonzero(better)[0]:
                arg[i] = list(alpha)
        worst = int(np.argmin(best))
        if best[worst] > threshold:
            return {"passed": True, "order": order, "alpha": arg[worst], "margin": float(best[worst])}
    return {"passed": False, "order": None, "alpha": None, "margin": float(best.min())}


def deposit(grid: GridSpec, pts, mass) -> np.ndarray:
    """Linear (cloud-in-cell) deposition of point masses; returns a density on the grid."""
    pts = np.atleast_2d(pts)
    inside = grid.inside(pts)
    r, c, v = interp_entries(grid, pts[inside], np.asarray(mass, dtype=float)[inside],
                             np.zeros(int(inside.sum()), dtype=np.int64))
    out = np.bincount(c, weights=v, minlength=grid.size)
    vol = np.ones(grid.size)
    # boundary nodes own half (or less) of a cell
    for k, s in enumerate(grid.shape):
        idx = np.indices(grid.shape)[k].ravel()
        vol = vol * np.where((idx == 0) | (idx == s - 1), 0.5, 1.0)
    return (out / (vol * grid.cell_volume())).reshape(grid.shape)


def _composite_gl(lo, hi, panels, order=4):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    return (mid + half * x).ravel(), (half * w).ravel()


def transport_density(psi_map, weight, box, ygrid: GridSpec, panels=None, probe: bool = True,
                      probe_order: int = 3, max_points: int = 4_000_000) -> DensityResult:
    """Density of ``Psi_*(weight dtau)`` on ``ygrid`` by quadrature and linear deposition.

    ``box`` is the ``tau``-box ``[(lo, hi), ...]``.  Each axis uses a
    composite 4-point Gauss–Legendre rule with ``panels`` panels (default:
    four panels per output cell across the box, limited by ``max_points``
    in total) so that every grid cell receives many particles.  The
    transversality probe result is attached; a failed probe adds a warning
    (the density need not be in ``L^1_delta``).
    """
    D = len(box)
    if panels is None:
        hmin = min(ygrid.h)
        cap = int((max_points / 4**D) ** (1.0 / D))
        panels = [max(8, min(cap, int(math.ceil(4 * (b - a) / hmin)))) for a, b in box]
    elif np.isscalar(panels):
        panels = [int(panels)] * D
    axes, wts = zip(*(_composite_gl(a, b, p) for (a, b), p in zip(box, panels)))
    tau = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(box))
    W = np.ones(1)
    for w in wts:
        W = np.multiply.outer(W, w)
    m = W.ravel() * weight(tau)
    y = psi_map(tau)
    if y.ndim == 1:
        y = y[:, None]
    h = deposit(ygrid, y, m)
    warnings = []
    lost = float(np.sum(m[~ygrid.inside(y)]))
    if abs(lost) > 0:
        warnings.append(f"mass {lost:.3g} fell outside the grid")
    pr = transversality_probe(psi_map, box, probe_order) if probe else {"passed": None}
    if probe and not pr["passed"]:
        warnings.append("transversality probe failed: L^1_delta membership not guaranteed")
    mass = float(_grid_integral(h, ygrid))
    return DensityResult(h, ygrid, mass, float(m.sum()), pr, warnings)


def _grid_integral(vals, grid):
    """Trapezoid integral of grid values."""
    out = vals
    for k, ax in enumerate(grid.axes()):
        out = np.trapezoid(out, ax, axis=0)
    return out


def _shift(vals, grid, z):
    """``h(y - z)`` by multilinear interpolation, zero outside the grid."""
    from scipy.ndimage import map_coordinates
    z = np.atleast_1d(z)
    coords = np.indices(grid.shape, dtype=float)
    for k, hk in enumerate(grid.h):
        coords[k] -= z[k] / hk
    return map_coordinates(vals, coords, order=1, mode="constant", cval=0.0)


def l1delta_seminorm(h, grid: GridSpec, delta: float, zset) -> float:
    """``max_z int |h(y - z) - h(y)| dy / |z|^delta`` over the probe translations ``zset``."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    h = np.asarray(h, dtype=float).reshape(grid.shape)
    best = 0.0
    for z in zset:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        nz = float(np.linalg.norm(z))
        if nz == 0:
            continue
        diff = np.abs(_shift(h, grid, z) - h)
        best = max(best, float(_grid_integral(diff, grid)) / nz**delta)
    return best


def pair_measure_scaling(h, grid: GridSpec, theta, weight, tbox, xbox, zetas, nodes: int = 48) -> dict:
    """Growth of ``E(zeta) = int int |h(theta(t, x, zeta)) - h(theta(t, x, 0))| w(t) dt dx``.

    ``theta(t, x, zeta)`` returns points of the grid space.  Fits
    ``log E ~ c + delta' log zeta``; a positive ``delta'`` with high ``R^2``
    is the finite-grid counterpart of a Hölder modulus in ``zeta``.
    """
    from scipy.ndimage import map_coordinates
    h = np.asarray(h, dtype=float).reshape(grid.shape)
    taxes, twts = zip(*(_gl(a, b, nodes) for a, b in tbox))
    xaxes, xwts = zip(*(_gl(a, b, nodes) for a, b in xbox))
    T = np.stack(np.meshgrid(*taxes, indexing="ij"), axis=-1).reshape(-1, len(tbox))
    X = np.stack(np.meshgrid(*xaxes, indexing="ij"), axis=-1).reshape(-1, len(xbox))
    wt = np.ones(1)
    for w in twts:
        wt = np.multiply.outer(wt, w)
    wx = np.ones(1)
    for w in xwts:
        wx = np.multiply.outer(wx, w)
    TT = np.repeat(T, len(X), axis=0)
    XX = np.tile(X, (len(T), 1))
    WW = np.repeat(wt.ravel() * weight(T), len(X)) * np.tile(wx.ravel(), len(T))

    def sample(pts):
        pts = np.atleast_2d(pts)
        coords = [(pts[:, k] - grid.lo[k]) / grid.h[k] for k in range(grid.ndim)]
        return map_coordinates(h, coords, order=1, mode="constant", cval=0.0)

    base = sample(theta(TT, XX, 0.0))
    E = []
    for z in zetas:
        E.append(float(np.sum(WW * np.abs(sample(theta(TT, XX, z)) - base))))
    E = np.array(E)
    zetas = np.asarray(zetas, dtype=float)
    mask = E > 0
    A = np.vstack([np.ones(mask.sum()), np.log(zetas[mask])]).T
    y = np.log(E[mask])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - pred) ** 2)) / ss if ss > 0 else 1.0
    return {"zeta": zetas.tolist(), "E": E.tolist(), "delta_prime": float(coef[1]), "r2": r2}
