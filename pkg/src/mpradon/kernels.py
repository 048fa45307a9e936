"""Bump catalog, dyadic kernel families and their partial sums.

A kernel is represented by a family ``{varsigma_j}`` of compactly supported
smooth bumps indexed by the lattice points ``j`` and the formal sum
``K = sum_j varsigma_j^{(2^j)}``, where

    varsigma^{(2^j)}(t) = 2^{j.e_1 + ... + j.e_N} varsigma(2^j t)

and ``2^j t`` scales ``t_i`` by ``2^{j.e_i}``.  Only partial sums over
``|j|_inf <= bound`` are ever formed.

Bumps are finite sums of separable products of one-dimensional catalog
functions, so dilations, integrals and partial integrals are computed factor
by factor with Gauss-Legendre rules.
"""

from __future__ import annotations

import csv
import functools
import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import sympy as sp

from .dilations import (DilationScheme, ParamLattice, cancellation_structure, dyadic_factors,
                        lattice_enumerate)

DEFAULT_RADIUS = 0.25
DEFAULT_QUAD = 64


@functools.lru_cache(maxsize=None)
def _mollifier_derivative(order: int):
    x = sp.Symbol("x", real=True)
    expr = sp.exp(-1 / (1 - x**2))
    d = sp.simplify(sp.diff(expr, x, order)) if order else expr
    return sp.lambdify(x, d, "numpy")


def mollifier(x, order: int = 0):
    """``exp(-1/(1-x^2))`` on ``(-1, 1)`` (or its ``order``-th derivative), zero outside."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    if np.any(inside):
        with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
            vals = _mollifier_derivative(order)(x[inside])
        out[inside] = np.nan_to_num(np.broadcast_to(vals, x[inside].shape), nan=0.0,
                                    posinf=0.0, neginf=0.0)
    return out


@dataclass(frozen=True)
class Bump1D:
    """One-dimensional catalog bump ``amp * base((x - center)/radius)``.

    ``kind`` selects ``base``:

    * ``"mollifier"``: ``exp(-1/(1-u^2))``,
    * ``"dmollifier"``: its ``order``-th derivative (in ``u``),
    * ``"polymollifier"``: ``u^power exp(-1/(1-u^2))``.
    """

    kind: str = "mollifier"
    order: int = 0
    power: int = 0
    radius: float = DEFAULT_RADIUS
    center: float = 0.0
    amp: float = 1.0

    def __post_init__(self):
        if self.kind not in ("mollifier", "dmollifier", "polymollifier"):
            raise ValueError(f"unknown bump kind {self.kind!r}")
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    def __call__(self, x):
        u = (np.asarray(x, dtype=float) - self.center) / self.radius
        if self.kind == "mollifier":
            v = mollifier(u)
        elif self.kind == "dmollifier":
            v = mollifier(u, self.order)
        else:
            v = u**self.power * mollifier(u)
        return self.amp * v

    def support(self):
        return (self.center - self.radius, self.center + self.radius)

    def integral(self, nodes: int = DEFAULT_QUAD, weight=None) -> float:
        """``int b(x) w(x) dx`` by Gauss-Legendre on the support."""
        lo, hi = self.support()
        x, w = np.polynomial.legendre.leggauss(nodes)
        u = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        vals = self(u)
        if weight is not None:
            vals = vals * weight(u)
        return float(0.5 * (hi - lo) * np.sum(w * vals))

    def scaled(self, factor: float) -> "Bump1D":
        """``factor * b(factor * x)``: the one-dimensional dilation."""
        return replace(self, radius=self.radius / factor, center=self.center / factor,
                       amp=self.amp * factor)

    def normalized(self) -> "Bump1D":
        """Rescale the amplitude to unit integral."""
        I = self.integral()
        if abs(I) < 1e-300:
            raise ValueError("bump has zero integral")
        return replace(self, amp=self.amp / I)

    def to_json(self) -> dict:
        return {"kind": self.kind, "order": self.order, "power": self.power,
                "radius": self.radius, "center": self.center, "amp": self.amp}

    @classmethod
    def from_json(cls, d: dict) -> "Bump1D":
        return cls(kind=d.get("kind", "mollifier"), order=int(d.get("order", 0)),
                   power=int(d.get("power", 0)), radius=float(d.get("radius", DEFAULT_RADIUS)),
                   center=float(d.get("center", 0.0)), amp=float(d.get("amp", 1.0)))


@dataclass(frozen=True)
class BumpSpec:
    """Finite sum ``sum_k coef_k prod_i b_{k,i}(t_i)`` of separable bumps.

    Parameters
    ----------
    dim : int
    terms : tuple of (float, tuple of Bump1D)
    support_radius : float, optional
        Declared radius ``a``; every term must have support inside the ball
        of that radius (checked from the factor supports).
    """

    dim: int
    terms: tuple = ()
    support_radius: float | None = None

    def __post_init__(self):
        terms = tuple((float(c), tuple(fs)) for c, fs in self.terms)
        for c, fs in terms:
            if len(fs) != self.dim:
                raise ValueError(f"term has {len(fs)} factors, expected {self.dim}")
        object.__setattr__(self, "terms", terms)
        if self.support_radius is not None and self.extent() > self.support_radius * (1 + 1e-12):
            raise ValueError(f"support extends to {self.extent():.4g} > a = {self.support_radius}")

    @classmethod
    def separable(cls, factors, coef=1.0, support_radius=None):
        return cls(len(factors), ((coef, tuple(factors)),), support_radius)

    @classmethod
    def zero(cls, dim):
        return cls(dim, ())

    def extent(self) -> float:
        """Radius of the smallest centered ball containing every term's support box."""
        r = 0.0
        for _, fs in self.terms:
            r = max(r, math.sqrt(sum(max(abs(f.support()[0]), abs(f.support()[1])) ** 2 for f in fs)))
        return r

    def box(self):
        """Coordinatewise bounding box ``[(lo_i, hi_i)]`` of the support."""
        lo = [np.inf] * self.dim
        hi = [-np.inf] * self.dim
        for _, fs in self.terms:
            for i, f in enumerate(fs):
                a, b = f.support()
                lo[i], hi[i] = min(lo[i], a), max(hi[i], b)
        if not self.terms:
            return [(0.0, 0.0)] * self.dim
        return list(zip(lo, hi))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if t.shape[-1] != self.dim:
            raise ValueError(f"expected trailing dimension {self.dim}")
        out = np.zeros(t.shape[:-1])
        for c, fs in self.terms:
            v = np.full(t.shape[:-1], c)
            for i, f in enumerate(fs):
                v = v * f(t[..., i])
            out = out + v
        return out

    def eval_tensor(self, axes):
        """Values on the tensor grid ``axes[0] x ... x axes[N-1]``."""
        if len(axes) != self.dim:
            raise ValueError("one axis per coordinate required")
        shape = tuple(len(a) for a in axes)
        out = np.zeros(shape)
        for c, fs in self.terms:
            v = np.array(c)
            for f, ax in zip(fs, axes):
                v = np.multiply.outer(v, f(np.asarray(ax, dtype=float)))
            out = out + v
        return out

    def __add__(self, other: "BumpSpec") -> "BumpSpec":
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return BumpSpec(self.dim, self.terms + other.terms)

    def scaled_by(self, c: float) -> "BumpSpec":
        return BumpSpec(self.dim, tuple((c * k, fs) for k, fs in self.terms), self.support_radius)

    def integral(self, nodes: int = DEFAULT_QUAD) -> float:
        return float(sum(c * np.prod([f.integral(nodes) for f in fs]) for c, fs in self.terms))

    def partial_integral(self, subset, nodes: int = DEFAULT_QUAD):
        """Integral over the coordinates in ``subset`` as a function of the rest.

        Returns ``(residual_fn, rest)`` where ``residual_fn(points)`` takes
        points in the remaining coordinates ``rest``.
        """
        subset = tuple(sorted(subset))
        rest = tuple(i for i in range(self.dim) if i not in subset)
        parts = []
        for c, fs in self.terms:
            w = c * float(np.prod([fs[i].integral(nodes) for i in subset])) if subset else c
            parts.append((w, [fs[i] for i in rest]))

        def fn(points):
            points = np.asarray(points, dtype=float)
            out = np.zeros(points.shape[:-1]) if rest else np.zeros(())
            for w, fr in parts:
                v = np.full(out.shape, w)
                for k, f in enumerate(fr):
                    v = v * f(points[..., k])
                out = out + v
            return out
        return fn, rest

    def norms(self, n: int = 201) -> dict:
        """Sampled sup-norms of the bump and its gradient on a grid over the support box."""
        box = self.box()
        axes = [np.linspace(a, b, n if self.dim <= 2 else 41) for a, b in box]
        vals = self.eval_tensor(axes)
        c0 = float(np.max(np.abs(vals))) if vals.size else 0.0
        c1 = 0.0
        for i, ax in enumerate(axes):
            if len(ax) > 1 and ax[1] > ax[0]:
                c1 = max(c1, float(np.max(np.abs(np.gradient(vals, ax, axis=i)))))
        return {"C0": c0, "C1": c0 + c1}

    def to_json(self) -> dict:
        return {"dim": self.dim, "support_radius": self.support_radius,
                "terms": [{"coef": c, "factors": [f.to_json() for f in fs]} for c, fs in self.terms]}

    @classmethod
    def from_json(cls, d: dict) -> "BumpSpec":
        terms = tuple((float(t.get("coef", 1.0)), tuple(Bump1D.from_json(f) for f in t["factors"]))
                      for t in d["terms"])
        return cls(int(d["dim"]), terms, d.get("support_radius"))


def dilate_bump(spec: BumpSpec, scheme: DilationScheme, j) -> BumpSpec:
    """``varsigma^{(2^j)}``: coordinate ``i`` dilated by ``2^{j.e_i}`` with integral kept.

    ``j`` may have negative or non-integer entries (used by the
    alternating-difference construction and by diagonal scales).
    """
    if scheme.N != spec.dim:
        raise ValueError("scheme and bump dimensions differ")
    fac = dyadic_factors(scheme, j)
    terms = tuple((c, tuple(f.scaled(s) for f, s in zip(fs, fac))) for c, fs in spec.terms)
    return BumpSpec(spec.dim, terms)


# ---------------------------------------------------------------------------
# dyadic kernels


@dataclass
class DyadicKernel:
    """A family ``j -> varsigma_j`` over a parameter lattice.

    ``family`` is either a mapping (missing points read as zero bumps) or a
    callable.
    """

    scheme: DilationScheme
    lattice: ParamLattice
    family: object
    C: float = 1.0
    name: str = "kernel"

    def __post_init__(self):
        if self.scheme.nu != self.lattice.nu:
            raise ValueError("scheme and lattice disagree on nu")

    def bump(self, j) -> BumpSpec:
        j = tuple(j)
        if callable(self.family):
            return self.family(j)
        return self.family.get(j, BumpSpec.zero(self.scheme.N))

    def points(self, bound: int):
        return lattice_enumerate(self.lattice, bound)


def constant_family(scheme, lattice, bump: BumpSpec, C: float = 1.0, name="constant") -> DyadicKernel:
    return DyadicKernel(scheme, lattice, lambda j: bump, C, name)


@dataclass
class CancellationReport:
    status: str  # PASS, FAIL or UNCERTIFIED
    max_residual: float
    tol: float
    entries: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == "PASS"


def check_cancellation(kernel: DyadicKernel, quad_tol: float = 1e-10, bound: int = 4,
                       nodes: int = DEFAULT_QUAD, search_bound: int | None = None) -> CancellationReport:
    """Verify the required vanishing partial integrals for ``|j|_inf <= bound``.

    For each ``j`` the required coordinate subsets come from
    :func:`cancellation_structure`; the partial integral over each subset is
    evaluated on the Gauss-Legendre nodes of the remaining coordinates and
    its maximum modulus is the residual.
    """
    if quad_tol <= 0:
        raise ValueError("quad_tol must be positive")
    entries = []
    worst = 0.0
    certified = True
    x, _ = np.polynomial.legendre.leggauss(min(nodes, 32))
    for j in kernel.points(bound):
        cs = cancellation_structure(kernel.scheme, kernel.lattice, j, kernel.C,
                                    None if search_bound is None else max(search_bound, max(j)))
        certified &= cs.certified
        bump = kernel.bump(j)
        for sub in cs.required_subsets:
            fn, rest = bump.partial_integral(sub, nodes)
            if rest:
                box = bump.box()
                axes = [0.5 * (box[i][1] - box[i][0]) * x + 0.5 * (box[i][1] + box[i][0]) for i in rest]
                pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
                res = float(np.max(np.abs(fn(pts)))) if pts.size else 0.0
            else:
                res = float(abs(fn(np.zeros((0,)))))
            worst = max(worst, res)
            entries.append({"j": list(j), "subset": list(sub), "residual": res})
    if not certified:
        status = "UNCERTIFIED"
    else:
        status = "PASS" if worst <= quad_tol else "FAIL"
    return CancellationReport(status, worst, quad_tol, entries)


def synthesize_partial(kernel: DyadicKernel, bound: int, axes) -> np.ndarray:
    """``sum_{|j|_inf <= bound} varsigma_j^{(2^j)}`` on a tensor grid.

    Summation runs over ``j`` in lexicographic order, which makes the result
    bit-reproducible.
    """
    out = np.zeros(tuple(len(a) for a in axes))
    for j in kernel.points(bound):
        b = kernel.bump(j)
        if b.terms:
            out = out + dilate_bump(b, kernel.scheme, j).eval_tensor(axes)
    return out


def delta0_family(eta: BumpSpec, scheme: DilationScheme, lattice: ParamLattice | None = None,
                  C: float = 1.0) -> DyadicKernel:
    """Family whose partial sums telescope to ``eta^{(2^m, ..., 2^m)}``.

    ``varsigma_j = sum_{p in {0,1}^nu, j - p >= 0} (-1)^{|p|} eta^{(2^{-p})}``
    so that ``varsigma_j^{(2^j)} = sum_p (-1)^{|p|} eta^{(2^{j-p})}``.
    Only the product lattice is supported.
    """
    if lattice is None:
        lattice = ParamLattice("product", scheme.nu)
    if lattice.kind != "product":
        raise ValueError("the alternating-difference family needs the product lattice")
    I = eta.integral()
    if abs(I - 1.0) > 1e-12:
        raise ValueError(f"eta must have unit integral (got {I!r})")
    nu = scheme.nu

    @functools.lru_cache(maxsize=None)
    def fam(j):
        total = BumpSpec.zero(scheme.N)
        for p in itertools.product((0, 1), repeat=nu):
            if any(jm - pm < 0 for jm, pm in zip(j, p)):
                continue
            piece = dilate_bump(eta, scheme, tuple(-pm for pm in p))
            total = total + piece.scaled_by((-1.0) ** sum(p))
        return total

    return DyadicKernel(scheme, lattice, fam, C, name="delta0")


def telescoping_error(eta: BumpSpec, scheme: DilationScheme, m: int, points: int = 64) -> float:
    """Relative sup error of ``sum_{|j|_inf <= m} varsigma_j^{(2^j)} = eta^{(2^m, ..., 2^m)}``.

    Evaluated on two ``points^N`` grids: the support box of ``eta`` (where
    the wide terms must cancel) and twice the support box of the target
    (where the narrow terms live).  The error is relative to the largest
    target value seen.
    """
    fam = delta0_family(eta, scheme)
    target = dilate_bump(eta, scheme, (m,) * scheme.nu)
    err, scale = 0.0, 0.0
    for box in (eta.box(), [(2 * lo, 2 * hi) for lo, hi in target.box()]):
        axes = [np.linspace(lo, hi, points) for lo, hi in box]
        exact = target.eval_tensor(axes)
        err = max(err, float(np.max(np.abs(synthesize_partial(fam, m, axes) - exact))))
        scale = max(scale, float(np.max(np.abs(exact))))
    return err / scale


def delta0_coefficients(nu: int, m: int) -> dict:
    """Integer coefficient of ``eta^{(2^q)}`` in ``sum_{|j|_inf <= m} varsigma_j^{(2^j)}``."""
    coef = {}
    for j in itertools.product(range(m + 1), repeat=nu):
        for p in itertools.product((0, 1), repeat=nu):
            q = tuple(a - b for a, b in zip(j, p))
            if min(q) < 0:
                continue
            coef[q] = coef.get(q, 0) + (-1) ** sum(p)
    return coef


def default_eta(scheme: DilationScheme, a: float = DEFAULT_RADIUS) -> BumpSpec:
    """Normalized separable mollifier small enough for its alternating differences.

    The factor radii are shrunk so that ``eta^{(2^{-p})}`` for every
    ``p in {0,1}^nu`` still fits in the ball of radius ``a``.
    """
    exps = scheme.as_array()
    grow = 2.0 ** exps.sum(axis=1)
    r = a / math.sqrt(scheme.N) / grow
    fs = tuple(Bump1D("mollifier", radius=float(ri)).normalized() for ri in r)
    return BumpSpec.separable(fs)


# ---------------------------------------------------------------------------
# diagnostics


def pairing_increments(kernel: DyadicKernel, test_fn: Callable, bound: int, nodes: int = 48) -> dict:
    """Per-scale pairings ``<varsigma_j^{(2^j)}, f>`` and a geometric decay fit.

    ``<varsigma_j^{(2^j)}, f> = int varsigma_j(t) f(2^{-j} t) dt`` is
    evaluated by tensor Gauss-Legendre quadrature.  Returns the increments,
    the partial sums and ``(eps, r2)`` from fitting
    ``log2 |increment_j| ~ c - eps * |j|``.
    """
    x, w = np.polynomial.legendre.leggauss(nodes)
    incs, js = [], []
    for j in kernel.points(bound):
        b = kernel.bump(j)
        box = b.box()
        axes = [0.5 * (hi - lo) * x + 0.5 * (hi + lo) for lo, hi in box]
        ws = [0.5 * (hi - lo) * w for lo, hi in box]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        W = functools.reduce(np.multiply.outer, ws)
        fac = dyadic_factors(kernel.scheme, j)
        val = float(np.sum(W * b(grid) * test_fn(grid / fac)))
        incs.append(val)
        js.append(j)
    level = np.array([max(j) for j in js])
    mags = np.array([abs(v) for v in incs])
    mask = (mags > 0) & (level > 0)
    eps, r2 = float("nan"), float("nan")
    if mask.sum() >= 3:
        A = np.vstack([np.ones(mask.sum()), level[mask]]).T
        y = np.log2(mags[mask])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        pred = A @ coef
        ss = np.sum((y - y.mean()) ** 2)
        r2 = float(1 - np.sum((y - pred) ** 2) / ss) if ss > 0 else 1.0
        eps = float(-coef[1])
    partial = np.cumsum(incs)
    return {"j": js, "increments": incs, "partial_sums": partial.tolist(), "eps": eps, "r2": r2}


def product_decay_constant(kernel: DyadicKernel, bound: int, axes, r0: float) -> float:
    """``max |K(t)| prod_mu |t^mu|^{Q_mu}`` over grid points with every ``|t^mu| >= r0``.

    Coordinate groups ``t^mu`` collect the coordinates with ``e_i^mu != 0``
    and ``Q_mu = sum_i e_i^mu``.
    """
    vals = synthesize_partial(kernel, bound, axes)
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    e = kernel.scheme.as_array()
    weight = np.ones(vals.shape)
    mask = np.ones(vals.shape, dtype=bool)
    for mu in range(kernel.scheme.nu):
        idx = [i for i in range(kernel.scheme.N) if e[i, mu] != 0]
        norm = np.sqrt(np.sum(grid[..., idx] ** 2, axis=-1))
        mask &= norm >= r0
        weight = weight * norm ** e[:, mu].sum()
    return float(np.max(np.abs(vals[mask]) * weight[mask])) if mask.any() else 0.0


def write_grid_csv(path, axes, values) -> None:
    """Dump tensor-grid values with header ``t1,...,tN,value``."""
    N = len(axes)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"t{i + 1}" for i in range(N)] + ["value"])
        for idx in itertools.product(*(range(len(a)) for a in axes)):
            w.writerow([repr(float(axes[i][k])) for i, k in enumerate(idx)] + [repr(float(values[idx]))])
