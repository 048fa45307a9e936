"""Vector fields with formal degrees: brackets, finite lists and control checks.

A :class:`VField` on ``R^n`` is a tuple of coefficient expressions (see
:mod:`mpradon.expr`); ``X = sum_i a_i d/dx_i``.  A :class:`DegreedField`
pairs a field with a formal degree in ``[0, inf)^nu``; brackets add
degrees.

The numerical checks ask whether, for sampled parameters ``delta``,

    delta^{d_0} X_0(x) = sum_l c_l(x) delta^{d_l} X_l(x)

with coefficients ``c_l`` that stay bounded as ``delta`` ranges over the
admissible set.  Since a universal statement over ``delta`` cannot be
verified numerically, every certificate records the sampling plan it was
computed on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .dilations import Degree, ParamLattice, delta_power, make_degree
from .expr import evaluate, parse, solve_constant_combination, symbols, to_text


@dataclass(frozen=True)
class VField:
    """``sum_i coeffs[i] d/dx_i`` on ``R^n``."""

    n: int
    coeffs: tuple

    def __post_init__(self):
        cs = tuple(sp.sympify(c) for c in self.coeffs)
        if len(cs) != self.n:
            raise ValueError(f"{len(cs)} coefficients for dimension {self.n}")
        object.__setattr__(self, "coeffs", cs)

    @classmethod
    def parse(cls, texts, n: int | None = None) -> "VField":
        """Build from one textual coefficient per coordinate."""
        n = len(texts) if n is None else n
        return cls(n, tuple(parse(str(t), n) for t in texts))

    @classmethod
    def coordinate(cls, n: int, i: int, coef=1) -> "VField":
        """``coef * d/dx_{i+1}``."""
        cs = [0] * n
        cs[i] = coef
        return cls(n, tuple(cs))

    @classmethod
    def zero(cls, n: int) -> "VField":
        return cls(n, (0,) * n)

    @property
    def syms(self):
        return symbols(self.n)

    def apply(self, f) -> sp.Expr:
        """Directional derivative ``X f``."""
        return sp.expand(sum(c * sp.diff(f, s) for c, s in zip(self.coeffs, self.syms)))

    def __call__(self, X) -> np.ndarray:
        """Evaluate at points ``X`` of shape ``(..., n)``; returns ``(..., n)``."""
        X = np.asarray(X, dtype=float)
        return np.stack([evaluate(c, X, self.n) * np.ones(X.shape[:-1]) for c in self.coeffs], axis=-1)

    def __add__(self, other):
        return VField(self.n, tuple(sp.expand(a + b) for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other):
        return VField(self.n, tuple(sp.expand(a - b) for a, b in zip(self.coeffs, other.coeffs)))

    def scale(self, c) -> "VField":
        return VField(self.n, tuple(sp.expand(c * a) for a in self.coeffs))

    def is_zero(self) -> bool:
        return all(sp.expand(c) == 0 for c in self.coeffs)

    def to_text(self):
        return [to_text(c) for c in self.coeffs]


def bracket(X: VField, Y: VField) -> VField:
    """``[X, Y] = X(Y) - Y(X)`` coefficientwise, exact."""
    if X.n != Y.n:
        raise ValueError("dimension mismatch")
    return VField(X.n, tuple(sp.expand(X.apply(b) - Y.apply(a)) for a, b in zip(X.coeffs, Y.coeffs)))


@dataclass(frozen=True)
class DegreedField:
    field: VField
    degree: Degree
    word: tuple = ()

    def __post_init__(self):
        deg = self.degree if isinstance(self.degree, Degree) else make_degree(self.degree)
        if deg.kind == "zero":
            raise ValueError("formal degrees must be nonzero")
        object.__setattr__(self, "degree", deg)

    @property
    def n(self):
        return self.field.n

    def to_json(self):
        return {"field": self.field.to_text(), "degree": [str(c) for c in self.degree.components]}

    @classmethod
    def from_json(cls, d, n=None):
        f = VField.parse(d["field"], n)
        return cls(f, make_degree([sp.Rational(str(c)) for c in d["degree"]]))


def proportional(X: VField, Y: VField, rng=None) -> bool:
    """Whether ``X = c Y`` for a constant ``c`` (numeric screen, exact confirmation)."""
    if Y.is_zero():
        return X.is_zero()
    rng = np.random.default_rng(0) if rng is None else rng
    pts = rng.uniform(-0.9, 0.9, size=(5, X.n))
    a, b = X(pts).ravel(), Y(pts).ravel()
    ok = np.isfinite(a) & np.isfinite(b)
    a, b = a[ok], b[ok]
    if a.size:
        idx = np.argmax(np.abs(b))
        if abs(b[idx]) > 1e-300:
            c = a[idx] / b[idx]
            if not np.allclose(a, c * b, rtol=1e-8, atol=1e-12 * max(1.0, np.max(np.abs(a)))):
                return False
    return solve_constant_combination(X.coeffs, [Y.coeffs]) is not None


@dataclass
class ListReport:
    members: list
    closed: bool
    order: int
    failures: list = field(default_factory=list)

    @property
    def fields(self):
        return [m.field for m in self.members]


def _leq(d1: Degree, d2: Degree) -> bool:
    return all(a <= b for a, b in zip(d1.components, d2.components))


def _combination_ok(target: DegreedField, members) -> bool:
    """Exact constant combination of members with degree below the target's."""
    if target.field.is_zero():
        return True
    usable = [m for m in members if _leq(m.degree, target.degree)]
    return solve_constant_combination(target.field.coeffs, [m.field.coeffs for m in usable]) is not None


def generate_list(seeds, M: int, check_closure: bool = True) -> ListReport:
    """Iterated brackets of the seeds up to order ``M``.

    Order-``m`` members are ``[X_s, Y]`` with ``X_s`` a seed and ``Y`` a
    retained member of order ``m-1``; degrees add.  Zero fields and fields
    proportional to an earlier member of the same degree are dropped.

    The closure report brackets every pair of members and asks whether the
    result is an exact constant-coefficient combination of members whose
    degrees are componentwise at most the bracket's degree.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    seeds = [s if s.word else DegreedField(s.field, s.degree, (i,)) for i, s in enumerate(seeds)]
    members = []
    for s in seeds:
        if any(m.degree == s.degree and proportional(s.field, m.field) for m in members):
            continue
        members.append(s)
    level = list(members)
    for order in range(2, M + 1):
        new = []
        for s in seeds:
            for y in level:
                b = bracket(s.field, y.field)
                if b.is_zero():
                    continue
                cand = DegreedField(b, s.degree + y.degree, s.word + y.word)
                if any(m.degree == cand.degree and proportional(b, m.field) for m in members + new):
                    continue
                new.append(cand)
        members.extend(new)
        level = new
        if not level:
            break
    closed, failures = True, []
    if check_closure:
        for x, y in itertools.combinations(members, 2):
            b = bracket(x.field, y.field)
            cand = DegreedField(b, x.degree + y.degree, x.word + y.word) if not b.is_zero() else None
            if cand is not None and not _combination_ok(cand, members):
                closed = False
                failures.append(cand)
    return ListReport(members, closed, M, failures)


# ---------------------------------------------------------------------------
# sampled control checks


@dataclass
class SamplingPlan:
    """Where control checks sample.

    Parameters
    ----------
    base_points : array (B, n)
    deltas : array (D, nu), optional
        Explicit parameter samples; otherwise a grid of ``per_coord``
        values ``2^{-s}``, ``s`` in ``linspace(0, smax, per_coord)``, per
        coordinate, filtered by lattice membership of ``s``.
    cloud_factor, radius : local least-squares cloud of
        ``cloud_factor * len(list)`` points in a ball around each base point.
    t_samples : int
        Number of ``t`` samples in the unit ball (surface targets).
    min_deltas : int
        Below this many admissible samples the certificate is uncertified.
    """

    base_points: np.ndarray
    deltas: np.ndarray | None = None
    per_coord: int = 8
    smax: float = 20.0
    cloud_factor: int = 4
    radius: float = 0.1
    t_samples: int = 8
    min_deltas: int = 3
    fd_step: float = 1e-4
    seed: int = 0

    def delta_grid(self, lattice: ParamLattice) -> np.ndarray:
        if self.deltas is not None:
            return np.atleast_2d(np.asarray(self.deltas, dtype=float))
        s = np.linspace(0.0, self.smax, self.per_coord)
        out = [2.0 ** -np.array(js) for js in itertools.product(s, repeat=lattice.nu)
               if lattice.contains([float(v) for v in js])]
        return np.array(out)

    def describe(self, lattice) -> dict:
        d = self.delta_grid(lattice)
        return {"n_base_points": int(len(self.base_points)), "n_deltas": int(len(d)),
                "delta_min": d.min(axis=0).tolist() if len(d) else [],
                "per_coord": self.per_coord, "smax": self.smax,
                "explicit_deltas": self.deltas is not None,
                "cloud_factor": self.cloud_factor, "radius": self.radius,
                "t_samples": self.t_samples, "seed": self.seed}


@dataclass
class ControlCertificate:
    status: str  # PASS, FAIL, UNCERTIFIED
    tol: float
    bound: float
    max_residual: float
    sup_norms: list  # per delta sample: [order0, order1, ...]
    deltas: list
    witness: dict | None
    growth: float
    plan: dict
    coefficients: list | None = None
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return self.status == "PASS"

    def max_sup(self) -> float:
        return float(max(max(s) for s in self.sup_norms)) if self.sup_norms else 0.0

    def to_json(self):
        return {"status": self.status, "tol": self.tol, "bound": self.bound,
                "max_residual": self.max_residual, "max_sup_norm": self.max_sup(),
                "growth": self.growth, "witness": self.witness, "plan": self.plan,
                "notes": self.notes}


def _ball(rng, k, n, radius):
    v = rng.normal(size=(k, n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    r = radius * rng.uniform(size=(k, 1)) ** (1.0 / n)
    return v * r


def _solve_pointwise(A, b):
    """Minimum-norm least squares at every point: ``A`` (P, n, L), ``b`` (P, n)."""
    P, n, L = A.shape
    c = np.zeros((P, L))
    res = np.zeros(P)
    rank_def = 0
    for p in range(P):
        sol, _, rank, _ = np.linalg.lstsq(A[p], b[p], rcond=1e-12)
        c[p] = sol
        res[p] = np.linalg.norm(A[p] @ sol - b[p])
        rank_def += rank < min(n, L)
    return c, res, rank_def


def _coeff_fn(fields, degs, delta, target_fn):
    """Closure returning pointwise coefficients at points X (P, n)."""
    scal = np.array([delta_power(delta, d.components) for d in degs])

    def fn(X):
        A = np.stack([f(X) * s for f, s in zip(fields, scal)], axis=-1)
        return _solve_pointwise(A, target_fn(X))
    return fn, scal


def _control_core(members, target_fn_for_delta, lattice, plan, m_max, tol, bound, t_dependent=False):
    L = len(members)
    if L == 0:
        raise ValueError("list must be nonempty")
    fields = [m.field for m in members]
    degs = [m.degree for m in members]
    n = fields[0].n
    rng = np.random.default_rng(plan.seed)
    deltas = plan.delta_grid(lattice)
    base = np.atleast_2d(np.asarray(plan.base_points, dtype=float))
    clouds = [np.vstack([x0, x0 + _ball(rng, plan.cloud_factor * L - 1, n, plan.radius)]) for x0 in base]
    cloud = np.vstack(clouds)
    notes = []
    sups, worst_res = [], 0.0
    witness, best_ratio = None, -1.0
    total_rank_def = 0
    for delta in deltas:
        per_order = np.zeros(m_max + 1)
        tlist = [None] if not t_dependent else list(_ball(rng, plan.t_samples, t_dependent, 1.0))
        for tt in tlist:
            target_fn = target_fn_for_delta(delta, tt)
            fn, scal = _coeff_fn(fields, degs, delta, target_fn)
            c, res, rd = fn(cloud)
            total_rank_def += rd
            worst_res = max(worst_res, float(res.max()))
            per_order[0] = max(per_order[0], float(np.abs(c).max()))
            # derivatives along the scaled fields by central differences
            layers = [lambda X: fn(X)[0]]
            for order in range(1, m_max + 1):
                prev = layers[-1]

                def nxt(X, prev=prev):
                    outs = []
                    for f, s in zip(fields, scal):
                        V = f(X) * s
                        h = plan.fd_step
                        outs.append((prev(X + h * V) - prev(X - h * V)) / (2 * h))
                    return np.concatenate(outs, axis=-1)
                layers.append(nxt)
                per_order[order] = max(per_order[order], float(np.abs(nxt(cloud)).max()))
            idx = int(np.argmax(np.abs(c).max(axis=1)))
            ratio = float(np.abs(c).max())
            if ratio > best_ratio:
                best_ratio = ratio
                witness = {"delta": delta.tolist(), "x": cloud[idx].tolist(),
                           "t": None if tt is None else np.asarray(tt).tolist(),
                           "coefficients": c[idx].tolist(), "max_coefficient": ratio}
        sups.append(per_order.tolist())
    if total_rank_def:
        notes.append(f"{total_rank_def} rank-deficient local systems (minimum-norm solutions used)")
    max_sup = max(max(s) for s in sups) if sups else 0.0
    ref = min(range(len(deltas)), key=lambda i: np.abs(np.log(deltas[i])).sum()) if len(deltas) else 0
    ref_sup = max(sups[ref][0], 1e-300) if sups else 1.0
    growth = float(max(s[0] for s in sups) / ref_sup) if sups else 0.0
    if len(deltas) < plan.min_deltas:
        status = "UNCERTIFIED"
        notes.append(f"only {len(deltas)} admissible delta samples (< {plan.min_deltas})")
    elif worst_res <= tol and max_sup <= bound:
        status = "PASS"
    else:
        status = "FAIL"
    return ControlCertificate(status, tol, bound, worst_res, sups, deltas.tolist(), witness, growth,
                              plan.describe(lattice), notes=notes)


def check_control(members, target, lattice: ParamLattice, plan: SamplingPlan, m_max: int = 1,
                  tol: float = 1e-8, bound: float = 100.0) -> ControlCertificate:
    """Sampled control of a degreed field (or a surface ``WSpec``) by a list.

    Field target ``(X_0, d_0)``: solve ``delta^{d_0} X_0 = sum_l c_l
    delta^{d_l} X_l`` pointwise (minimum-norm least squares) on the local
    clouds.  Surface target ``W``: solve ``W(delta t, x) = sum_l c_l(t, x)
    delta^{d_l} X_l(x)`` for sampled ``t`` in the unit ball, where
    ``W(delta t, x) = sum_alpha delta^{deg alpha} t^alpha X_alpha(x)`` and
    ``target.degrees`` supplies ``deg alpha``.

    PASS iff every residual is ``<= tol`` and every sampled sup-norm of the
    coefficients and of their derivatives along ``delta^{d_l} X_l`` (up to
    order ``m_max``) is ``<= bound``.  The witness is the sample with the
    largest coefficient.
    """
    if isinstance(target, DegreedField):
        def tf(delta, tt):
            s = delta_power(delta, target.degree.components)
            return lambda X: target.field(X) * s
        return _control_core(members, tf, lattice, plan, m_max, tol, bound)
    # surface target: object with .terms {alpha: VField} and .degree(alpha)
    w = target

    def tf(delta, tt):
        def f(X):
            out = np.zeros(X.shape)
            for alpha, X_a in w.terms.items():
                d = w.degree_of(alpha)
                out = out + delta_power(delta, d.components) * np.prod(np.asarray(tt) ** np.array(alpha)) * X_a(X)
            return out
        return f
    return _control_core(members, tf, lattice, plan, m_max, tol, bound, t_dependent=w.N)


def check_D(members, lattice: ParamLattice, plan: SamplingPlan, m_max: int = 1, tol: float = 1e-8,
            bound: float = 100.0) -> dict:
    """Bracket condition: every ``[delta^{d_i} X_i, delta^{d_j} X_j]`` controlled by the list."""
    certs = {}
    status = "PASS"
    for (i, x), (j, y) in itertools.combinations(enumerate(members), 2):
        b = bracket(x.field, y.field)
        if b.is_zero():
            continue
        target = DegreedField(b, x.degree + y.degree)
        cert = check_control(members, target, lattice, plan, m_max, tol, bound)
        certs[(i, j)] = cert
        if cert.status == "FAIL":
            status = "FAIL"
        elif cert.status == "UNCERTIFIED" and status == "PASS":
            status = "UNCERTIFIED"
    return {"status": status, "pairs": certs,
            "max_sup_norm": max((c.max_sup() for c in certs.values()), default=0.0),
            "max_residual": max((c.max_residual for c in certs.values()), default=0.0)}
