"""Multi-parameter dilations, degrees and parameter lattices.

A dilation scheme attaches to each t-coordinate ``t_i`` an exponent vector
``e_i`` in ``[0, inf)^nu``; a parameter ``delta`` in ``[0, 1]^nu`` acts by
``t_i -> delta^{e_i} t_i`` with the multi-index power
``delta^{e} = prod_mu delta_mu^{e^mu}``.

The admissible set of parameters is represented through its dyadic shadow
``L = {j in N^nu : 2^{-j} in A}``, which must be closed under the
coordinatewise minimum.  ``cancellation_structure`` works out, for a point
``j`` of ``L``, which groups of t-coordinates a bump attached to ``j`` has
to integrate to zero over.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        return Fraction(v).limit_denominator(10**9)
    return Fraction(v)


@dataclass(frozen=True)
class DilationScheme:
    """Exponent matrix ``e = (e_1, ..., e_N)`` with ``e_i`` in ``[0, inf)^nu``.

    Parameters
    ----------
    exponents : sequence of sequences
        ``N`` rows of length ``nu``.  Entries are converted to exact
        fractions (floats via ``limit_denominator``).
    """

    exponents: tuple

    def __init__(self, exponents):
        rows = tuple(tuple(_frac(v) for v in row) for row in exponents)
        if len(rows) == 0:
            raise ValueError("a dilation scheme needs at least one coordinate")
        nu = len(rows[0])
        if nu < 1:
            raise ValueError("nu must be at least 1")
        for i, row in enumerate(rows):
            if len(row) != nu:
                raise ValueError(f"row {i} has length {len(row)}, expected {nu}")
            if any(v < 0 for v in row):
                raise ValueError(f"exponent row {i} has a negative entry")
            if all(v == 0 for v in row):
                raise ValueError(f"exponent row {i} is zero")
        object.__setattr__(self, "exponents", rows)

    @property
    def N(self) -> int:
        return len(self.exponents)

    @property
    def nu(self) -> int:
        return len(self.exponents[0])

    def as_array(self) -> np.ndarray:
        """Exponents as an ``(N, nu)`` float array."""
        return np.array([[float(v) for v in row] for row in self.exponents])

    @classmethod
    def isotropic(cls, N: int, nu: int = 1):
        return cls([[1] * nu for _ in range(N)])

    def to_json(self):
        return [[str(v) for v in row] for row in self.exponents]

    @classmethod
    def from_json(cls, data):
        return cls([[Fraction(str(v)) for v in row] for row in data])


def delta_power(delta, e) -> float:
    """Multi-index power ``prod_mu delta_mu ** e_mu``."""
    out = 1.0
    for d, p in zip(delta, e):
        if p != 0:
            out *= float(d) ** float(p)
    return out


def scale_point(scheme: DilationScheme, delta, t) -> np.ndarray:
    """Apply the dilation ``delta`` to ``t``.

    ``t`` may be a single point of shape ``(N,)`` or a batch ``(..., N)``.
    Coordinate ``i`` is multiplied by ``delta^{e_i}``.
    """
    delta = np.asarray(delta, dtype=float)
    t = np.asarray(t, dtype=float)
    if delta.shape != (scheme.nu,):
        raise ValueError(f"delta must have shape ({scheme.nu},), got {delta.shape}")
    if t.shape[-1] != scheme.N:
        raise ValueError(f"t must have trailing dimension {scheme.N}, got {t.shape}")
    factors = np.array([delta_power(delta, e) for e in scheme.exponents])
    return t * factors


def dyadic_factors(scheme: DilationScheme, j) -> np.ndarray:
    """Per-coordinate factors ``2^{j . e_i}`` of the dyadic dilation ``2^j``."""
    j = [float(v) for v in j]
    if len(j) != scheme.nu:
        raise ValueError(f"j must have length {scheme.nu}")
    return np.array([2.0 ** sum(jm * float(em) for jm, em in zip(j, e)) for e in scheme.exponents])


@dataclass(frozen=True)
class Degree:
    """Formal degree ``sum_j alpha_j e_j`` with its pure/non-pure flag."""

    components: tuple
    kind: str  # "pure", "non-pure" or "zero"

    @property
    def is_pure(self) -> bool:
        return self.kind == "pure"

    def __add__(self, other: "Degree") -> "Degree":
        return make_degree(tuple(a + b for a, b in zip(self.components, other.components)))

    def as_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.components])


def make_degree(components) -> Degree:
    comps = tuple(_frac(c) for c in components)
    if any(c < 0 for c in comps):
        raise ValueError("degree components must be nonnegative")
    nonzero = sum(1 for c in comps if c != 0)
    kind = "zero" if nonzero == 0 else ("pure" if nonzero == 1 else "non-pure")
    return Degree(comps, kind)


def degree(scheme: DilationScheme, alpha) -> Degree:
    """Degree of the monomial ``t^alpha``: ``sum_j alpha_j e_j``."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != scheme.N:
        raise ValueError(f"alpha must have length {scheme.N}")
    if any(a < 0 for a in alpha):
        raise ValueError("alpha must be a multi-index")
    comps = [Fraction(0)] * scheme.nu
    for a, e in zip(alpha, scheme.exponents):
        for mu in range(scheme.nu):
            comps[mu] += a * e[mu]
    return make_degree(comps)


# ---------------------------------------------------------------------------
# parameter lattices


@dataclass(frozen=True)
class ParamLattice:
    """Dyadic shadow ``L`` of the admissible parameter set.

    ``kind`` is ``"product"`` (``L = N^nu``), ``"flag"``
    (``j_1 <= j_2 <= ... <= j_nu``) or ``"custom"`` (``a . j <= b`` for every
    row ``[a_1, ..., a_nu, b]`` of ``inequalities``, intersected with
    ``N^nu``).  Custom sets are checked for closure under coordinatewise
    minimum on the box ``[0, closure_check_bound]^nu`` at construction.
    """

    kind: str
    nu: int
    inequalities: tuple = ()
    closure_check_bound: int = 6

    def __post_init__(self):
        if self.kind not in ("product", "flag", "custom"):
            raise ValueError(f"unknown lattice kind {self.kind!r}")
        if self.nu < 1:
            raise ValueError("nu must be at least 1")
        rows = tuple(tuple(_frac(v) for v in row) for row in self.inequalities)
        for row in rows:
            if len(row) != self.nu + 1:
                raise ValueError(f"inequality {row} must have nu + 1 = {self.nu + 1} entries")
        if self.kind != "custom" and rows:
            raise ValueError("only custom lattices take inequalities")
        object.__setattr__(self, "inequalities", rows)
        if self.kind == "custom":
            self._check_min_closure()

    def _check_min_closure(self):
        pts = self._enumerate_box(self.closure_check_bound)
        if not pts:
            raise ValueError("custom lattice is empty on the validation box")
        for p, q in itertools.combinations(pts, 2):
            m = tuple(min(a, b) for a, b in zip(p, q))
            if not self.contains(m):
                raise ValueError(
                    f"custom lattice is not closed under coordinatewise min: "
                    f"{p} and {q} are members but {m} is not")

    def contains(self, j) -> bool:
        """Membership test; real (non-integer) ``j`` is accepted as well."""
        if len(j) != self.nu or any(v < 0 for v in j):
            return False
        if self.kind == "product":
            return True
        if self.kind == "flag":
            return all(j[i] <= j[i + 1] for i in range(self.nu - 1))
        for row in self.inequalities:
            lhs = sum(row[m] * Fraction(j[m]) for m in range(self.nu))
            if lhs > row[-1]:
                return False
        return True

    def _enumerate_box(self, bound):
        return [p for p in itertools.product(range(bound + 1), repeat=self.nu) if self.contains(p)]

    def to_json(self) -> dict:
        out = {"kind": self.kind, "nu": self.nu}
        if self.kind == "custom":
            out["inequalities"] = [[str(v) for v in row] for row in self.inequalities]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ParamLattice":
        if not isinstance(data, dict) or "kind" not in data or "nu" not in data:
            raise ValueError("lattice fragment needs 'kind' and 'nu'")
        ineq = [[Fraction(str(v)) for v in row] for row in data.get("inequalities", [])]
        return cls(data["kind"], int(data["nu"]), tuple(map(tuple, ineq)))

    def as_custom(self) -> "ParamLattice":
        """The same set expressed through inequalities (for brute-force checks)."""
        if self.kind == "custom":
            return self
        if self.kind == "product":
            rows = [[0] * self.nu + [0]]
        else:
            rows = []
            for i in range(self.nu - 1):
                r = [0] * (self.nu + 1)
                r[i], r[i + 1] = 1, -1
                rows.append(r)
            if not rows:
                rows = [[0] * self.nu + [0]]
        return ParamLattice("custom", self.nu, tuple(map(tuple, rows)))


def lattice_enumerate(lattice: ParamLattice, bound: int) -> list:
    """All lattice points with ``|j|_inf <= bound`` in lexicographic order."""
    if bound < 0:
        raise ValueError("bound must be nonnegative")
    return lattice._enumerate_box(int(bound))


# ---------------------------------------------------------------------------
# cancellation structure


@dataclass
class CancellationStructure:
    """Which coordinate groups must carry cancellation at ``j``.

    Attributes
    ----------
    minimal_set : tuple of int
        Parameters ``mu`` (0-based) such that no lattice point lies strictly
        below ``j`` in coordinate ``mu``.
    classes : dict
        ``mu -> frozenset`` of the parameters equivalent to ``mu``.
    required_subsets : list of tuple
        Sorted t-coordinate index sets (0-based) over which the bump must
        integrate to zero.
    certified : bool
        ``False`` when a brute-force answer could not be confirmed.
    method : str
        ``"closed-form"`` or ``"brute-force"``.
    """

    j: tuple
    C: float
    minimal_set: tuple
    classes: dict
    precedes: dict = field(repr=False, default_factory=dict)
    required_params: tuple = ()
    required_subsets: list = field(default_factory=list)
    certified: bool = True
    method: str = "closed-form"
    notes: list = field(default_factory=list)


def _preceq_product(j, mu1, mu2, C):
    if j[mu1] == 0:
        return True
    return mu1 == mu2


def _preceq_flag(j, mu1, mu2, C):
    if j[mu1] == 0:
        return True
    if mu1 == mu2:
        return True
    if mu2 > mu1:
        # k_{mu2} may be taken arbitrarily large along an extremal ray
        return False
    # mu2 < mu1: the worst admissible k has k_{mu2} = k_{mu1} = a
    for a in (0, j[mu1] - 1):
        if j[mu1] - a > C * (j[mu2] - a):
            return False
    return True


def _lp_max(c_obj, A_ub, b_ub, nu):
    """Maximise ``c_obj . k`` over the real relaxation; returns (status, value)."""
    res = linprog(-np.asarray(c_obj, dtype=float), A_ub=A_ub, b_ub=b_ub,
                  bounds=[(0, None)] * nu, method="highs")
    if res.status == 3:
        return "unbounded", np.inf
    if res.status == 2:
        return "infeasible", -np.inf
    if res.status != 0:
        return "failed", None
    return "ok", -res.fun


def _brute_force(lattice, j, C, search_bound):
    nu = lattice.nu
    pts = lattice_enumerate(lattice, search_bound)
    A = np.array([[float(v) for v in row[:-1]] for row in lattice.inequalities])
    b = np.array([float(row[-1]) for row in lattice.inequalities])
    certified = True
    notes = []

    minimal = []
    for mu in range(nu):
        found = any(k[mu] < j[mu] for k in pts)
        if found:
            continue
        if j[mu] == 0:
            minimal.append(mu)
            continue
        extra = np.zeros((1, nu))
        extra[0, mu] = 1.0
        status, _ = _lp_max(np.zeros(nu), np.vstack([A, extra]),
                            np.concatenate([b, [j[mu] - 1]]), nu)
        if status == "infeasible":
            minimal.append(mu)
        else:
            certified = False
            notes.append(f"minimality of mu={mu} not certified within search bound {search_bound}")
            minimal.append(mu)

    prec = {}
    for mu1 in range(nu):
        for mu2 in range(nu):
            if mu1 in minimal:
                prec[mu1, mu2] = True
                continue
            violated = any(k[mu1] < j[mu1] and j[mu1] - k[mu1] > C * (j[mu2] - k[mu2]) for k in pts)
            if violated:
                prec[mu1, mu2] = False
                continue
            obj = np.zeros(nu)
            obj[mu2] += C
            obj[mu1] -= 1.0
            extra = np.zeros((1, nu))
            extra[0, mu1] = 1.0
            status, val = _lp_max(obj, np.vstack([A, extra]),
                                  np.concatenate([b, [j[mu1] - 1]]), nu)
            thresh = C * j[mu2] - j[mu1]
            if status == "infeasible" or (status == "ok" and val <= thresh + 1e-12):
                prec[mu1, mu2] = True
            else:
                prec[mu1, mu2] = True
                certified = False
                notes.append(f"relation {mu1} <= {mu2} not certified within search bound {search_bound}")
    return tuple(minimal), prec, certified, notes


def cancellation_structure(scheme: DilationScheme, lattice: ParamLattice, j, C: float = 1.0,
                           search_bound: int | None = None) -> CancellationStructure:
    """Work out the cancellation groups required at lattice point ``j``.

    ``mu`` is minimal when no lattice point ``k`` has ``k_mu < j_mu``;
    ``mu1 <= mu2`` when every lattice ``k`` with ``k_{mu1} < j_{mu1}``
    satisfies ``j_{mu1} - k_{mu1} <= C (j_{mu2} - k_{mu2})``.  Classes are
    the mutual-``<=`` equivalence classes.  A class ``[mu]`` contributes the
    subset ``{i : e_i^{mu'} != 0 for some mu' in [mu]}`` when ``mu`` is not
    minimal and nothing sits strictly above ``mu``.

    Product and flag lattices use closed forms.  Custom lattices are
    searched up to ``search_bound`` (default ``|j|_inf + 16``); relations
    not confirmed by a witness or by a linear-programming bound are marked
    uncertified.
    """
    j = tuple(int(v) for v in j)
    if scheme.nu != lattice.nu:
        raise ValueError("scheme and lattice have different nu")
    if not lattice.contains(j):
        raise ValueError(f"j={j} is not a lattice point")
    if C < 1:
        raise ValueError("C must be at least 1")
    nu = lattice.nu
    certified, notes = True, []
    if lattice.kind in ("product", "flag"):
        method = "closed-form"
        minimal = tuple(mu for mu in range(nu) if j[mu] == 0)
        rel = _preceq_product if lattice.kind == "product" else _preceq_flag
        prec = {(m1, m2): rel(j, m1, m2, C) for m1 in range(nu) for m2 in range(nu)}
    else:
        method = "brute-force"
        if search_bound is None:
            search_bound = max(j) + 16
        if search_bound < max(j):
            raise ValueError("search_bound must be at least |j|_inf")
        minimal, prec, certified, notes = _brute_force(lattice, j, C, search_bound)

    classes = {}
    for mu in range(nu):
        classes[mu] = frozenset(m for m in range(nu) if prec[mu, m] and prec[m, mu])

    def strictly_below(m1, m2):
        return prec[m1, m2] and not prec[m2, m1]

    required = []
    for mu in range(nu):
        if mu in minimal:
            continue
        if any(strictly_below(mu, m2) for m2 in range(nu)):
            continue
        required.append(mu)

    subsets = []
    for mu in required:
        cls = classes[mu]
        sub = tuple(i for i, e in enumerate(scheme.exponents) if any(e[m] != 0 for m in cls))
        if sub not in subsets:
            subsets.append(sub)
    return CancellationStructure(j=j, C=C, minimal_set=tuple(minimal), classes=classes,
                                 precedes=prec, required_params=tuple(required),
                                 required_subsets=subsets, certified=certified,
                                 method=method, notes=notes)
