"""Newton-line boundedness test for translation-invariant polynomial surfaces.

For ``gamma_{(s,t)}(x) = x - p(s, t)`` on the real line, with a two-parameter
product (or flag) kernel ``K(s, t)`` of small support, boundedness on ``L^2``
is decided by the exponents of ``p``: let ``a`` (resp. ``b``) be the smallest
exponent of a pure ``s`` (resp. pure ``t``) monomial.  In product mode the
operator is bounded iff every exponent ``(e, f)`` with ``c_(e,f) != 0``
satisfies ``e/a + f/b >= 1``; in flag mode (``b <= a``) iff ``e + f >= b``.

The module also builds the multiplier of the kernels ``K_{tau,M}`` that
witness unboundedness, and the Heisenberg-group case study.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels

BOUNDED = "bounded"
UNBOUNDED = "unbounded"
UNBOUNDED_EXTENDED = "unbounded_extended"
UNDECIDED = "undecided"

EXIT_CODES = {BOUNDED: 0, UNBOUNDED: 3, UNBOUNDED_EXTENDED: 4, UNDECIDED: 5}

INF = math.inf


class ConfigurationError(ValueError):
    """Raised for inconsistent decision settings (e.g. flag mode with b > a)."""


@dataclass(frozen=True)
class PolySurface:
    """``p(s, t) = sum c_(e,f) s^e t^f`` with exact rational coefficients.

    Zero coefficients are dropped; a constant term is rejected.
    """

    coeffs: tuple  # sorted ((e, f), Fraction) pairs

    def __init__(self, coeffs):
        items = coeffs.items() if isinstance(coeffs, dict) else coeffs
        acc = {}
        for (e, f), c in items:
            e, f = int(e), int(f)
            if e < 0 or f < 0:
                raise ValueError("exponents must be nonnegative")
            c = Fraction(c)
            acc[(e, f)] = acc.get((e, f), Fraction(0)) + c
        acc = {k: v for k, v in acc.items() if v != 0}
        if (0, 0) in acc:
            raise ValueError("p must have no constant term")
        object.__setattr__(self, "coeffs", tuple(sorted(acc.items())))

    @classmethod
    def from_quadruples(cls, quads):
        """Build from ``(e, f, numerator, denominator)`` quadruples."""
        out = []
        for q in quads:
            if len(q) != 4:
                raise ValueError(f"expected (e, f, num, den), got {q!r}")
            e, f, num, den = q
            if int(den) == 0:
                raise ValueError("zero denominator")
            out.append(((e, f), Fraction(int(num), int(den))))
        return cls(out)

    def to_quadruples(self):
        return [[e, f, c.numerator, c.denominator] for (e, f), c in self.coeffs]

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    def is_zero(self) -> bool:
        return len(self.coeffs) == 0

    def swapped(self) -> "PolySurface":
        return PolySurface([((f, e), c) for (e, f), c in self.coeffs])

    def scaled(self, lam) -> "PolySurface":
        """``p(lam s, t)``."""
        lam = Fraction(lam)
        return PolySurface([((e, f), c * lam**e) for (e, f), c in self.coeffs])

    def __call__(self, s, t):
        out = 0.0
        for (e, f), c in self.coeffs:
            out = out + float(c) * np.power(s, e) * np.power(t, f)
        return out


@dataclass
class NewtonVerdict:
    mode: str
    a: float
    b: float
    classification: str
    witnesses: list = field(default_factory=list)
    swapped: bool = False
    note: str = ""

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.classification]

    def to_json(self) -> dict:
        def enc(v):
            return "inf" if v == INF else int(v)
        return {"mode": self.mode, "a": enc(self.a), "b": enc(self.b),
                "classification": self.classification,
                "witnesses": [list(w) for w in self.witnesses],
                "swapped": self.swapped, "note": self.note}


def pure_exponents(p: PolySurface):
    """``(a, b)``: minimal pure s- and t-exponents (``inf`` when absent)."""
    a = min((e for (e, f), _ in p.coeffs if f == 0), default=INF)
    b = min((f for (e, f), _ in p.coeffs if e == 0), default=INF)
    return a, b


def _line_value(e, f, a, b):
    """``e/a + f/b`` as an exact fraction (terms with infinite intercept drop)."""
    v = Fraction(0)
    if a != INF:
        v += Fraction(e, a)
    if b != INF:
        v += Fraction(f, b)
    return v


def newton_verdict(p: PolySurface, mode: str = "product", allow_swap: bool = False) -> NewtonVerdict:
    """Classify ``x -> x - p(s, t)`` against product or flag kernels.

    Parameters
    ----------
    p : PolySurface
    mode : {"product", "flag"}
        Flag mode corresponds to parameters with ``delta_1 <= delta_2`` and
        needs ``b <= a``.
    allow_swap : bool
        In flag mode with ``b > a``, exchange the roles of ``s`` and ``t``
        instead of raising.

    Notes
    -----
    When exactly one of ``a, b`` is infinite the line degenerates to
    ``f >= b`` (resp. ``e >= a``); exponents on or above it give
    ``bounded`` (the control argument still applies), anything else gives
    ``unbounded_extended`` since the divergence construction needs finite
    intercepts.  If both are infinite every term is non-pure and the
    verdict is ``unbounded_extended``.
    """
    if p.is_zero():
        raise ValueError("p must be nonzero")
    if mode not in ("product", "flag"):
        raise ValueError(f"unknown mode {mode!r}")
    a, b = pure_exponents(p)
    exps = [ef for ef, _ in p.coeffs]
    nonpure = [ef for ef in exps if ef[0] > 0 and ef[1] > 0]

    if mode == "flag":
        swapped = False
        if b > a:
            if not allow_swap:
                raise ConfigurationError(f"flag mode needs b <= a (got a={a}, b={b}); enable role swap")
            p = p.swapped()
            a, b = b, a
            exps = [ef for ef, _ in p.coeffs]
            swapped = True
        if b == INF:
            return NewtonVerdict("flag", a, b, UNBOUNDED_EXTENDED, sorted(nonpure), swapped,
                                 "no pure powers")
        bad = sorted(ef for ef in exps if ef[0] + ef[1] < b)
        cls = BOUNDED if not bad else UNBOUNDED
        return NewtonVerdict("flag", a, b, cls, bad, swapped)

    if a == INF and b == INF:
        return NewtonVerdict("product", a, b, UNBOUNDED_EXTENDED, sorted(nonpure), False,
                             "no pure powers")
    bad = [ef for ef in exps if _line_value(ef[0], ef[1], a, b) < 1]
    bad.sort(key=lambda ef: (_line_value(ef[0], ef[1], a, b), ef[0], ef[1]))
    if not bad:
        return NewtonVerdict("product", a, b, BOUNDED, [], False)
    if a == INF or b == INF:
        return NewtonVerdict("product", a, b, UNBOUNDED_EXTENDED, bad, False,
                             "infinite intercept: divergence construction unavailable")
    return NewtonVerdict("product", a, b, UNBOUNDED, bad, False)


def select_witness(p: PolySurface):
    """Exponent minimizing ``e/a + f/b``, ties broken by minimal ``e``."""
    v = newton_verdict(p, "product")
    if v.classification != UNBOUNDED:
        raise ValueError(f"p is not product-unbounded with finite a, b ({v.classification})")
    return v.witnesses[0], v.a, v.b


# ---------------------------------------------------------------------------
# counterexample multiplier


def default_eta():
    """Cancelling bump on ``(0, 1)``: derivative of the mollifier centered at 1/2."""
    return kernels.Bump1D("dmollifier", order=1, radius=0.5, center=0.5)


def _phase_terms(p, witness, a, b, tau, j, r):
    """Phase monomials ``(log2 |coef|, sign, g, h)`` after unit-support substitution."""
    e, f = witness
    m0 = Fraction(e, a) + Fraction(f, b)
    lt = math.log2(tau)
    lr = math.log2(r)
    kj = -j * e / f
    out = []
    for (g, h), c in p.coeffs:
        expo = float(m0 - Fraction(g, a) - Fraction(h, b)) * lt - j * g - kj * h - (g + h) * lr
        out.append((math.log2(abs(float(c))) + expo, 1.0 if c > 0 else -1.0, g, h))
    return out


def choose_rescaling(p: PolySurface, tau: float, M_max: int, tol: float = 1e-3,
                     witness=None) -> float:
    """Smallest ``r = 2^k`` making every off-line phase term negligible.

    Bumps ``eta^{(r)}(s) = r eta(r s)`` concentrate near the origin; for the
    substituted phase the coefficient of ``s^g t^h`` is multiplied by
    ``r^{-(g+h)}``.  Terms strictly above the Newton line (which vanish as
    ``tau -> inf``) must have coefficients below ``tol`` for every
    ``0 <= j <= M_max``.  Since ``int eta = 0``, such terms then perturb each
    scale's integral by a relative ``O(tol)``.
    """
    if witness is None:
        witness, a, b = select_witness(p)
    else:
        a, b = pure_exponents(p)
    e, f = witness
    m0 = Fraction(e, a) + Fraction(f, b)
    for k in range(0, 400):
        r = 2.0**k
        worst = -np.inf
        for j in range(M_max + 1):
            for lc, _, g, h in _phase_terms(p, witness, a, b, tau, j, r):
                if Fraction(g, a) + Fraction(h, b) > m0:
                    worst = max(worst, lc)
        if worst <= math.log2(tol):
            return r
    raise ValueError("no admissible rescaling found")


def _gl01(n):
    """Gauss-Legendre rule with about ``n`` nodes on ``[0, 1]`` (composite when large)."""
    if n <= 256:
        x, w = np.polynomial.legendre.leggauss(n)
        return 0.5 * (x + 1.0), 0.5 * w
    panels = -(-n // 32)
    x, w = np.polynomial.legendre.leggauss(32)
    left = np.arange(panels)[:, None] / panels
    xs = (left + 0.5 * (x + 1.0) / panels).ravel()
    ws = np.broadcast_to(0.5 * w / panels, (panels, 32)).ravel()
    return xs, ws


def _term_integral(terms, eta, nodes_min=64, per_osc=20, max_nodes=4096):
    """``int int (exp(i Phi) - 1) eta(s) eta(t) ds dt`` over the unit square.

    The ``-1`` is exact because ``int eta = 0``; it keeps tiny phases
    accurate.
    """
    # crude bound for |dPhi/ds| + |dPhi/dt| on the unit square
    dmax = 0.0
    for lc, _, g, h in terms:
        dmax += 2.0**lc * (g + h)
    n = int(max(nodes_min, per_osc * dmax / (2 * np.pi) + nodes_min))
    mixed = [tm for tm in terms if tm[2] > 0 and tm[3] > 0]
    if not mixed:
        # separable phase: product of two one-dimensional integrals
        out = []
        for axis in (2, 3):
            pure = [tm for tm in terms if tm[axis] > 0]
            d = sum(2.0 ** tm[0] * (tm[2] + tm[3]) for tm in pure)
            n1 = int(per_osc * d / (2 * np.pi) + nodes_min)
            if n1 > 2**22:
                raise ValueError("phase too oscillatory for the node budget")
            x, w = _gl01(n1)
            ph = np.zeros_like(x)
            for lc, sg, g, h in pure:
                if lc > -1074:
                    ph += sg * 2.0**lc * x ** (g + h)
            ev = eta(x)
            out.append(complex(np.sum(w * ev * ((np.cos(ph) - 1.0) + 1j * np.sin(ph)))))
        return out[0] * out[1]
    if n > max_nodes:
        raise ValueError("phase too oscillatory for the node budget; increase the rescaling")
    s, w = _gl01(n)
    es = eta(s)
    S, T = np.meshgrid(s, s, indexing="ij")
    phi = np.zeros_like(S)
    for lc, sg, g, h in terms:
        if lc < -1074:
            continue
        phi += sg * 2.0**lc * S**g * T**h
    integrand = (np.cos(phi) - 1.0) + 1j * np.sin(phi)
    return complex((w * es) @ integrand @ (w * es))


@dataclass
class MultiplierResult:
    value: complex
    terms: list
    witness: tuple
    m0: Fraction
    rescale: float


def counterexample_multiplier(p: PolySurface, tau: float, M: int, eta=None, rescale=None,
                              witness=None, check_nonvanishing: bool = True) -> MultiplierResult:
    """Multiplier of ``K_{tau,M}`` at frequency ``tau^{m0}``.

    ``K_{tau,M}(s, t) = sum_{j=0}^{M} varsigma^{(2^j tau^{1/a})}(s)
    varsigma^{(2^k tau^{1/b})}(t)`` with ``k = -j e/f`` (real), where
    ``varsigma = eta^{(r)}`` and ``r`` is the rescaling.  Each term is
    computed after the substitution that maps the support of the dilated
    bumps back to ``(0, 1)``.

    Parameters
    ----------
    p : PolySurface
    tau : float
    M : int
    eta : callable, optional
        Cancelling bump supported in ``(0, 1)``; defaults to
        :func:`default_eta`.
    rescale : float, optional
        The factor ``r``.  Chosen by :func:`choose_rescaling` for this ``M``
        when omitted; pass a common value to compare different ``M``.
    witness : (e, f), optional
        Overrides the minimal violating exponent (used for control runs;
        the nonvanishing check is then skipped).
    """
    if eta is None:
        eta = default_eta()
    a, b = pure_exponents(p)
    forced = witness is not None
    if not forced:
        witness, a, b = select_witness(p)
    if a == INF or b == INF:
        raise ValueError("counterexample needs finite a and b")
    e, f = witness
    if f == 0:
        raise ValueError("witness must have f > 0")
    m0 = Fraction(e, a) + Fraction(f, b)
    if rescale is None:
        rescale = choose_rescaling(p, tau, M, witness=witness)
    r = float(rescale)
    if check_nonvanishing and not forced:
        c = float(p.as_dict()[(e, f)])
        base = [(math.log2(abs(c)) - (e + f) * math.log2(r), 1.0 if c > 0 else -1.0, e, f)]
        val = _term_integral(base, eta)
        s, w = _gl01(256)
        scale = abs(c) * r ** (-(e + f)) * abs(np.sum(w * s**e * eta(s))) * abs(np.sum(w * s**f * eta(s)))
        if not abs(val) > 0.5 * scale or scale == 0:
            raise ValueError("bump fails the nonvanishing condition at this rescaling")
    terms = []
    for j in range(M + 1):
        terms.append(_term_integral(_phase_terms(p, witness, a, b, tau, j, r), eta))
    total = complex(sum(terms))
    return MultiplierResult(total, terms, tuple(witness), m0, r)


# ---------------------------------------------------------------------------
# Heisenberg group


def heis_mul(g, h):
    """Group law ``(x+x', y+y', t+t'+2(y x' - x y'))``."""
    x, y, t = g
    xp, yp, tp = h
    return (x + xp, y + yp, t + tp + 2 * (y * xp - x * yp))


def heis_inv(g):
    x, y, t = g
    return (-x, -y, -t)


def heis_dilate(g, delta):
    """Two-parameter dilation ``(d1 x, d2 y, d1 d2 t)``."""
    x, y, t = g
    d1, d2 = delta
    return (d1 * x, d2 * y, d1 * d2 * t)


def heis_op(g, h=None, dilation=None):
    """Group product ``g h`` or the dilation of ``g``; exactly one of ``h``, ``dilation``."""
    if (h is None) == (dilation is None):
        raise ValueError("give exactly one of h or dilation")
    if h is not None:
        return heis_mul(g, h)
    return heis_dilate(g, dilation)


def heis_translate_batch(g, h_inv_points):
    """Vectorised ``g * h^{-1}`` for points ``g`` (B,3) and ``h`` (B,3)."""
    x, y, t = g[..., 0], g[..., 1], g[..., 2]
    xp, yp, tp = -h_inv_points[..., 0], -h_inv_points[..., 1], -h_inv_points[..., 2]
    return np.stack([x + xp, y + yp, t + tp + 2 * (y * xp - x * yp)], axis=-1)


HEIS_EXPONENTS = ((1, 0), (0, 1), (1, 1))


def euclidean_diagonal_multiplier(phi, psi, M: int, nodes: int = 64) -> dict:
    """``K_hat(0, 0, 1)`` summed over the diagonal scales ``j = (l, -l)``, ``|l| <= M``.

    Each piece is ``phi(x) phi(y) psi(t)`` dilated by ``2^j`` under
    ``(2^{j1} x, 2^{j2} y, 2^{j1+j2} t)``; its Fourier transform at
    ``(0, 0, 1)`` is computed by Gauss-Legendre quadrature on the dilated
    supports (no closed form is used).
    """
    x, w = np.polynomial.legendre.leggauss(nodes)
    pieces = []
    for l in range(-M, M + 1):
        j1, j2 = float(l), float(-l)
        vals = []
        for (bump, scale, freq) in ((phi, 2.0**j1, 0.0), (phi, 2.0**j2, 0.0), (psi, 2.0 ** (j1 + j2), 1.0)):
            lo, hi = bump.support()
            lo, hi = lo / scale, hi / scale
            u = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
            ww = 0.5 * (hi - lo) * w
            vals.append(np.sum(ww * scale * bump(scale * u) * np.exp(-1j * freq * u)))
        pieces.append(complex(vals[0] * vals[1] * vals[2]))
    lo, hi = psi.support()
    u = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    psi_hat_1 = complex(np.sum(0.5 * (hi - lo) * w * psi(u) * np.exp(-1j * u)))
    return {"pieces": pieces, "sum": complex(sum(pieces)), "psi_hat_1": psi_hat_1,
            "count": 2 * M + 1}


def heis_default_bumps(phi_radius: float = 1.0 / 32, psi_radius: float = 0.5):
    """``phi``: normalized mollifier; ``psi = -(mollifier'')`` (even, ``int psi = 0``, ``psi_hat(1) > 0``)."""
    phi = kernels.Bump1D("mollifier", radius=phi_radius).normalized()
    psi = kernels.Bump1D("dmollifier", order=2, radius=psi_radius, amp=-1.0)
    return phi, psi


def _bump_hat(b, xi, nodes=512):
    lo, hi = b.support()
    x, w = np.polynomial.legendre.leggauss(nodes)
    u = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    return complex(np.sum(0.5 * (hi - lo) * w * b(u) * np.exp(-1j * xi * u)))


def _heis_nodes(lo, hi, h, minimum):
    n = int(min(256, max(minimum, math.ceil(2 * (hi - lo) / h) + 1)))
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def heis_group_pieces(phi, psi, M: int, grid=None, psi1=None, psi2=None):
    """Discretized right convolutions ``f -> psi1 ((psi2 f) * K_l)`` on a 3-D grid.

    ``K_l(x, y, t) = 2^l phi(2^l x) 2^{-l} phi(2^{-l} y) psi(t)`` for the
    diagonal scales ``j = (l, -l)``, ``|l| <= M``, and
    ``(f * K)(g) = int f(g h^{-1}) K(h) dh``.  Because the ``t``-axis is
    central the piece factors as ``B_l C`` where ``C`` convolves in ``t``
    with ``psi`` and ``B_l`` averages over the sheared ``(x', y')`` shifts

        g h^{-1} = (x - x', y - y', t - t' - 2 y x' + 2 x y').

    Returns ``({l: LinearOperator}, info)``.  Raises :class:`opnorm.GridError`
    when the grid cannot hold the widest piece or does not resolve ``psi``.
    """
    from . import opnorm
    import scipy.sparse as sps

    if grid is None:
        grid = opnorm.GridSpec((-1.0, -1.0, -2.5), (1.0, 1.0, 2.5), (32, 32, 32))
    if psi1 is None:
        psi1 = opnorm.Cutoff((0.0, 0.0, 0.0), (0.5, 0.5, 1.0))
    if psi2 is None:
        psi2 = psi1
    hx, hy, ht = grid.h
    rx = phi.radius
    rt = psi.radius
    F_box = [list(b) for b in psi2.box()]
    F_box[2] = [F_box[2][0] - rt, F_box[2][1] + rt]
    for k in range(3):
        if F_box[k][0] < grid.lo[k] or F_box[k][1] > grid.hi[k]:
            raise opnorm.GridError("grid does not contain the support of psi2 * psi")
    widest = rx * 2.0**M
    reach_y = max(abs(b) for b in psi1.box()[1]) + widest
    if reach_y > max(abs(grid.lo[1]), abs(grid.hi[1])) + 1e-12 and widest > F_box[1][1] - F_box[1][0]:
        raise opnorm.GridError(f"scale 2^{M} piece (y-reach {reach_y:.3g}) does not fit the grid")
    if 2 * rt < 4 * ht:
        raise opnorm.GridError("t-grid too coarse to resolve psi (need 4 cells across its support)")

    X = grid.points()
    size = grid.size

    def f_support(pts):
        return np.all((pts >= [b[0] for b in F_box]) & (pts <= [b[1] for b in F_box]), axis=-1)

    # C: t-convolution with psi, psi2 folded in
    tq, tw = _heis_nodes(-rt, rt, ht, 8)
    tw = tw * psi(tq)
    rows = np.nonzero(f_support(X))[0]
    Q = len(tq)
    pts = np.repeat(X[rows], Q, axis=0)
    pts[:, 2] -= np.tile(tq, len(rows))
    w = np.tile(tw, len(rows)) * psi2(pts)
    ok = grid.inside(pts) & (w != 0)
    r, c, v = opnorm.interp_entries(grid, pts[ok], w[ok], np.repeat(rows, Q)[ok])
    Cmat = sps.csr_matrix((v, (r, c)), shape=(size, size))

    p1 = psi1(X)
    brow = np.nonzero(p1)[0]
    ops, info = {}, {"grid": grid.to_json(), "nnz": {}}
    for l in range(-M, M + 1):
        sx, sy = 2.0**l, 2.0**-l
        xq, xw = _heis_nodes(-rx / sx, rx / sx, hx, 2)
        yq, yw = _heis_nodes(-rx / sy, rx / sy, hy, 2)
        xw = xw * sx * phi(sx * xq)
        yw = yw * sy * phi(sy * yq)
        XQ, YQ = np.meshgrid(xq, yq, indexing="ij")
        WQ = np.outer(xw, yw).ravel()
        XQ, YQ = XQ.ravel(), YQ.ravel()
        keep = WQ != 0
        XQ, YQ, WQ = XQ[keep], YQ[keep], WQ[keep]
        Q = len(WQ)
        G = X[brow]
        gx = np.repeat(G[:, 0], Q)
        gy = np.repeat(G[:, 1], Q)
        gt = np.repeat(G[:, 2], Q)
        xs = np.tile(XQ, len(brow))
        ys = np.tile(YQ, len(brow))
        pts = np.stack([gx - xs, gy - ys, gt - 2 * gy * xs + 2 * gx * ys], axis=-1)
        w = np.repeat(p1[brow], Q) * np.tile(WQ, len(brow))
        sup = f_support(pts)
        bad = sup & ~grid.inside(pts)
        if bad.any():
            raise opnorm.GridError(f"piece l={l}: sample {pts[np.argmax(bad)].tolist()} leaves the grid")
        ok = sup & (w != 0)
        r, c, v = opnorm.interp_entries(grid, pts[ok], w[ok], np.repeat(brow, Q)[ok])
        B = sps.csr_matrix((v, (r, c)), shape=(size, size))
        ops[l] = opnorm.product_op(B, Cmat)
        info["nnz"][l] = int(B.nnz)
    info["nnz"]["C"] = int(Cmat.nnz)
    return ops, info


@dataclass
class HeisenbergReport:
    euclidean: dict
    group: dict
    passed: bool

    def to_json(self):
        return {"euclidean": self.euclidean, "group": self.group, "passed": self.passed,
                "status": "PASS" if self.passed else "FAIL"}


def heis_divergence_check(psi=None, phi=None, M: int = 4, grid=None, compare_M: int | None = 2,
                          rel_tol: float = 0.01, stability: float = 2.0, slope_max: float = -0.5,
                          norm_tol: float = 1e-6, seed: int = 0) -> HeisenbergReport:
    """Euclidean divergence versus group-side almost orthogonality.

    Euclidean side: the multiplier of the partial kernel at ``(0, 0, 1)``
    over the ``2M + 1`` diagonal scales must equal ``(2M + 1) psi_hat(1)``
    within ``rel_tol``.  Group side: the norm table ``||T_l^* T_l'||`` of
    the discretized group convolutions, its fitted decay slope (must be at
    most ``slope_max`` when at least three distances are available) and the
    stability of the table maximum between ``compare_M`` and ``M``
    (ratio at most ``stability``).
    """
    from . import opnorm

    dphi, dpsi = heis_default_bumps()
    phi = phi or dphi
    psi = psi or dpsi
    mass_phi = phi.integral(512)
    mass_psi = psi.integral(512)
    psi_hat_1 = _bump_hat(psi, 1.0)
    if abs(mass_phi - 1.0) > 1e-10:
        raise ValueError(f"phi must have unit integral (got {mass_phi})")
    if abs(mass_psi) > 1e-10:
        raise ValueError("psi must have zero integral")
    if not (abs(psi_hat_1.imag) < 1e-10 and psi_hat_1.real > 0):
        raise ValueError(f"psi_hat(1) must be positive (got {psi_hat_1})")
    eu = euclidean_diagonal_multiplier(phi, psi, M, nodes=512)
    expected = eu["count"] * psi_hat_1
    rel = abs(eu["sum"] - expected) / abs(expected)
    euclid = {"sum": [eu["sum"].real, eu["sum"].imag], "psi_hat_1": psi_hat_1.real, "count": eu["count"],
              "relative_error": rel, "tol": rel_tol, "passed": rel <= rel_tol}

    ops, info = heis_group_pieces(phi, psi, M, grid)
    tab, _ = opnorm.pair_table(ops, norm_tol, both=False, seed=seed)
    dist = lambda j, k: float(abs(j - k))
    group = {"table": [{"l": j, "k": k, "norm": v} for (j, k), v in sorted(tab.items())],
             "max": max(tab.values()), "nnz": info["nnz"], "norm_tol": norm_tol}
    ok_group = True
    if len({abs(j - k) for (j, k) in tab if j != k}) >= 3:
        slope, icpt, r2 = opnorm.fit_decay(tab, dist)
        group.update(slope=slope, intercept=icpt, r2=r2, slope_max=slope_max)
        ok_group &= slope <= slope_max
    if compare_M is not None and compare_M < M:
        sub = max(v for (j, k), v in tab.items() if abs(j) <= compare_M and abs(k) <= compare_M)
        ratio = group["max"] / sub
        group.update(compare_M=compare_M, max_compare=sub, max_ratio=ratio, stability=stability)
        ok_group &= (1.0 / stability) <= ratio <= stability
    group["passed"] = ok_group
    return HeisenbergReport(euclid, group, euclid["passed"] and ok_group)
