"""Named surfaces, generator specs and field lists used by experiments and tests.

Every entry is stored as plain JSON-compatible data (expressions in the
textual grammar of :mod:`mpradon.expr`), so a config file can either name a
catalog entry or spell the same data out inline.  Closed-form surfaces are
written in the variables ``x1 .. xn`` for the point and ``x{n+1} .. x{n+N}``
for the parameter ``t``.
"""

from __future__ import annotations

import numpy as np

from .expr import evaluate, parse
from .surfaces import SurfaceMap, WSpec

# W = sum_alpha t^alpha X_alpha; fields are one expression per coordinate.
WSPECS = {
    "translate": {"N": 1, "n": 1, "terms": [{"alpha": [1], "field": ["1"]}]},
    "dilate": {"N": 1, "n": 1, "terms": [{"alpha": [1], "field": ["x1"]}]},
    "square": {"N": 1, "n": 1, "terms": [{"alpha": [2], "field": ["1"]}]},
    "plane": {"N": 2, "n": 2, "terms": [{"alpha": [1, 0], "field": ["1", "0"]},
                                        {"alpha": [0, 1], "field": ["0", "1"]}]},
    "heisenberg": {"N": 2, "n": 3, "terms": [{"alpha": [1, 0], "field": ["1", "0", "2*x2"]},
                                             {"alpha": [0, 1], "field": ["0", "1", "-2*x1"]}]},
    "grushin-curve": {"N": 1, "n": 2, "terms": [{"alpha": [1], "field": ["1", "0"]},
                                                {"alpha": [2], "field": ["0", "x1"]}]},
    "mixed": {"N": 2, "n": 2, "terms": [{"alpha": [1, 0], "field": ["1", "0"]},
                                        {"alpha": [0, 1], "field": ["0", "x1"]},
                                        {"alpha": [1, 1], "field": ["0", "1"]}]},
    "quadratic-curve": {"N": 1, "n": 2, "terms": [{"alpha": [1], "field": ["1", "0"]},
                                                  {"alpha": [2], "field": ["0", "x1^2"]}]},
    "scaled-drift": {"N": 2, "n": 1, "terms": [{"alpha": [1, 0], "field": ["1"]},
                                               {"alpha": [0, 2], "field": ["x1"]}]},
    "three-param": {"N": 3, "n": 2, "terms": [{"alpha": [1, 0, 0], "field": ["1", "0"]},
                                              {"alpha": [0, 1, 0], "field": ["0", "1"]},
                                              {"alpha": [0, 0, 1], "field": ["x2", "0"]}]},
}

# Closed-form surfaces; "w" is the exactly known generator where available.
SURFACES = {
    "translate": {"N": 1, "n": 1, "forward": ["x1+x2"], "inverse": ["x1-x2"], "w": "translate"},
    "square": {"N": 1, "n": 1, "forward": ["x1+0.5*x2^2"], "inverse": ["x1-0.5*x2^2"], "w": "square"},
    "exp-scale": {"N": 1, "n": 1, "forward": ["x1*exp(x2)"], "inverse": ["x1*exp(-x2)"], "w": "dilate"},
    "bilinear": {"N": 2, "n": 1, "forward": ["x1-x2*x3"], "inverse": ["x1+x2*x3"],
                 "w_inline": {"N": 2, "n": 1, "terms": [{"alpha": [1, 1], "field": ["-2"]}]}},
    "parabola": {"N": 1, "n": 2, "forward": ["x1+x3", "x2+x3^2"], "inverse": ["x1-x3", "x2-x3^2"],
                 "w_inline": {"N": 1, "n": 2, "terms": [{"alpha": [1], "field": ["1", "0"]},
                                                        {"alpha": [2], "field": ["0", "2"]}]}},
    "shear": {"N": 1, "n": 2, "forward": ["x1+x3", "x2+x1*x3"], "inverse": ["x1-x3", "x2-(x1-x3)*x3"],
              "w_inline": {"N": 1, "n": 2, "terms": [{"alpha": [1], "field": ["1", "x1"]},
                                                     {"alpha": [2], "field": ["0", "-1"]}]}},
    "horizontal": {"N": 1, "n": 2, "forward": ["x1+x3", "x2"], "inverse": ["x1-x3", "x2"]},
    "cubic": {"N": 1, "n": 2, "forward": ["x1", "x2+x3^3"], "inverse": ["x1", "x2-x3^3"]},
    "flat-translate": {"N": 1, "n": 1, "forward": ["x1-flat(x2)"], "inverse": ["x1+flat(x2)"]},
}

# (surface reference, base point, expected curvature verdict)
CURVATURE_CASES = [
    ({"catalog": "translate"}, [0.0], True),
    ({"catalog": "square"}, [0.0], True),
    ({"catalog": "bilinear"}, [0.0], True),
    ({"catalog": "parabola"}, [0.0, 0.0], True),
    ({"catalog": "shear"}, [0.0, 0.0], True),
    ({"wspec": "heisenberg"}, [0.0, 0.0, 0.0], True),
    ({"catalog": "horizontal"}, [0.0, 0.0], False),
    ({"catalog": "cubic"}, [0.0, 0.0], False),
    ({"catalog": "exp-scale"}, [0.0], False),
]

CHARTS = {
    "constant": {"fields": [["1", "0"], ["0", "1"]], "x0": [0.0, 0.0], "det_bound": 4.0},
    "grushin": {"fields": [["1", "0"], ["0", "x1"]], "x0": [1.0, 0.0], "det_bound": 4.0},
    "heisenberg": {"fields": [["1", "0", "2*x2"], ["0", "1", "-2*x1"], ["0", "0", "-4"]],
                   "degrees": [[1, 0], [0, 1], [1, 1]],
                   "delta": [0.5, 0.25], "x0": [0.0, 0.0, 0.0], "det_bound": 4.0},
}


def wspec(ref) -> WSpec:
    """A :class:`WSpec` from a catalog name or an inline JSON dict."""
    d = WSPECS[ref] if isinstance(ref, str) else ref
    if isinstance(ref, str):
        d = dict(d, name=ref)
    return WSpec.from_json(d)


def _closed_evaluator(texts, N, n):
    exprs = [parse(s, n + N) for s in texts]

    def f(t, x):
        X = np.concatenate([x, t], axis=-1)
        return np.stack([evaluate(e, X, n + N) * np.ones(X.shape[:-1]) for e in exprs], axis=-1)
    return f


def closed_surface(d: dict, name: str = "gamma") -> SurfaceMap:
    """A closed-form :class:`SurfaceMap` from ``forward`` (and optional ``inverse``) texts."""
    N, n = int(d["N"]), int(d["n"])
    if len(d["forward"]) != n:
        raise ValueError(f"forward needs {n} expressions")
    fwd = _closed_evaluator(d["forward"], N, n)
    inv = _closed_evaluator(d["inverse"], N, n) if d.get("inverse") else None
    return SurfaceMap.closed_form(N, n, fwd, inv, name=name, rho=float(d.get("rho", 1.0)))


def exact_w(name: str) -> WSpec | None:
    """The known generator of a catalog surface, if recorded."""
    d = SURFACES[name]
    if "w" in d:
        return wspec(d["w"])
    if "w_inline" in d:
        return WSpec.from_json(dict(d["w_inline"], name=name))
    return None


def surface(ref, ode_tol: float = 1e-10) -> SurfaceMap:
    """Resolve a surface reference.

    ``ref`` is one of ``{"catalog": name}``, ``{"wspec": name}``,
    ``{"wspec": {...inline...}}`` or an inline closed form
    ``{"N", "n", "forward", "inverse"}``.
    """
    if "catalog" in ref:
        return closed_surface(SURFACES[ref["catalog"]], ref["catalog"])
    if "wspec" in ref:
        return SurfaceMap.from_wspec(wspec(ref["wspec"]), ode_tol=ode_tol)
    return closed_surface(ref, ref.get("name", "gamma"))


# Hand-classified polynomials p(s, t) given as (e, f, numerator, denominator).
# a, b are the smallest pure s- and t-exponents; in product mode p is bounded
# iff every exponent satisfies e/a + f/b >= 1, in flag mode (b <= a) iff
# every exponent satisfies e + f >= b.
NEWTON_CORPUS = [
    {"name": "s+t", "polynomial": [[1, 0, 1, 1], [0, 1, 1, 1]], "expect": "bounded", "witness": None},
    {"name": "s3+t3+st", "polynomial": [[3, 0, 1, 1], [0, 3, 1, 1], [1, 1, 1, 1]],
     "expect": "unbounded", "witness": [1, 1]},
    {"name": "s4+t2+st", "polynomial": [[4, 0, 1, 1], [0, 2, 1, 1], [1, 1, 1, 1]],
     "expect": "unbounded", "witness": [1, 1]},
    {"name": "s4+t2+st (flag)", "polynomial": [[4, 0, 1, 1], [0, 2, 1, 1], [1, 1, 1, 1]], "mode": "flag",
     "expect": "bounded", "witness": None},
    {"name": "st", "polynomial": [[1, 1, 1, 1]], "expect": "unbounded_extended", "witness": [1, 1]},
    {"name": "s2+t2-3/2st", "polynomial": [[2, 0, 1, 1], [0, 2, 1, 1], [1, 1, -3, 2]],
     "expect": "bounded", "witness": None},
    {"name": "s2+t3+st", "polynomial": [[2, 0, 1, 1], [0, 3, 1, 1], [1, 1, 1, 1]],
     "expect": "unbounded", "witness": [1, 1]},
    {"name": "s+t2/3+st", "polynomial": [[1, 0, 1, 1], [0, 2, 1, 3], [1, 1, 1, 1]],
     "expect": "bounded", "witness": None},
    {"name": "s3+t3+s2t2", "polynomial": [[3, 0, 1, 1], [0, 3, 1, 1], [2, 2, 5, 7]],
     "expect": "bounded", "witness": None},
    {"name": "s3+t3+st2", "polynomial": [[3, 0, 1, 1], [0, 3, 1, 1], [1, 2, 1, 1]],
     "expect": "bounded", "witness": None},
    {"name": "s4+t4+st2+s2t", "polynomial": [[4, 0, 1, 1], [0, 4, 1, 1], [1, 2, 1, 1], [2, 1, -1, 2]],
     "expect": "unbounded", "witness": [1, 2]},
    {"name": "s+st", "polynomial": [[1, 0, 1, 1], [1, 1, 1, 1]], "expect": "bounded", "witness": None},
    {"name": "s2+st", "polynomial": [[2, 0, 1, 1], [1, 1, 1, 1]], "expect": "unbounded_extended",
     "witness": [1, 1]},
]
