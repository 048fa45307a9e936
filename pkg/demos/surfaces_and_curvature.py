"""Surfaces, their generators W, and the curvature condition.

A surface gamma_t(x) with gamma_0 = id is determined by its generator
W(t, x) = d/de|_{e=1} gamma_{et}(gamma_t^{-1}(x)), and conversely gamma is
recovered from W by solving an ODE.  Curvature asks whether the Taylor
fields of W and their brackets span the tangent space.
"""
import numpy as np

from mpradon import catalog
from mpradon.surfaces import SurfaceMap, curvature_check, leaf_membership, taylor_fields, w_from_gamma

rng = np.random.default_rng(0)

# Heisenberg translations: W = s X + t Y.  Integrate, then differentiate back.
w = catalog.wspec("heisenberg")
g = SurfaceMap.from_wspec(w)
t = rng.uniform(-0.5, 0.5, size=(5, 2))
x = rng.uniform(-0.5, 0.5, size=(5, 3))
print("gamma_t(x) for the first sample:", g(t, x)[0])
want = t[:, :1] * w.terms[(1, 0)](x) + t[:, 1:] * w.terms[(0, 1)](x)
print("max |W(gamma) - W| = %.2e" % np.max(np.abs(w_from_gamma(g, t, x) - want)))

# x - s t has a single Taylor field, X_(1,1) = -2 d/dx.
tf = taylor_fields(catalog.surface({"catalog": "bilinear"}), order=2, x_points=np.zeros((1, 1)))
print("Taylor fields of x - st:", {a: v.ravel().round(6).tolist() for a, v in tf.values.items() if a in tf.nonzero()})

print("\n%-12s %-6s %-6s" % ("surface", "CZ", "CJ"))
for ref, x0, _ in catalog.CURVATURE_CASES:
    s = catalog.surface(ref)
    name = ref.get("catalog") or ref.get("wspec")
    print("%-12s %-6s %-6s" % (name, curvature_check(s, x0, "CZ").status, curvature_check(s, x0, "CJ").status))

# x - exp(-1/t^2): every Taylor field vanishes, yet the point moves.
out = leaf_membership(catalog.surface({"catalog": "flat-translate"}), [0.0], [[0.5], [0.8]])
print("\nflat perturbation: rank %d, distance from leaf %.3g -> %s" % (out["rank"], out["max_distance"], out["status"]))
