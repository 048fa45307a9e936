"""Which translation-invariant polynomial surfaces give bounded operators?

For x -> x - p(s, t) the answer is read off the exponents of p: find the
smallest pure powers s^a and t^b, draw the line through (a, 0) and (0, b),
and ask whether every exponent of p lies on or above it.  This script runs
the hand-classified corpus, then watches the divergence happen numerically
for p = s^3 + t^3 + st.
"""
import numpy as np

from mpradon import catalog
from mpradon.decide import PolySurface, choose_rescaling, counterexample_multiplier, newton_verdict

print("%-20s %-8s %-20s %s" % ("p", "mode", "verdict", "offending exponents"))
for entry in catalog.NEWTON_CORPUS:
    p = PolySurface.from_quadruples(entry["polynomial"])
    v = newton_verdict(p, entry.get("mode", "product"))
    print("%-20s %-8s %-20s %s" % (entry["name"], v.mode, v.classification, v.witnesses))

# st sits below the line s^3 ... t^3, so the operator is unbounded.  The
# multiplier of the truncated kernels K_{tau, M} at the resonant frequency
# grows linearly in the number of scales M.
p = PolySurface.from_quadruples([[3, 0, 1, 1], [0, 3, 1, 1], [1, 1, 1, 1]])
tau = 2.0**20
r = choose_rescaling(p, tau, 16)
print("\nrescaling r = %g" % r)
prev = None
for M in (2, 4, 8, 16):
    m = abs(counterexample_multiplier(p, tau, M, rescale=r).value)
    print("M = %2d   |multiplier| = %.4g%s" % (M, m, "" if prev is None else "   ratio %.3f" % (m / prev)))
    prev = m

# For comparison, p = s + t is bounded: the same construction (with the
# witness (0, 1)) does not grow.
q = PolySurface.from_quadruples([[1, 0, 1, 1], [0, 1, 1, 1]])
rq = choose_rescaling(q, tau, 16, witness=(0, 1))
vals = [abs(counterexample_multiplier(q, tau, M, rescale=rq, witness=(0, 1)).value) for M in (4, 8, 16)]
print("\ncontrol p = s + t:", ["%.4g" % v for v in vals])
