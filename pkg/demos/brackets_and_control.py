"""Lie brackets, generated lists, and when a list controls a field.

The Heisenberg fields X = d/dx + 2y d/dt and Y = d/dy - 2x d/dt bracket to
-4 d/dt.  With formal degrees (1,0), (0,1) the bracket gets degree (1,1)
and the three fields form a closed list.  Control asks for bounded
coefficients in delta^{d0} X0 = sum c_l delta^{d_l} X_l as delta -> 0.
"""
import numpy as np

from mpradon.dilations import ParamLattice
from mpradon.expr import solve_constant_combination
from mpradon.vfields import DegreedField, SamplingPlan, VField, bracket, check_control, generate_list

X = VField.parse(["1", "0", "2*x2"])
Y = VField.parse(["0", "1", "-2*x1"])
print("[X, Y] =", bracket(X, Y).to_text())

rep = generate_list([DegreedField(X, [1, 0]), DegreedField(Y, [0, 1])], 3)
for m in rep.members:
    print("  word %-8s degree %-8s field %s" % (m.word, [str(c) for c in m.degree.components], m.field.to_text()))
print("closed under brackets:", rep.closed)

dt = VField.parse(["0", "0", "1"])
coef = solve_constant_combination(dt.coeffs, [m.field.coeffs for m in rep.members])
print("d/dt as a combination of the list:", [str(c) for c in coef])

plan = SamplingPlan(np.array([[0.0, 0.0, 0.0], [0.3, -0.2, 0.1]]))
cert = check_control(rep.members, DegreedField(dt, [1, 1]), ParamLattice("product", 2), plan)
print("control of d/dt over all (delta1, delta2):", cert.status, "max |c| = %.3g" % cert.max_sup())

# A flat coefficient breaks uniformity on the product set but not on the
# ordered set delta1 <= delta2 (a flag).
dx = DegreedField(VField.parse(["1", "0"]), [1, 0])
fdy = DegreedField(VField.parse(["0", "flat(x1)"]), [2, 0])
dy = DegreedField(VField.parse(["0", "1"]), [0, 1])
target = DegreedField(bracket(dx.field, fdy.field), [3, 0])
plan = SamplingPlan(np.array([[0.05, 0.0], [0.3, 0.0], [0.7, 0.1]]))
for name, lat in [("flag", ParamLattice("custom", 2, ((-1, 1, 0),))), ("product", ParamLattice("product", 2))]:
    c = check_control([dx, fdy, dy], target, lat, plan)
    print("%-8s %-5s max |c| = %.3g" % (name, c.status, c.max_sup()))
