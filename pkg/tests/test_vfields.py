import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from mpradon.dilations import ParamLattice
from mpradon.expr import symbols
from mpradon.vfields import (DegreedField, SamplingPlan, VField, bracket, check_control, check_D,
                             generate_list, proportional)

X_H = VField.parse(["1", "0", "2*x2"])
Y_H = VField.parse(["0", "1", "-2*x1"])
T_H = VField.parse(["0", "0", "1"])


def test_heisenberg_bracket():
    assert bracket(X_H, Y_H) == T_H.scale(-4)
    assert bracket(X_H, T_H).is_zero()


def test_grushin_bracket():
    dx, xdy = VField.parse(["1", "0"]), VField.parse(["0", "x1"])
    assert bracket(dx, xdy) == VField.parse(["0", "1"])


def test_bracket_dimension_mismatch():
    with pytest.raises(ValueError):
        bracket(VField.parse(["1"]), X_H)


_poly = st.lists(st.integers(-2, 2), min_size=4, max_size=4)


def _field(cs):
    x1, x2 = symbols(2)
    return VField(2, (cs[0] + cs[1] * x1 * x2, cs[2] * x1**2 + cs[3] * x2))


@settings(max_examples=25, deadline=None)
@given(_poly, _poly, _poly)
def test_bracket_antisymmetry_and_jacobi(a, b, c):
    X, Y, Z = _field(a), _field(b), _field(c)
    assert (bracket(X, Y) + bracket(Y, X)).is_zero()
    jac = bracket(X, bracket(Y, Z)) + bracket(Y, bracket(Z, X)) + bracket(Z, bracket(X, Y))
    assert jac.is_zero()


def test_bracket_matches_numeric_commutator():
    # [X, Y] f = X(Y f) - Y(X f) for a test function
    x1, x2, x3 = symbols(3)
    f = x1**2 * x3 + sp.sin(x2)
    lhs = bracket(X_H, Y_H).apply(f)
    rhs = X_H.apply(Y_H.apply(f)) - Y_H.apply(X_H.apply(f))
    assert sp.simplify(lhs - rhs) == 0


def test_vfield_evaluation_shape():
    pts = np.array([[0.1, 0.2, 0.3], [1.0, -1.0, 0.0]])
    out = X_H(pts)
    assert out.shape == (2, 3)
    assert np.allclose(out[:, 2], 2 * pts[:, 1])


def test_proportional():
    assert proportional(X_H.scale(3), X_H)
    assert not proportional(X_H, Y_H)


def test_generate_list_heisenberg_closed():
    rep = generate_list([DegreedField(X_H, [1, 0]), DegreedField(Y_H, [0, 1])], 3)
    degs = [tuple(int(c) for c in m.degree.components) for m in rep.members]
    assert degs == [(1, 0), (0, 1), (1, 1)]
    assert rep.closed


def test_generate_list_grushin():
    dx, xdy = VField.parse(["1", "0"]), VField.parse(["0", "x1"])
    rep = generate_list([DegreedField(dx, [1]), DegreedField(xdy, [1])], 2)
    assert len(rep.members) == 3
    assert rep.members[2].field == VField.parse(["0", "1"])
    assert rep.closed


def test_generate_list_flat_not_closed():
    # [dx, flat(x) dy] keeps producing new fields; truncating the list leaves an
    # uncontrolled bracket
    dx, fdy = VField.parse(["1", "0"]), VField.parse(["0", "flat(x1)"])
    rep = generate_list([DegreedField(dx, [1, 0]), DegreedField(fdy, [0, 1])], 2)
    assert not rep.closed
    assert rep.failures


def test_generate_list_rejects_M0():
    with pytest.raises(ValueError):
        generate_list([DegreedField(X_H, [1, 0])], 0)


def test_degreed_field_rejects_zero_degree():
    with pytest.raises(ValueError):
        DegreedField(X_H, [0, 0])


def _heis_members():
    return [DegreedField(X_H, [1, 0]), DegreedField(Y_H, [0, 1]), DegreedField(T_H.scale(-4), [1, 1])]


def test_check_control_heisenberg_pass():
    plan = SamplingPlan(np.zeros((1, 3)), per_coord=5, smax=10.0)
    cert = check_control(_heis_members(), DegreedField(T_H, [1, 1]), ParamLattice("product", 2), plan)
    assert cert.status == "PASS"
    assert cert.max_sup() <= 0.25 + 1e-6


def test_check_D_heisenberg_pass():
    plan = SamplingPlan(np.array([[0.0, 0.0, 0.0], [0.3, 0.1, -0.2]]), per_coord=4, smax=8.0)
    out = check_D(_heis_members(), ParamLattice("product", 2), plan)
    assert out["status"] == "PASS"


def test_check_control_uncontrolled_fails():
    # d/dt of degree (1,1) is not controlled by X, Y alone (residual)
    plan = SamplingPlan(np.zeros((1, 3)), per_coord=4, smax=8.0)
    members = [DegreedField(X_H, [1, 0]), DegreedField(Y_H, [0, 1])]
    cert = check_control(members, DegreedField(T_H, [1, 1]), ParamLattice("product", 2), plan)
    assert cert.status == "FAIL"
    assert cert.max_residual > 1e-3


def _flag_fixture():
    dx = DegreedField(VField.parse(["1", "0"]), [1, 0])
    fdy = DegreedField(VField.parse(["0", "flat(x1)"]), [2, 0])
    dy = DegreedField(VField.parse(["0", "1"]), [0, 1])
    target = DegreedField(bracket(dx.field, fdy.field), [3, 0])
    plan = SamplingPlan(np.array([[0.05, 0.0], [0.3, 0.0], [0.7, 0.1]]))
    return [dx, fdy, dy], target, plan


def test_check_control_flag_versus_product():
    members, target, plan = _flag_fixture()
    flag = ParamLattice("custom", 2, ((-1, 1, 0),))
    assert check_control(members, target, flag, plan).status == "PASS"
    assert check_control(members, target, ParamLattice("product", 2), plan).status == "FAIL"


def test_check_control_monotone_in_bound():
    members, target, plan = _flag_fixture()
    prod = ParamLattice("product", 2)
    loose = check_control(members, target, prod, plan, bound=1e12)
    tight = check_control(members, target, prod, plan, bound=1.0)
    assert loose.status == "PASS" and tight.status == "FAIL"


def test_check_control_uncertified_with_few_deltas():
    members, target, _ = _flag_fixture()
    plan = SamplingPlan(np.array([[0.3, 0.0]]), deltas=np.array([[1.0, 1.0]]))
    assert check_control(members, target, ParamLattice("product", 2), plan).status == "UNCERTIFIED"
