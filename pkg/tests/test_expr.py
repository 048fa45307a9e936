import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from mpradon.expr import ParseError, evaluate, flat, parse, solve_constant_combination, symbols, to_text


def test_parse_basic_grammar():
    x1, x2 = symbols(2)
    assert parse("2*x1^2 - x2", 2) == 2 * x1**2 - x2
    assert sp.expand(parse("-(x1+1)*x2", 2)) == sp.expand(-(x1 + 1) * x2)
    assert parse("x1/2 + 3/x2", 2) == x1 / 2 + 3 / x2
    assert parse("exp(x1)", 1) == sp.exp(x1)


@pytest.mark.parametrize("bad", ["", "x3", "x1 +", "foo(x1)", "x1 / 0", "x1^0.5", "(x1"])
def test_parse_errors(bad):
    with pytest.raises(ParseError):
        parse(bad, 2)


def test_round_trip_text():
    e = parse("x1^3 - 2*x1*x2 + 0.5", 2)
    assert sp.simplify(parse(to_text(e), 2) - e) == 0


def test_round_trip_flat_derivative():
    (x1,) = symbols(1)
    d = sp.diff(flat(x1), x1)
    assert sp.simplify(parse(to_text(d), 1) - d) == 0


def test_flat_vanishes_to_all_orders():
    (x1,) = symbols(1)
    f = flat(x1)
    assert f.subs(x1, 0) == 0
    for k in range(1, 4):
        assert sp.limit(sp.diff(sp.exp(-1 / x1**2), x1, k), x1, 0) == 0
    vals = evaluate(f, np.array([[0.0], [1.0], [-0.5]]))
    assert vals[0] == 0.0
    assert vals[1] == pytest.approx(np.exp(-1.0))
    assert vals[2] == pytest.approx(np.exp(-4.0))


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_evaluate_matches_sympy(a, b):
    x1, x2 = symbols(2)
    e = parse("x1^2*x2 - 3*x2 + exp(x1)", 2)
    got = evaluate(e, np.array([a, b]))
    assert got == pytest.approx(float(e.subs({x1: a, x2: b})), rel=1e-12, abs=1e-12)


def test_solve_constant_combination_exact():
    x1, x2, x3 = symbols(3)
    X = (1, 0, 2 * x2)
    Y = (0, 1, -2 * x1)
    T = (0, 0, -4)
    sol = solve_constant_combination((0, 0, 1), [X, Y, T])
    assert [sp.nsimplify(c) for c in sol] == [0, 0, sp.Rational(-1, 4)]


def test_solve_constant_combination_none():
    x1, x2 = symbols(2)
    assert solve_constant_combination((0, x1), [(0, 1)]) is None
