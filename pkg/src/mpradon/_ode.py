"""Batched classical RK4 with step halving."""

from __future__ import annotations

import numpy as np


class IntegrationError(RuntimeError):
    """Raised when the solution leaves the domain or the step size collapses."""

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


def rk4_fixed(f, y0, s0, s1, steps):
    """``steps`` RK4 steps for ``y' = f(s, y)`` from ``s0`` to ``s1`` (batched ``y``)."""
    h = (s1 - s0) / steps
    y = np.array(y0, dtype=float)
    s = s0
    for _ in range(steps):
        k1 = f(s, y)
        k2 = f(s + h / 2, y + h / 2 * k1)
        k3 = f(s + h / 2, y + h / 2 * k2)
        k4 = f(s + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        s = s0 + (s1 - s0) * (_ + 1) / steps
    return y


def rk4_halving(f, y0, s0=0.0, s1=1.0, tol=1e-10, start=4, max_steps=2**16, box=None):
    """Integrate with RK4, doubling the step count until two successive results agree.

    The error estimate ``|y_{2n} - y_n| / 15`` (maximum over the batch) must
    fall below ``tol``.  The same step count is used for every trajectory of
    the batch, so results are smooth functions of the initial data and of
    parameters captured by ``f``.

    Returns
    -------
    y : ndarray
    info : dict with ``steps`` and ``error``.
    """
    n = start
    prev = rk4_fixed(f, y0, s0, s1, n)
    _check(prev, box, y0)
    while True:
        n *= 2
        if n > max_steps:
            raise IntegrationError(f"step-size collapse: {max_steps} steps did not reach tol={tol}", prev)
        cur = rk4_fixed(f, y0, s0, s1, n)
        _check(cur, box, y0)
        err = float(np.max(np.abs(cur - prev))) / 15.0 if cur.size else 0.0
        if err <= tol:
            return cur, {"steps": n, "error": err}
        prev = cur


def _check(y, box, y0):
    if not np.all(np.isfinite(y)):
        raise IntegrationError("non-finite solution (domain exit)", y)
    if box is not None and np.any(np.abs(y) > box):
        raise IntegrationError(f"solution left the box |x| <= {box}", y)
