"""Independent reference computations used to pin expected test values.

Everything here is deliberately naive: linear programming over the full
coupling polytope, dense quadrature, and direct summation.  The package under
test must agree with these to tight tolerances on small instances.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate, optimize


def lp_coupling_cost(x, wx, y, wy, rho):
    """Exact optimal coupling cost by LP over all couplings of two atomics."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    wx = np.asarray(wx, dtype=float)
    wy = np.asarray(wy, dtype=float)
    n, m = x.size, y.size
    cost = (np.abs(x[:, None] - y[None, :]) ** rho).ravel()
    a_eq = []
    for i in range(n):
        row = np.zeros((n, m))
        row[i, :] = 1.0
        a_eq.append(row.ravel())
    for j in range(m):
        row = np.zeros((n, m))
        row[:, j] = 1.0
        a_eq.append(row.ravel())
    b_eq = np.concatenate([wx / wx.sum(), wy / wy.sum()])
    res = optimize.linprog(cost, A_eq=np.array(a_eq), b_eq=b_eq, bounds=(0, None), method="highs")
    assert res.status == 0, res.message
    return float(res.fun)


def quantile_riemann_cost(q1, q2, rho, n=200_001):
    """Midpoint Riemann sum of |q1(u) - q2(u)|^rho over (0, 1)."""
    u = (np.arange(n) + 0.5) / n
    return float(np.mean(np.abs(q1(u) - q2(u)) ** rho))


def quad_moment(density, lo, hi, q):
    """Adaptive quadrature of |x|^q against a density on [lo, hi]."""
    val, err = integrate.quad(lambda t: np.abs(t) ** q * density(t), lo, hi, limit=400)
    assert err < 1e-9
    return val


def quad_mean(density, lo, hi, phi):
    val, err = integrate.quad(lambda t: phi(t) * density(t), lo, hi, limit=400)
    assert err < 1e-9
    return val
