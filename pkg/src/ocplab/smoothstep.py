"""An infinitely smooth step: 0 for t <= 0, 1 for t >= 1, C^inf in between.

S(t) = f(t) / (f(t) + f(1 - t)) with f(t) = exp(-1/t), which simplifies to a
logistic in u(t) = 1/(1 - t) - 1/t. All derivatives vanish at t = 0 and t = 1,
so cutoffs built from S glue smoothly to their constant plateaus.

Derivatives up to third order are hand-chained through the logistic; they are
exercised against finite differences in the test suite.
"""

import numpy as np


def _inner_mask(t):
    t = np.asarray(t, dtype=float)
    return t, (t > 0.0) & (t < 1.0)


def value(t):
    t, inside = _inner_mask(t)
    out = np.where(t >= 1.0, 1.0, 0.0)
    ts = np.where(inside, t, 0.5)
    g = 1.0 / ts - 1.0 / (1.0 - ts)
    s = 1.0 / (1.0 + np.exp(np.clip(g, -700.0, 700.0)))
    return np.where(inside, s, out)


def derivative(t, order=1):
    """d^order S / dt^order, for order in {1, 2, 3}."""
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    t, inside = _inner_mask(t)
    ts = np.where(inside, t, 0.5)
    om = 1.0 - ts
    g = 1.0 / ts - 1.0 / om
    s = 1.0 / (1.0 + np.exp(np.clip(g, -700.0, 700.0)))
    # u = -g, so S = logistic(u)
    u1 = 1.0 / ts**2 + 1.0 / om**2
    u2 = -2.0 / ts**3 + 2.0 / om**3
    u3 = 6.0 / ts**4 + 6.0 / om**4
    s1 = s * (1.0 - s)
    if order == 1:
        res = s1 * u1
    else:
        s2 = s1 * (1.0 - 2.0 * s)
        if order == 2:
            res = s2 * u1**2 + s1 * u2
        else:
            s3 = s1 * (1.0 - 6.0 * s + 6.0 * s**2)
            res = s3 * u1**3 + 3.0 * s2 * u1 * u2 + s1 * u3
    res = np.where(np.isfinite(res), res, 0.0)
    return np.where(inside, res, 0.0)
