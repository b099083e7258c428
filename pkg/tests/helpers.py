"""Shared oracles: central finite differences and error metrics."""

import numpy as np


def rel_err(a, b):
    """Max absolute difference normalized by the overall gradient scale."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(np.max(np.abs(a), initial=0.0), np.max(np.abs(b), initial=0.0), 1e-12)
    return float(np.max(np.abs(a - b), initial=0.0) / scale)


def numerical_grad(f, x, h=1e-6):
    """Central finite differences of a scalar function, elementwise."""
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    flat, gf = x.ravel(), g.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        gf[i] = (fp - fm) / (2.0 * h)
    return g
