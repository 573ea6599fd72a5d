"""Shared fixtures-by-function for the test modules."""

import numpy as np

FD_STEP = 1e-6


def domain_points(system, count=100, seed=0, inverse=False):
    """Seeded uniform points of the box where the (inverse) map is smooth at FD scale."""
    rng = np.random.default_rng(seed)
    lo, hi = system.box
    margin = 1e-3 * (hi - lo)
    apply = system.inverse_evaluate if inverse else system.evaluate
    jac = system.inverse_jacobian if inverse else system.jacobian
    out = []
    while len(out) < count:
        x = rng.uniform(lo + margin, hi - margin, size=(4 * count, system.dim))
        ok = ~np.isnan(apply(x)).any(axis=1)
        base = jac(x)
        for j in range(system.dim):
            for sign in (-1.0, 1.0):
                shifted = x.copy()
                shifted[:, j] += sign * FD_STEP
                # same smooth branch on both sides of the stencil
                ok &= np.isclose(jac(shifted), base).all(axis=(1, 2))
                ok &= ~np.isnan(apply(shifted)).any(axis=1)
        out.extend(x[ok])
    return np.asarray(out[:count])
