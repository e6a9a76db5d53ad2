"""Sample-point generation for residual checks.

Checks are evaluated at quasi-random (Halton) points inside a box; points
where an expression hits a domain error (vanishing denominator, log of a
non-positive value, ...) are skipped and counted, so a verdict can
distinguish "axiom fails" from "bad sample point".
"""

from __future__ import annotations

import numpy as np

from .expr import EvalError

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53)


def _halton_axis(n, base, offset=0):
    out = np.empty(n)
    for i in range(n):
        k = i + 1 + offset
        f, r = 1.0, 0.0
        while k > 0:
            f /= base
            r += f * (k % base)
            k //= base
        out[i] = r
    return out


def halton_points(n, dim, box=None, offset=0):
    """n quasi-random points in the given box (default [-1, 1]^dim)."""
    if dim == 0:
        return np.zeros((n, 0))
    if dim > len(_PRIMES):
        raise ValueError(f"dimension {dim} beyond supported Halton bases")
    cols = [_halton_axis(n, _PRIMES[d], offset) for d in range(dim)]
    pts = np.stack(cols, axis=1)
    if box is None:
        box = [(-1.0, 1.0)] * dim
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return lo + pts * (hi - lo)


def env_of(varnames, point):
    return dict(zip(varnames, point))


def evaluate_skipping(fn, points, report=None):
    """Apply fn to each point, skipping EvalError points.

    Returns the list of (point, value) pairs that evaluated; appends the
    skipped indices to `report` if given.
    """
    kept = []
    for i, p in enumerate(points):
        try:
            kept.append((p, fn(p)))
        except EvalError:
            if report is not None:
                report.append(i)
    return kept
