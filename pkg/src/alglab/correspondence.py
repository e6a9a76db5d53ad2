"""Path correspondence between T*M + R and the cotangent algebroid of the
homogeneous chart on M x R.

A path (a1, a0) over gamma1 for the rank-(m+1) algebroid of a Jacobi chart
maps to the path exp(gamma0) (a1, a0) over (gamma1, gamma0), where

    gamma0(t) = s - int_0^t iota(E) a1 dt.

Cumulative trapezoid quadrature is used for gamma0 so the two directions
invert each other exactly on the grid.  The functional

    r(a) = - int_0^1 iota(E(gamma1)) a1 dt = gamma0(1) - gamma0(0)

is additive under concatenation and invariant under the equivalence
decided by the companion-equation solver.
"""

from __future__ import annotations

import numpy as np

from .jacobi import cotangent_algebroid, jacobi_algebroid, poissonize
from .paths import (HomotopySheet, SampledPath, apath_residual,
                    equivalence_check, equivalence_tolerance)


class CorrespondenceError(ValueError):
    pass


def _E_on_grid(J, base_points):
    shape = base_points.shape[:-1]
    cols = [base_points[..., d].ravel() for d in range(J.dim)]
    out = np.zeros(shape + (J.dim,))
    flat = out.reshape(-1, J.dim)
    for nu in range(J.dim):
        flat[:, nu] = J.E[nu].compiled(J.vars)(*cols)
    return out


def iota_E_values(J, p):
    """iota(E(gamma1(t))) a1(t) on the nodes."""
    if p.rank != J.dim + 1 or p.base_dim != J.dim:
        raise CorrespondenceError("path does not match the Jacobi chart")
    E = _E_on_grid(J, p.base)
    return np.einsum("pn,pn->p", E, p.fiber[:, :J.dim])


def _cumtrapz(vals, N):
    dt = 1.0 / N
    inc = 0.5 * (vals[1:] + vals[:-1]) * dt
    return np.concatenate([[0.0], np.cumsum(inc)])


def to_poissonization(J, p, s=0.0):
    """JPath -> PPath: gamma0 by cumulative trapezoid, fibers scaled by
    exp(gamma0)."""
    vals = iota_E_values(J, p)
    gamma0 = s - _cumtrapz(vals, p.N)
    base = np.concatenate([p.base, gamma0[:, None]], axis=1)
    fiber = np.exp(gamma0)[:, None] * p.fiber
    return SampledPath(base, fiber)


def from_poissonization(J, q, tol=1e-3):
    """PPath -> (JPath, s); raises when gamma0 is inconsistent with the
    quadrature of iota(E) a1 (the path is then not an A-path upstairs)."""
    m = J.dim
    if q.base_dim != m + 1 or q.rank != m + 1:
        raise CorrespondenceError("path does not match the homogeneous chart")
    gamma0 = q.base[:, m]
    fiber = np.exp(-gamma0)[:, None] * q.fiber
    p = SampledPath(q.base[:, :m].copy(), fiber)
    s = float(gamma0[0])
    expected = s - _cumtrapz(iota_E_values(J, p), p.N)
    defect = float(np.abs(gamma0 - expected).max())
    if defect > tol:
        raise CorrespondenceError(
            f"gamma0 inconsistent with iota(E) a1 quadrature (defect {defect:.3e})")
    return p, s, defect


def r_functional(J, p):
    """r(a) = -trapezoid of iota(E) a1; equals gamma0(1) - gamma0(0)."""
    vals = iota_E_values(J, p)
    return float(-_cumtrapz(vals, p.N)[-1])


def jpath_residual(J, p):
    return apath_residual(jacobi_algebroid(J), p)


def ppath_residual(J, q):
    return apath_residual(cotangent_algebroid(poissonize(J)), q)


def to_poissonization_sheet(J, sheet, s=0.0):
    """Slice-wise transform with a common starting value gamma0(eps, 0) = s."""
    slices = [to_poissonization(J, sheet.slice(k), s) for k in range(sheet.K + 1)]
    base = np.stack([q.base for q in slices])
    fiber = np.stack([q.fiber for q in slices])
    return HomotopySheet(base, fiber)


def homotopy_correspondence_check(J, sheet, s=0.0, tol=None):
    """Equivalence verdict downstairs (T*M + R) vs upstairs (T*(M x R)).

    Returns both verdict dicts and whether they agree; the correspondence
    preserves equivalence classes, so disagreement flags a defect.
    """
    if tol is None:
        tol = equivalence_tolerance(sheet.N, sheet.K)
    A_j = jacobi_algebroid(J)
    A_p = cotangent_algebroid(poissonize(J))
    down = equivalence_check(A_j, sheet, tol=tol)
    up_sheet = to_poissonization_sheet(J, sheet, s)
    up = equivalence_check(A_p, up_sheet, tol=tol)
    return {
        "jacobi_side": down,
        "poisson_side": up,
        "agree": down["equivalent"] == up["equivalent"],
    }
