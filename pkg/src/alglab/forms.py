"""Differential forms with Expression components on a coordinate chart.

Components are stored on strictly increasing index tuples.  Pullbacks are
computed symbolically by substitution plus the chain rule, so identities
like d(phi^* theta) = phi^*(d theta) hold exactly up to float roundoff.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from . import expr as ex
from .expr import as_expr


class Form:
    def __init__(self, dim, degree, comps=None):
        self.dim = dim
        self.degree = degree
        self.comps = {}
        if comps:
            for idx, e in comps.items():
                self[idx] = e

    def __setitem__(self, idx, e):
        idx, sign = _normalize(idx)
        if idx is None:
            return
        if len(idx) != self.degree:
            raise ValueError("index arity does not match form degree")
        e = as_expr(e) if sign > 0 else ex.neg(as_expr(e))
        old = self.comps.get(idx)
        self.comps[idx] = e if old is None else old + e

    def __getitem__(self, idx):
        idx, sign = _normalize(idx)
        if idx is None:
            return ex.ZERO
        e = self.comps.get(idx, ex.ZERO)
        return e if sign > 0 else ex.neg(e)

    def d(self, varnames):
        out = Form(self.dim, self.degree + 1)
        for idx, e in self.comps.items():
            for mu, v in enumerate(varnames):
                de = e.diff(v)
                if isinstance(de, ex.Num) and de.value == 0.0:
                    continue
                out[(mu,) + idx] = de
        return out

    def wedge(self, other):
        out = Form(self.dim, self.degree + other.degree)
        for i1, e1 in self.comps.items():
            for i2, e2 in other.comps.items():
                out[i1 + i2] = e1 * e2
        return out

    def scale(self, f):
        f = as_expr(f)
        return Form(self.dim, self.degree,
                    {idx: f * e for idx, e in self.comps.items()})

    def add(self, other):
        out = Form(self.dim, self.degree, dict(self.comps))
        for idx, e in other.comps.items():
            out[idx] = e
        return out

    def pullback(self, comp_exprs, src_vars, tgt_vars):
        """phi^* of this form, phi given by target-component expressions.

        comp_exprs[j] is the j-th target coordinate as an Expression in the
        source variables src_vars.
        """
        subs = dict(zip(tgt_vars, comp_exprs))
        jac = [[comp_exprs[j].diff(w) for w in src_vars] for j in range(len(tgt_vars))]
        p = len(src_vars)
        out = Form(p, self.degree)
        if self.degree == 0:
            raise ValueError("pullback of 0-forms: substitute directly")
        for idx, e in self.comps.items():
            coef = e.subst(subs)
            for jdx in combinations(range(p), self.degree):
                minor = _sym_det([[jac[i][w] for w in jdx] for i in idx])
                if isinstance(minor, ex.Num) and minor.value == 0.0:
                    continue
                out[jdx] = coef * minor
        return out

    def at(self, varnames, point):
        """Numeric components as a dict {idx: value}."""
        env = dict(zip(varnames, np.asarray(point, dtype=float)))
        return {idx: e.evaluate(env) for idx, e in self.comps.items()}

    def value_on(self, varnames, point, vectors):
        """Evaluate on `degree` tangent vectors at a point."""
        vals = self.at(varnames, point)
        vectors = [np.asarray(v, dtype=float) for v in vectors]
        total = 0.0
        for idx, c in vals.items():
            minor = np.array([[vec[i] for vec in vectors] for i in idx])
            total += c * np.linalg.det(minor)
        return total

    def max_abs_at(self, varnames, point):
        vals = self.at(varnames, point)
        if not vals:
            return 0.0
        return max(abs(v) for v in vals.values())


def _normalize(idx):
    if isinstance(idx, int):
        idx = (idx,)
    idx = tuple(idx)
    if len(set(idx)) != len(idx):
        return None, 0
    order = tuple(sorted(idx))
    sign = _perm_sign(idx)
    return order, sign


def _perm_sign(idx):
    sign = 1
    idx = list(idx)
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                sign = -sign
    return sign


def _sym_det(rows):
    k = len(rows)
    if k == 0:
        return ex.ONE
    if k == 1:
        return rows[0][0]
    if k == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    acc = ex.ZERO
    for j in range(k):
        entry = rows[0][j]
        if isinstance(entry, ex.Num) and entry.value == 0.0:
            continue
        minor = _sym_det([r[:j] + r[j + 1:] for r in rows[1:]])
        term = entry * minor
        acc = acc + term if j % 2 == 0 else acc - term
    return acc


def one_form(dim, comps):
    return Form(dim, 1, {(i,): as_expr(c) for i, c in enumerate(comps)
                         if not (isinstance(as_expr(c), ex.Num) and as_expr(c).value == 0.0)})


def sym_matrix_det(rows):
    """Symbolic determinant with zero pruning (cofactor expansion)."""
    return _sym_det(rows)


def sym_matrix_inverse(rows):
    """Symbolic inverse via the adjugate; returns (inv_rows, det)."""
    n = len(rows)
    det = _sym_det(rows)
    inv = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            sub = [[rows[r][c] for c in range(n) if c != j]
                   for r in range(n) if r != i]
            cof = _sym_det(sub)
            if (i + j) % 2 == 1:
                cof = ex.neg(cof)
            inv[j][i] = ex.div(cof, det)
    return inv, det
