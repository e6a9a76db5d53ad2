"""Lie algebroid on a single coordinate chart, with pointwise axiom checks.

A chart-level algebroid is an anchor matrix rho[mu][i] of expressions in
the base variables x1..xm together with structure functions c[k][i][j]
(antisymmetric in i, j) for a chosen frame.  Sections are expression
valued, so brackets are exact; the residual operations below vanish (up
to float roundoff) exactly when the data satisfies the Leibniz rule, the
Jacobi identity and anchor multiplicativity.
"""

from __future__ import annotations

import json

import numpy as np

from . import expr as ex
from .expr import Expression, as_expr

DEFAULT_TOL = 1e-8


class DimensionError(ValueError):
    pass


def base_vars(m):
    return tuple(f"x{i + 1}" for i in range(m))


class SectionExpr:
    """Frame coefficients of a section: a tuple of rank-many Expressions."""

    __slots__ = ("comps",)

    def __init__(self, comps):
        self.comps = tuple(as_expr(c) for c in comps)

    def __len__(self):
        return len(self.comps)

    def __getitem__(self, k):
        return self.comps[k]

    def evaluate(self, env):
        return np.array([c.evaluate(env) for c in self.comps])

    def __add__(self, other):
        return SectionExpr([a + b for a, b in zip(self.comps, other.comps)])

    def scale(self, f):
        return SectionExpr([f * c for c in self.comps])


class ChartedAlgebroid:
    """Lie algebroid data on one chart.

    Parameters
    ----------
    base_dim : number of base coordinates m (variables x1..xm)
    rank : fiber rank n
    anchor : m x n nested sequence of Expression/str/number
    structure : either a full n x n x n nested sequence, or a dict
        {(i, j, k): Expression} with 0-based indices.  Only i < j entries
        are stored; the i > j values are derived by antisymmetry, and a
        nonzero diagonal entry is rejected.
    """

    def __init__(self, base_dim, rank, anchor, structure=None, varnames=None):
        self.base_dim = int(base_dim)
        self.rank = int(rank)
        self.vars = tuple(varnames) if varnames is not None else base_vars(self.base_dim)
        if len(self.vars) != self.base_dim:
            raise DimensionError("varnames must have base_dim entries")
        anchor = [[_coerce(e) for e in row] for row in anchor]
        if len(anchor) != self.base_dim or any(len(r) != self.rank for r in anchor):
            raise DimensionError("anchor must be base_dim x rank")
        self.anchor = anchor
        self._c = {}
        if structure is None:
            structure = {}
        if isinstance(structure, dict):
            items = structure.items()
            for (i, j, k), e in items:
                self._set_c(i, j, k, _coerce(e))
        else:
            n = self.rank
            for k in range(n):
                for i in range(n):
                    for j in range(n):
                        e = _coerce(structure[k][i][j])
                        if i < j:
                            self._set_c(i, j, k, e)

    def _set_c(self, i, j, k, e):
        n = self.rank
        if not (0 <= i < n and 0 <= j < n and 0 <= k < n):
            raise DimensionError(f"structure index ({i},{j},{k}) out of range")
        if i == j:
            raise ValueError("diagonal structure entries must be zero; omit them")
        if i > j:
            i, j, e = j, i, ex.neg(e)
        old = self._c.get((i, j, k))
        self._c[(i, j, k)] = e if old is None else old + e

    def c(self, i, j, k):
        """Structure function c^k_{ij} as an Expression."""
        if i == j:
            return ex.ZERO
        if i < j:
            return self._c.get((i, j, k), ex.ZERO)
        return ex.neg(self._c.get((j, i, k), ex.ZERO))

    # -- pointwise data ----------------------------------------------------

    def env(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.base_dim,):
            raise DimensionError(
                f"point has shape {x.shape}, chart has dimension {self.base_dim}")
        return dict(zip(self.vars, x))

    def anchor_at(self, x):
        env = self.env(x)
        return np.array([[e.evaluate(env) for e in row] for row in self.anchor])

    def structure_at(self, x):
        env = self.env(x)
        n = self.rank
        C = np.zeros((n, n, n))
        for (i, j, k), e in self._c.items():
            v = e.evaluate(env)
            C[k, i, j] = v
            C[k, j, i] = -v
        return C

    def anchor_apply(self, x, xi):
        """rho(x) applied to a fiber vector: returns a tangent m-vector."""
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (self.rank,):
            raise DimensionError(f"fiber vector has shape {xi.shape}, rank is {self.rank}")
        return self.anchor_at(x) @ xi

    # -- symbolic operations ----------------------------------------------

    def anchor_field(self, section):
        """rho(alpha) as an m-tuple of Expressions."""
        out = []
        for mu in range(self.base_dim):
            acc = ex.ZERO
            for i in range(self.rank):
                acc = acc + self.anchor[mu][i] * section[i]
            out.append(acc)
        return tuple(out)

    def anchor_derivative(self, section, f):
        """rho(alpha) applied to a scalar Expression f."""
        acc = ex.ZERO
        rho = self.anchor_field(section)
        for mu, v in enumerate(self.vars):
            acc = acc + rho[mu] * f.diff(v)
        return acc

    def bracket_sections(self, alpha, beta):
        """[alpha, beta] built symbolically in the chart frame."""
        n = self.rank
        out = []
        for k in range(n):
            acc = ex.ZERO
            for i in range(n):
                for j in range(n):
                    cij = self.c(i, j, k)
                    if cij is ex.ZERO:
                        continue
                    acc = acc + cij * alpha[i] * beta[j]
            acc = acc + self.anchor_derivative(alpha, beta[k])
            acc = acc - self.anchor_derivative(beta, alpha[k])
            out.append(acc)
        return SectionExpr(out)

    # -- residuals ----------------------------------------------------------

    def leibniz_residual(self, alpha, beta, f, x):
        """[alpha, f beta] - f [alpha, beta] - (rho(alpha) f) beta at x."""
        f = as_expr(f)
        lhs = self.bracket_sections(alpha, beta.scale(f))
        rhs = self.bracket_sections(alpha, beta).scale(f)
        corr = beta.scale(self.anchor_derivative(alpha, f))
        env = self.env(x)
        return lhs.evaluate(env) - rhs.evaluate(env) - corr.evaluate(env)

    def jacobi_residual(self, alpha, beta, gamma, x):
        s1 = self.bracket_sections(self.bracket_sections(alpha, beta), gamma)
        s2 = self.bracket_sections(self.bracket_sections(beta, gamma), alpha)
        s3 = self.bracket_sections(self.bracket_sections(gamma, alpha), beta)
        env = self.env(x)
        return s1.evaluate(env) + s2.evaluate(env) + s3.evaluate(env)

    def anchor_morphism_residual(self, alpha, beta, x):
        """rho([alpha, beta]) - [rho alpha, rho beta] as vector fields, at x."""
        br = self.anchor_field(self.bracket_sections(alpha, beta))
        X = self.anchor_field(alpha)
        Y = self.anchor_field(beta)
        env = self.env(x)
        out = np.zeros(self.base_dim)
        for mu in range(self.base_dim):
            acc = ex.ZERO
            for nu, v in enumerate(self.vars):
                acc = acc + X[nu] * Y[mu].diff(v) - Y[nu] * X[mu].diff(v)
            out[mu] = br[mu].evaluate(env) - acc.evaluate(env)
        return out

    # -- serialization -------------------------------------------------------

    def to_json_dict(self):
        entries = []
        for (i, j, k), e in sorted(self._c.items(), key=lambda t: t[0]):
            entries.append({"i": i + 1, "j": j + 1, "k": k + 1,
                            "expr": ex.to_source(e)})
        return {
            "base_dim": self.base_dim,
            "rank": self.rank,
            "anchor": [[ex.to_source(e) for e in row] for row in self.anchor],
            "structure": entries,
        }

    @classmethod
    def from_json_dict(cls, d):
        struct = {}
        for ent in d.get("structure", []):
            struct[(ent["i"] - 1, ent["j"] - 1, ent["k"] - 1)] = ex.parse(ent["expr"])
        return cls(d["base_dim"], d["rank"], d["anchor"], struct)

    @classmethod
    def from_json(cls, text):
        return cls.from_json_dict(json.loads(text))


def _coerce(e):
    if isinstance(e, Expression):
        return e
    if isinstance(e, str):
        return ex.parse(e)
    return ex.Num(e)


# -- stock constructions -----------------------------------------------------

def tangent_algebroid(m):
    """TM on a chart of dimension m: identity anchor, zero bracket."""
    anchor = [[ex.ONE if mu == i else ex.ZERO for i in range(m)] for mu in range(m)]
    return ChartedAlgebroid(m, m, anchor, {})


def lie_algebra(structure, rank):
    """A Lie algebra as an algebroid over a point (base_dim 0)."""
    return ChartedAlgebroid(0, rank, [], structure)


def so3():
    """so(3): c^k_{ij} = epsilon_{ijk} over a point."""
    eps = {(0, 1, 2): ex.ONE, (1, 2, 0): ex.ONE, (0, 2, 1): ex.Num(-1.0)}
    return lie_algebra(eps, 3)


def random_polynomial_section(rank, varnames, rng, degree=2, scale=1.0):
    """Section with random polynomial coefficients, for residual sampling."""
    comps = []
    for _ in range(rank):
        e = ex.Num(rng.uniform(-scale, scale))
        for v in varnames:
            e = e + ex.Num(rng.uniform(-scale, scale)) * ex.Var(v)
            if degree >= 2:
                e = e + ex.Num(rng.uniform(-scale, scale) / 2.0) * ex.Var(v) * ex.Var(v)
        comps.append(e)
    return SectionExpr(comps)
