"""Jacobi and Poisson structures on a chart.

A Jacobi chart is a pair (Lambda, E): an antisymmetric bivector and a
vector field, both with Expression components.  The defining identities

    [Lambda, Lambda] = 2 E ^ Lambda,      L_E Lambda = 0

are checked pointwise through exact symbolic derivatives.  The module
also builds the associated rank-(m+1) Lie algebroid on T*M + R, the
homogeneous Poisson chart on M x R (one extra coordinate, exponential
weight) and its inverse, and converts contact and locally conformal
symplectic data into Jacobi charts.

Schouten convention: for bivectors P, Q the bracket is the trivector

    [P, Q]^{ijk} = sum_l  P^{li} d_l Q^{jk} + P^{lj} d_l Q^{ki}
                        + P^{lk} d_l Q^{ij} + (P <-> Q),

so that [L, L](df, dg, dh) equals twice the Jacobiator of the induced
bracket.  With this normalization the chart (Lambda, E) produced by
`contact_to_jacobi` satisfies [Lambda, Lambda] = 2 E ^ Lambda on the
nose (verified in the tests on the standard contact form).
"""

from __future__ import annotations

import json
from itertools import combinations

import numpy as np

from . import expr as ex
from .algebroid import ChartedAlgebroid, base_vars
from .expr import EvalError, as_expr
from .forms import Form, one_form, sym_matrix_inverse
from .sampling import halton_points

DEFAULT_TOL = 1e-8


class DegenerateStructureError(ValueError):
    pass


class HomogeneityError(ValueError):
    pass


class Bivector:
    """Antisymmetric matrix of Expressions, stored on mu < nu."""

    def __init__(self, dim, entries=None):
        self.dim = dim
        self.entries = {}
        if entries:
            for (mu, nu), e in entries.items():
                self.set(mu, nu, e)

    def set(self, mu, nu, e):
        e = as_expr(e)
        if mu == nu:
            raise ValueError("diagonal bivector entries must be zero; omit them")
        if mu > nu:
            mu, nu, e = nu, mu, ex.neg(e)
        old = self.entries.get((mu, nu))
        self.entries[(mu, nu)] = e if old is None else old + e

    def __call__(self, mu, nu):
        if mu == nu:
            return ex.ZERO
        if mu < nu:
            return self.entries.get((mu, nu), ex.ZERO)
        return ex.neg(self.entries.get((nu, mu), ex.ZERO))

    def matrix_at(self, varnames, x):
        env = dict(zip(varnames, np.asarray(x, dtype=float)))
        L = np.zeros((self.dim, self.dim))
        for (mu, nu), e in self.entries.items():
            v = e.evaluate(env)
            L[mu, nu] = v
            L[nu, mu] = -v
        return L

    def scale(self, f):
        f = as_expr(f)
        return Bivector(self.dim, {k: f * e for k, e in self.entries.items()})

    def map_covector(self, omega):
        """sharp(L)(omega)^nu = sum_mu omega_mu L^{mu nu}, symbolically."""
        out = []
        for nu in range(self.dim):
            acc = ex.ZERO
            for mu in range(self.dim):
                acc = acc + omega[mu] * self(mu, nu)
            out.append(acc)
        return tuple(out)


class JacobiChart:
    def __init__(self, dim, Lambda, E=None, varnames=None):
        self.dim = int(dim)
        self.vars = tuple(varnames) if varnames is not None else base_vars(self.dim)
        if isinstance(Lambda, Bivector):
            self.Lambda = Lambda
        else:
            self.Lambda = Bivector(self.dim, Lambda or {})
        if E is None:
            E = [ex.ZERO] * self.dim
        self.E = tuple(as_expr(c) for c in E)
        if len(self.E) != self.dim:
            raise ValueError("E must have dim components")

    def env(self, x):
        return dict(zip(self.vars, np.asarray(x, dtype=float)))

    def is_poisson_data(self):
        return all(isinstance(c, ex.Num) and c.value == 0.0 for c in self.E)

    def default_points(self, n=50, box=None, offset=0):
        return halton_points(n, self.dim, box=box, offset=offset)

    def to_json_dict(self):
        lam = [{"mu": mu + 1, "nu": nu + 1, "expr": ex.to_source(e)}
               for (mu, nu), e in sorted(self.Lambda.entries.items())]
        return {"dim": self.dim,
                "lambda": lam,
                "e": [ex.to_source(c) for c in self.E]}

    @classmethod
    def from_json_dict(cls, d):
        lam = {}
        for ent in d.get("lambda", []):
            lam[(ent["mu"] - 1, ent["nu"] - 1)] = ex.parse(ent["expr"])
        E = [ex.parse(s) for s in d.get("e", ["0"] * d["dim"])]
        return cls(d["dim"], lam, E)

    @classmethod
    def from_json(cls, text):
        return cls.from_json_dict(json.loads(text))


class PoissonChart(JacobiChart):
    """Jacobi chart with E = 0, optionally homogeneous in one coordinate."""

    def __init__(self, dim, Lambda, varnames=None, homogeneity_var=None):
        super().__init__(dim, Lambda, None, varnames)
        if homogeneity_var is not None and homogeneity_var not in self.vars:
            raise ValueError(f"homogeneity coordinate {homogeneity_var!r} not in chart")
        self.homogeneity_var = homogeneity_var


class ContactChart:
    def __init__(self, dim, theta, varnames=None):
        self.dim = int(dim)
        if self.dim % 2 != 1:
            raise ValueError("contact charts have odd dimension")
        self.vars = tuple(varnames) if varnames is not None else base_vars(self.dim)
        self.theta = tuple(as_expr(c) for c in theta)
        if len(self.theta) != self.dim:
            raise ValueError("theta must have dim components")

    def env(self, x):
        return dict(zip(self.vars, np.asarray(x, dtype=float)))

    def theta_matrix(self):
        """C = d(theta) + theta theta^T, the invertible packaging of the
        contact data used for Reeb/bivector extraction."""
        n = self.dim
        D = [[self.theta[nu].diff(self.vars[mu]) - self.theta[mu].diff(self.vars[nu])
              for nu in range(n)] for mu in range(n)]
        return [[D[mu][nu] + self.theta[mu] * self.theta[nu]
                 for nu in range(n)] for mu in range(n)]

    def volume_check(self, x, tol=1e-12):
        """theta ^ (d theta)^n is a volume form iff det C is nonzero."""
        env = self.env(x)
        C = self.theta_matrix()
        M = np.array([[e.evaluate(env) for e in row] for row in C])
        return abs(np.linalg.det(M)) > tol

    def to_json_dict(self):
        return {"dim": self.dim, "theta": [ex.to_source(c) for c in self.theta]}

    @classmethod
    def from_json_dict(cls, d):
        return cls(d["dim"], [ex.parse(s) for s in d["theta"]])


# ---------------------------------------------------------------------------
# Schouten calculus

def schouten_bivector_sym(L1, L2, varnames):
    """[L1, L2] as a dict of trivector components on i < j < k."""
    dim = L1.dim
    out = {}

    def cyc(P, Q, i, j, k):
        acc = ex.ZERO
        for l in range(dim):
            acc = acc + P(l, i) * Q(j, k).diff(varnames[l])
            acc = acc + P(l, j) * Q(k, i).diff(varnames[l])
            acc = acc + P(l, k) * Q(i, j).diff(varnames[l])
        return acc

    for i, j, k in combinations(range(dim), 3):
        e = cyc(L1, L2, i, j, k) + cyc(L2, L1, i, j, k)
        out[(i, j, k)] = e
    return out


def schouten_bivector(L1, L2, varnames, x):
    """Coordinate Schouten bracket of two bivectors, evaluated at x."""
    env = dict(zip(varnames, np.asarray(x, dtype=float)))
    comps = schouten_bivector_sym(L1, L2, varnames)
    return {idx: e.evaluate(env) for idx, e in comps.items()}


def wedge_vector_bivector_sym(E, L):
    out = {}
    dim = L.dim
    for i, j, k in combinations(range(dim), 3):
        out[(i, j, k)] = E[i] * L(j, k) + E[j] * L(k, i) + E[k] * L(i, j)
    return out


def lie_derivative_bivector_sym(L, V, varnames):
    """(L_V L)^{mu nu} as a Bivector."""
    dim = L.dim
    out = Bivector(dim)
    for mu in range(dim):
        for nu in range(mu + 1, dim):
            acc = ex.ZERO
            for s in range(dim):
                acc = acc + V[s] * L(mu, nu).diff(varnames[s])
                acc = acc - L(s, nu) * V[mu].diff(varnames[s])
                acc = acc - L(mu, s) * V[nu].diff(varnames[s])
            out.set(mu, nu, acc)
    return out


def lie_derivative_bivector(L, V, varnames, x):
    env = dict(zip(varnames, np.asarray(x, dtype=float)))
    out = lie_derivative_bivector_sym(L, V, varnames)
    return out.matrix_at(varnames, x) if False else {
        k: e.evaluate(env) for k, e in out.entries.items()}


def jacobi_residuals_sym(J):
    """Symbolic ([L,L] - 2 E^L, L_E L) for a JacobiChart."""
    tri = schouten_bivector_sym(J.Lambda, J.Lambda, J.vars)
    wedge = wedge_vector_bivector_sym(J.E, J.Lambda)
    res3 = {idx: tri[idx] - ex.Num(2.0) * wedge[idx] for idx in tri}
    res2 = lie_derivative_bivector_sym(J.Lambda, J.E, J.vars)
    return res3, res2


def jacobi_residuals(J, x):
    """([Lambda,Lambda] - 2 E^Lambda, L_E Lambda) evaluated at x."""
    res3, res2 = jacobi_residuals_sym(J)
    env = J.env(x)
    tri = {idx: e.evaluate(env) for idx, e in res3.items()}
    biv = {idx: e.evaluate(env) for idx, e in res2.entries.items()}
    return tri, biv


def max_jacobi_residual(J, points, skipped=None):
    res3, res2 = jacobi_residuals_sym(J)
    worst = 0.0
    used = 0
    for x in points:
        env = J.env(x)
        try:
            vals = [e.evaluate(env) for e in res3.values()]
            vals += [e.evaluate(env) for e in res2.entries.values()]
        except EvalError:
            if skipped is not None:
                skipped.append(np.asarray(x))
            continue
        used += 1
        if vals:
            worst = max(worst, max(abs(v) for v in vals))
    if used == 0:
        raise EvalError("all sample points hit domain errors")
    return worst


def jacobi_bracket(J, f, g, x):
    """{f, g} = Lambda(df, dg) + f E(g) - g E(f) at x."""
    f, g = as_expr(f), as_expr(g)
    env = J.env(x)
    acc = ex.ZERO
    for mu in range(J.dim):
        for nu in range(J.dim):
            if mu == nu:
                continue
            acc = acc + J.Lambda(mu, nu) * f.diff(J.vars[mu]) * g.diff(J.vars[nu])
    Ef = _apply_field(J.E, f, J.vars)
    Eg = _apply_field(J.E, g, J.vars)
    acc = acc + f * Eg - g * Ef
    return acc.evaluate(env)


def _apply_field(V, f, varnames):
    acc = ex.ZERO
    for mu, v in enumerate(varnames):
        acc = acc + V[mu] * f.diff(v)
    return acc


def hamiltonian_vf(J, u):
    """X_u = u E + sharp(Lambda)(du), symbolically."""
    u = as_expr(u)
    du = [u.diff(v) for v in J.vars]
    sharp = J.Lambda.map_covector(du)
    return tuple(u * J.E[nu] + sharp[nu] for nu in range(J.dim))


def conformal_twist(J, u, check_points=None):
    """(u Lambda, u E + sharp(Lambda)(du)); u must not vanish on samples."""
    u = as_expr(u)
    if check_points is not None:
        for x in check_points:
            if abs(u.evaluate(J.env(x))) < 1e-12:
                raise DegenerateStructureError(
                    f"conformal factor vanishes at sample point {np.asarray(x)}")
    return JacobiChart(J.dim, J.Lambda.scale(u), hamiltonian_vf(J, u), J.vars)


def leaf_point_type(J, x, tol=1e-8):
    """'lcs-point' if E(x) lies in the image of sharp(Lambda)(x), else
    'contact-point' (least-squares rank test)."""
    env = J.env(x)
    L = J.Lambda.matrix_at(J.vars, x)
    Evec = np.array([c.evaluate(env) for c in J.E])
    # sharp(Lambda) maps omega to L^T omega; its image is the column space
    # of L^T, i.e. the row space of L.
    M = L.T
    sol, *_ = np.linalg.lstsq(M, Evec, rcond=None)
    resid = np.linalg.norm(M @ sol - Evec)
    return "lcs-point" if resid <= tol * (1.0 + np.linalg.norm(Evec)) else "contact-point"


# ---------------------------------------------------------------------------
# Associated Lie algebroids

def jacobi_algebroid(J):
    """The Lie algebroid on T*M + R in the frame {dx^1..dx^m, 1}.

    Anchor: rho(omega, f) = sharp(Lambda)(omega) + f E.
    Frame brackets (the R-component of [(dx^i,0),(dx^j,0)] is
    Lambda(dx^j, dx^i) = -Lambda^{ij}):

        [e_i, e_j] = sum_mu (d_mu Lambda^{ij} + E^j delta_{mu i}
                             - E^i delta_{mu j}) e_mu  - Lambda^{ij} e_R
        [e_R, e_i] = sum_mu (d_mu E^i) e_mu
    """
    m = J.dim
    vs = J.vars
    anchor = [[None] * (m + 1) for _ in range(m)]
    for mu in range(m):
        for i in range(m):
            anchor[mu][i] = J.Lambda(i, mu)
        anchor[mu][m] = J.E[mu]
    struct = {}
    for i in range(m):
        for j in range(i + 1, m):
            lam = J.Lambda(i, j)
            for mu in range(m):
                e = lam.diff(vs[mu])
                if mu == i:
                    e = e + J.E[j]
                if mu == j:
                    e = e - J.E[i]
                if not _is_zero(e):
                    struct[(i, j, mu)] = e
            if not _is_zero(lam):
                struct[(i, j, m)] = ex.neg(lam)
        # [e_i, e_R] = -[e_R, e_i] = -d(E^i)
        for mu in range(m):
            e = J.E[i].diff(vs[mu])
            if not _is_zero(e):
                struct[(i, m, mu)] = ex.neg(e)
    return ChartedAlgebroid(m, m + 1, anchor, struct, varnames=vs)


def cotangent_algebroid(P):
    """T*M for a Poisson chart: anchor sharp(Lambda), [dx^i,dx^j] = d Lambda^{ij}."""
    m = P.dim
    vs = P.vars
    anchor = [[P.Lambda(i, mu) for i in range(m)] for mu in range(m)]
    struct = {}
    for i in range(m):
        for j in range(i + 1, m):
            lam = P.Lambda(i, j)
            for mu in range(m):
                e = lam.diff(vs[mu])
                if not _is_zero(e):
                    struct[(i, j, mu)] = e
    return ChartedAlgebroid(m, m, anchor, struct, varnames=vs)


def _is_zero(e):
    return isinstance(e, ex.Num) and e.value == 0.0


# ---------------------------------------------------------------------------
# Poissonization

def poissonize(J, s_var="s"):
    """Homogeneous Poisson chart on M x R:

        Ltilde^{mu nu} = exp(-s) Lambda^{mu nu},
        Ltilde^{s nu}  = exp(-s) E^nu,

    so Ltilde + L_{d/ds} Ltilde = 0 identically.
    """
    if s_var in J.vars:
        raise ValueError(f"variable {s_var!r} already used by the chart")
    m = J.dim
    w = ex.call("exp", ex.neg(ex.Var(s_var)))
    entries = {}
    for (mu, nu), e in J.Lambda.entries.items():
        entries[(mu, nu)] = w * e
    for nu in range(m):
        if not _is_zero(J.E[nu]):
            # Ltilde^{s nu} = w E^nu; stored upper-triangular as (nu, s).
            entries[(nu, m)] = ex.neg(w * J.E[nu])
    return PoissonChart(m + 1, entries, varnames=J.vars + (s_var,),
                        homogeneity_var=s_var)


def homogeneity_residual_sym(P):
    """Ltilde + L_{d/ds} Ltilde as a Bivector (zero for homogeneous charts)."""
    if P.homogeneity_var is None:
        raise HomogeneityError("chart has no declared homogeneity coordinate")
    sidx = P.vars.index(P.homogeneity_var)
    Z = [ex.ONE if mu == sidx else ex.ZERO for mu in range(P.dim)]
    lie = lie_derivative_bivector_sym(P.Lambda, Z, P.vars)
    out = Bivector(P.dim)
    for (mu, nu), e in P.Lambda.entries.items():
        out.set(mu, nu, e)
    for (mu, nu), e in lie.entries.items():
        out.set(mu, nu, e)
    return out


def max_homogeneity_residual(P, points):
    res = homogeneity_residual_sym(P)
    worst = 0.0
    for x in points:
        env = dict(zip(P.vars, np.asarray(x, dtype=float)))
        for e in res.entries.values():
            worst = max(worst, abs(e.evaluate(env)))
    return worst


def depoissonize(P, tol=1e-8, check_points=None):
    """Invert `poissonize`: restrict exp(s) Ltilde to the zero section.

    Lambda^{mu nu} = (exp(s) Ltilde^{mu nu})|_{s=0} and
    E = sharp(exp(s) Ltilde)(ds)|_{s=0}.
    """
    if P.homogeneity_var is None:
        raise HomogeneityError("chart has no declared homogeneity coordinate")
    if check_points is None:
        check_points = halton_points(20, P.dim)
    worst = max_homogeneity_residual(P, check_points)
    if worst > tol:
        raise HomogeneityError(
            f"homogeneity residual {worst:.3e} exceeds tolerance {tol:.1e}")
    sidx = P.vars.index(P.homogeneity_var)
    sub = {P.homogeneity_var: ex.ZERO}
    es = ex.call("exp", ex.Var(P.homogeneity_var))
    keep = [mu for mu in range(P.dim) if mu != sidx]
    lam = {}
    for a, mu in enumerate(keep):
        for b in range(a + 1, len(keep)):
            nu = keep[b]
            e = (es * P.Lambda(mu, nu)).subst(sub)
            if not _is_zero(e):
                lam[(a, b)] = e
    E = []
    for mu in keep:
        E.append((es * P.Lambda(sidx, mu)).subst(sub))
    varnames = tuple(P.vars[mu] for mu in keep)
    return JacobiChart(P.dim - 1, lam, E, varnames)


# ---------------------------------------------------------------------------
# Contact and l.c.s. charts

def contact_to_jacobi(C, check_points=None, tol=1e-10):
    """Jacobi chart of a contact chart.

    With Cmat = d(theta) + theta theta^T (invertible exactly where theta is
    contact), the Reeb field is E = Cmat^{-1} theta and the bivector is
    Lambda^{ij} = (Cmat^{-1})_{ji} - E^i E^j.  The defining relations
    iota(theta) Lambda = 0 and iota(E) theta = 1 hold by construction and
    are re-verified in the tests; the overall sign of Lambda follows from
    mu(X) = -iota(X) d(theta).
    """
    n = C.dim
    rows = C.theta_matrix()
    inv, det = sym_matrix_inverse(rows)
    if check_points is None:
        check_points = halton_points(20, n, offset=5)
    for x in check_points:
        env = C.env(x)
        try:
            d = det.evaluate(env)
        except EvalError as exc:
            raise DegenerateStructureError(f"contact data not evaluable: {exc}") from exc
        if abs(d) < tol:
            raise DegenerateStructureError(
                f"contact condition fails at sample {np.asarray(x)} (det={d:.3e})")
    E = []
    for mu in range(n):
        acc = ex.ZERO
        for nu in range(n):
            acc = acc + inv[mu][nu] * C.theta[nu]
        E.append(acc)
    lam = {}
    for i in range(n):
        for j in range(i + 1, n):
            e = inv[j][i] - E[i] * E[j]
            if not _is_zero(e):
                lam[(i, j)] = e
    return JacobiChart(n, lam, E, C.vars)


def contact_structure_at(C, x):
    """Pointwise (Lambda(x), E(x)) of a contact chart via a numeric solve.

    Used on high-dimensional total spaces where the symbolic adjugate is
    wasteful; same formulas as `contact_to_jacobi`.
    """
    n = C.dim
    env = C.env(x)
    theta = np.array([c.evaluate(env) for c in C.theta])
    D = np.zeros((n, n))
    for mu in range(n):
        for nu in range(n):
            D[mu, nu] = (C.theta[nu].diff(C.vars[mu]) -
                         C.theta[mu].diff(C.vars[nu])).evaluate(env)
    Cmat = D + np.outer(theta, theta)
    try:
        inv = np.linalg.inv(Cmat)
    except np.linalg.LinAlgError as exc:
        raise DegenerateStructureError("contact condition fails (singular system)") from exc
    E = inv @ theta
    Lam = inv.T - np.outer(E, E)
    return Lam, E


def lcs_to_jacobi(Omega, omega, varnames, check_points=None, tol=1e-8):
    """Jacobi chart of a locally conformal symplectic pair (Omega, omega).

    Requires d(Omega) = omega ^ Omega at the sample points and Omega
    nondegenerate there.  Lambda is minus the inverse of the matrix of
    Omega and E = sharp(Lambda)(omega); with these conventions
    iota(E) Omega = -omega, which is re-verified as a postcondition.
    """
    dim = len(varnames)
    if Omega.degree != 2:
        raise ValueError("Omega must be a 2-form")
    if check_points is None:
        check_points = halton_points(20, dim, offset=3)
    theta_form = one_form(dim, omega)
    defect = Omega.d(varnames).add(theta_form.wedge(Omega).scale(ex.Num(-1.0)))
    for x in check_points:
        if defect.max_abs_at(varnames, x) > tol:
            raise DegenerateStructureError(
                f"d(Omega) != omega ^ Omega at sample {np.asarray(x)}")
    rows = [[Omega[(mu, nu)] for nu in range(dim)] for mu in range(dim)]
    inv, det = sym_matrix_inverse(rows)
    for x in check_points:
        env = dict(zip(varnames, np.asarray(x, dtype=float)))
        if abs(det.evaluate(env)) < 1e-12:
            raise DegenerateStructureError(
                f"Omega degenerate at sample {np.asarray(x)}")
    lam = {}
    for mu in range(dim):
        for nu in range(mu + 1, dim):
            e = ex.neg(inv[mu][nu])
            if not _is_zero(e):
                lam[(mu, nu)] = e
    L = Bivector(dim, lam)
    E = L.map_covector([as_expr(c) for c in omega])
    return JacobiChart(dim, lam, E, varnames)
