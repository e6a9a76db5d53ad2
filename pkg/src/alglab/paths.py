"""Discrete A-path and A-homotopy calculus on uniform grids.

Paths are sampled on t_i = i/N with base points gamma(t_i) and fiber
values a(t_i); homotopy sheets add a uniform eps-grid.  The companion
equation

    d b/dt = d a/d eps + T(a, b),      b(eps, 0) = 0

is integrated per eps-slice with the classical 4th-order one-step method;
d a/d eps uses centered differences, so the overall order is 2.  For the
chart-flat connection the torsion reduces pointwise to the structure
functions, T(xi, eta)^k = c^k_{ij} xi^i eta^j: extending the grid values
by sections constant in the chart makes every extension-derivative term
cancel, and the result does not depend on that choice.  General
Christoffel entries add rho-weighted correction terms and are used by the
connection-independence test.
"""

from __future__ import annotations

import csv
import io

import numpy as np

from . import expr as ex
from .algebroid import DimensionError
from .expr import as_expr

EQ_TOL_BASE = 1e-3
EQ_TOL_REF = 201


def equivalence_tolerance(N, K, base=EQ_TOL_BASE, ref=EQ_TOL_REF):
    """Grid-dependent verdict tolerance, O(N^-2 + K^-2), = base at ref grid."""
    return base * (1.0 / N**2 + 1.0 / K**2) / (2.0 / ref**2)


class SampledPath:
    """Uniform t-grid samples of a path in A: base (N+1, m), fiber (N+1, n)."""

    def __init__(self, base, fiber):
        base = np.asarray(base, dtype=float)
        fiber = np.asarray(fiber, dtype=float)
        if base.ndim != 2 or fiber.ndim != 2 or base.shape[0] != fiber.shape[0]:
            raise DimensionError("base and fiber must share the node axis")
        if base.shape[0] < 2:
            raise DimensionError("need at least two nodes")
        self.base = base
        self.fiber = fiber

    @property
    def N(self):
        return self.base.shape[0] - 1

    @property
    def base_dim(self):
        return self.base.shape[1]

    @property
    def rank(self):
        return self.fiber.shape[1]

    @property
    def ts(self):
        return np.linspace(0.0, 1.0, self.N + 1)

    def interp(self, s):
        """Linear interpolation of (base, fiber) at parameter values s."""
        s = np.asarray(s, dtype=float)
        ts = self.ts
        b = np.stack([np.interp(s, ts, self.base[:, d])
                      for d in range(self.base_dim)], axis=-1)
        f = np.stack([np.interp(s, ts, self.fiber[:, d])
                      for d in range(self.rank)], axis=-1)
        return b, f


def zero_path(x, rank, N=50):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return SampledPath(np.tile(x, (N + 1, 1)), np.zeros((N + 1, rank)))


def _dt(values, N):
    return np.gradient(values, 1.0 / N, axis=0, edge_order=2)


def anchor_on_grid(A, base_points):
    """rho evaluated on an array of base points: shape points + (m, n)."""
    shape = base_points.shape[:-1]
    cols = [base_points[..., d].ravel() for d in range(A.base_dim)]
    out = np.zeros(shape + (A.base_dim, A.rank))
    flat = out.reshape((-1, A.base_dim, A.rank))
    for mu in range(A.base_dim):
        for i in range(A.rank):
            e = A.anchor[mu][i]
            if isinstance(e, ex.Num):
                flat[:, mu, i] = e.value
            else:
                flat[:, mu, i] = e.compiled(A.vars)(*cols)
    return out


def structure_on_grid(A, base_points):
    """c^k_{ij} evaluated on an array of base points: points + (n, n, n).

    Returns a plain (n, n, n) array when the structure functions are
    constant (Lie algebras over a point, constant-coefficient data).
    """
    n = A.rank
    if A.base_dim == 0 or all(isinstance(e, ex.Num) for e in A._c.values()):
        env = {}
        C = np.zeros((n, n, n))
        for (i, j, k), e in A._c.items():
            v = e.evaluate(env) if isinstance(e, ex.Num) else e.evaluate(
                dict(zip(A.vars, base_points.reshape(-1, A.base_dim)[0])))
            C[k, i, j] = v
            C[k, j, i] = -v
        return C
    shape = base_points.shape[:-1]
    cols = [base_points[..., d].ravel() for d in range(A.base_dim)]
    out = np.zeros(shape + (n, n, n))
    flat = out.reshape((-1, n, n, n))
    for (i, j, k), e in A._c.items():
        vals = e.compiled(A.vars)(*cols)
        flat[:, k, i, j] = vals
        flat[:, k, j, i] = -vals
    return out


def apath_residual(A, p):
    """max_i |rho(gamma_i) a_i - dgamma/dt_i| over the nodes."""
    if p.base_dim != A.base_dim or p.rank != A.rank:
        raise DimensionError("path does not match algebroid dimensions")
    if A.base_dim == 0:
        return 0.0
    rho = anchor_on_grid(A, p.base)
    pred = np.einsum("pmn,pn->pm", rho, p.fiber)
    dg = _dt(p.base, p.N)
    return float(np.abs(pred - dg).max())


def a0_boundary_check(p, tol=None):
    """Endpoint conditions a(0)=a(1)=0 and adot(0)=adot(1)=0.

    Derivatives use second-order one-sided differences; the tolerance
    defaults to 10/N^2.
    """
    N = p.N
    if tol is None:
        tol = 10.0 / N**2
    h = 1.0 / N
    a = p.fiber
    d0 = (-3.0 * a[0] + 4.0 * a[1] - a[2]) / (2.0 * h)
    d1 = (3.0 * a[-1] - 4.0 * a[-2] + a[-3]) / (2.0 * h)
    defect = {
        "a(0)": float(np.abs(a[0]).max()),
        "a(1)": float(np.abs(a[-1]).max()),
        "adot(0)": float(np.abs(d0).max()),
        "adot(1)": float(np.abs(d1).max()),
    }
    return max(defect.values()) <= tol, defect


class Reparam:
    """Smooth reparameterization tau with tau(0)=0, tau(1)=1, tau' >= 0,
    tau'(0)=tau'(1)=0, given as an Expression in t."""

    def __init__(self, tau_expr):
        self.tau = as_expr(tau_expr)
        self.dtau = self.tau.diff("t")

    @classmethod
    def default(cls):
        # t - sin(2 pi t) / (2 pi): tau' = 1 - cos(2 pi t) >= 0, flat ends.
        return cls(ex.parse("t - sin(2*pi*t)/(2*pi)"))

    def validate(self, N=200, tol=1e-9):
        ts = np.linspace(0.0, 1.0, N + 1)
        tv = self.tau.compiled(("t",))(ts)
        dv = self.dtau.compiled(("t",))(ts)
        if abs(tv[0]) > tol or abs(tv[-1] - 1.0) > tol:
            raise ValueError("tau must fix 0 and 1")
        if dv.min() < -tol:
            raise ValueError("tau must be nondecreasing")
        if abs(dv[0]) > tol or abs(dv[-1]) > tol:
            raise ValueError("tau' must vanish at the ends")
        return True

    def values(self, ts):
        return (self.tau.compiled(("t",))(np.asarray(ts, dtype=float)),
                self.dtau.compiled(("t",))(np.asarray(ts, dtype=float)))


def reparameterize(p, tau=None):
    """a^tau(t) = tau'(t) a(tau(t)) over gamma(tau(t)), node values by
    linear interpolation."""
    if tau is None:
        tau = Reparam.default()
    tau.validate()
    ts = p.ts
    tv, dv = tau.values(ts)
    b, f = p.interp(np.clip(tv, 0.0, 1.0))
    return SampledPath(b, f * dv[:, None])


def concatenate(p, q, tol=1e-8):
    """Traversal-order concatenation: first half 2 p(2t), second 2 q(2t-1).

    The two halves keep their time-doubled fiber values; the possible kink
    at the midpoint is deliberate and left to the equivalence checker.
    """
    if p.N != q.N or p.base_dim != q.base_dim or p.rank != q.rank:
        raise DimensionError("paths must share grid and dimensions")
    gap = np.abs(p.base[-1] - q.base[0]).max() if p.base_dim else 0.0
    if gap > tol:
        raise ValueError(f"endpoint mismatch {gap:.3e} exceeds {tol:.1e}")
    base = np.concatenate([p.base, q.base[1:]], axis=0)
    fiber = np.concatenate([2.0 * p.fiber, 2.0 * q.fiber[1:]], axis=0)
    return SampledPath(base, fiber)


def invert_path(p):
    """Inverse path: base reversed, fiber reversed and negated.

    The sign makes the result an A-path over the reversed base (the chain
    rule flips dgamma/dt) and makes p followed by invert_path(p)
    equivalent to the constant path.
    """
    return SampledPath(p.base[::-1].copy(), -p.fiber[::-1].copy())


class ChartConnection:
    """Christoffel data Gamma^k_{mu j} as Expressions; empty means flat."""

    def __init__(self, gamma=None):
        self.gamma = {}
        if gamma:
            for (k, mu, j), e in gamma.items():
                self.gamma[(k, mu, j)] = as_expr(e)

    @property
    def is_flat(self):
        return not self.gamma

    def on_grid(self, A, base_points):
        n, m = A.rank, A.base_dim
        shape = base_points.shape[:-1]
        cols = [base_points[..., d].ravel() for d in range(m)]
        out = np.zeros(shape + (n, m, n))
        flat = out.reshape((-1, n, m, n))
        for (k, mu, j), e in self.gamma.items():
            if isinstance(e, ex.Num):
                flat[:, k, mu, j] = e.value
            else:
                flat[:, k, mu, j] = e.compiled(A.vars)(*cols)
        return out


def torsion(A, conn, x, xi, eta):
    """T(xi, eta) at x: c-term plus Christoffel corrections."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    C = A.structure_at(x) if A.base_dim else structure_on_grid(A, np.zeros((1, 0)))
    out = np.einsum("kij,i,j->k", C, xi, eta)
    if conn is not None and not conn.is_flat:
        G = conn.on_grid(A, np.asarray(x, dtype=float).reshape(1, -1))[0]
        rho = A.anchor_at(x)
        rho_eta = rho @ eta
        rho_xi = rho @ xi
        out = out + np.einsum("kmj,m,j->k", G, rho_eta, xi)
        out = out - np.einsum("kmj,m,j->k", G, rho_xi, eta)
    return out


class HomotopySheet:
    """(K+1) x (N+1) grid of base points and fiber values."""

    def __init__(self, base, fiber):
        base = np.asarray(base, dtype=float)
        fiber = np.asarray(fiber, dtype=float)
        if base.ndim != 3 or fiber.ndim != 3 or base.shape[:2] != fiber.shape[:2]:
            raise DimensionError("sheet arrays must be (K+1, N+1, dim)")
        self.base = base
        self.fiber = fiber

    @property
    def K(self):
        return self.base.shape[0] - 1

    @property
    def N(self):
        return self.base.shape[1] - 1

    @property
    def base_dim(self):
        return self.base.shape[2]

    @property
    def rank(self):
        return self.fiber.shape[2]

    def slice(self, k):
        return SampledPath(self.base[k], self.fiber[k])

    def endpoint_drift(self):
        """How far the base endpoints move with eps (0 for honest homotopies)."""
        if self.base_dim == 0:
            return 0.0
        d0 = np.abs(self.base[:, 0] - self.base[0, 0]).max()
        d1 = np.abs(self.base[:, -1] - self.base[0, -1]).max()
        return float(max(d0, d1))

    def validate(self, A, tol_scale=50.0):
        """Per-slice A-path residuals and endpoint drift, as a report dict."""
        res = max(apath_residual(A, self.slice(k)) for k in range(self.K + 1))
        return {
            "max_slice_apath_residual": res,
            "apath_tolerance": tol_scale / self.N**2,
            "endpoint_drift": self.endpoint_drift(),
        }


def sheet_from_exprs(base_exprs, fiber_exprs, N, K):
    """Build a sheet from Expressions in variables 'eps' and 't'."""
    eps = np.linspace(0.0, 1.0, K + 1)
    ts = np.linspace(0.0, 1.0, N + 1)
    E, T = np.meshgrid(eps, ts, indexing="ij")
    def ev(e):
        return as_expr(e).compiled(("eps", "t"))(E, T)
    base = np.stack([ev(e) for e in base_exprs], axis=-1) if base_exprs else \
        np.zeros((K + 1, N + 1, 0))
    fiber = np.stack([ev(e) for e in fiber_exprs], axis=-1)
    return HomotopySheet(base, fiber)


def rescaling_sheet(p, sigma, dsigma, K=None):
    """Family a(eps,t) = ((1-eps) + eps sigma'(t)) a((1-eps) t + eps sigma(t)).

    sigma, dsigma are arrays on the path's t-grid (or callables).  The
    eps = 0 slice is p itself, the eps = 1 slice its sigma-reparameterization.
    """
    N = p.N
    if K is None:
        K = N
    ts = p.ts
    if callable(sigma):
        sig = sigma(ts)
        dsig = dsigma(ts)
    else:
        sig = np.asarray(sigma, dtype=float)
        dsig = np.asarray(dsigma, dtype=float)
    eps = np.linspace(0.0, 1.0, K + 1)
    base = np.empty((K + 1, N + 1, p.base_dim))
    fiber = np.empty((K + 1, N + 1, p.rank))
    for k, e in enumerate(eps):
        s = (1.0 - e) * ts + e * sig
        w = (1.0 - e) + e * dsig
        b, f = p.interp(np.clip(s, 0.0, 1.0))
        base[k] = b
        fiber[k] = f * w[:, None]
    return HomotopySheet(base, fiber)


def _grid_data(A, sheet, conn):
    """Precompute rho, c and Gamma on nodes and t-midpoints."""
    mids = 0.5 * (sheet.base[:, :-1] + sheet.base[:, 1:])
    C_nodes = structure_on_grid(A, sheet.base)
    C_mids = structure_on_grid(A, mids) if C_nodes.ndim > 3 else C_nodes
    data = {"C_nodes": C_nodes, "C_mids": C_mids}
    if conn is not None and not conn.is_flat:
        data["G_nodes"] = conn.on_grid(A, sheet.base)
        data["G_mids"] = conn.on_grid(A, mids)
        data["R_nodes"] = anchor_on_grid(A, sheet.base)
        data["R_mids"] = anchor_on_grid(A, mids)
    return data


def _torsion_term(C, G, R, a, b):
    if C.ndim == 3:
        out = np.einsum("kij,pi,pj->pk", C, a, b)
    else:
        out = np.einsum("pkij,pi,pj->pk", C, a, b)
    if G is not None:
        rho_b = np.einsum("pmn,pn->pm", R, b)
        rho_a = np.einsum("pmn,pn->pm", R, a)
        out = out + np.einsum("pkmj,pm,pj->pk", G, rho_b, a)
        out = out - np.einsum("pkmj,pm,pj->pk", G, rho_a, b)
    return out


def homotopy_solve(A, sheet, conn=None):
    """Integrate the companion equation; returns b on the sheet grid."""
    K, N = sheet.K, sheet.N
    if N < 8 or K < 4:
        raise ValueError(f"grid too coarse (N={N}, K={K}); need N >= 8, K >= 4")
    if not (np.isfinite(sheet.base).all() and np.isfinite(sheet.fiber).all()):
        raise ValueError("sheet contains non-finite values")
    a = sheet.fiber
    deps_a = np.gradient(a, 1.0 / K, axis=0, edge_order=2)
    a_mid = 0.5 * (a[:, :-1] + a[:, 1:])
    deps_mid = 0.5 * (deps_a[:, :-1] + deps_a[:, 1:])
    data = _grid_data(A, sheet, conn)
    Cn, Cm = data["C_nodes"], data["C_mids"]
    Gn = data.get("G_nodes")
    Gm = data.get("G_mids")
    Rn = data.get("R_nodes")
    Rm = data.get("R_mids")

    def F_node(j, b):
        C = Cn if Cn.ndim == 3 else Cn[:, j]
        G = None if Gn is None else Gn[:, j]
        R = None if Rn is None else Rn[:, j]
        return deps_a[:, j] + _torsion_term(C, G, R, a[:, j], b)

    def F_mid(j, b):
        C = Cm if Cm.ndim == 3 else Cm[:, j]
        G = None if Gm is None else Gm[:, j]
        R = None if Rm is None else Rm[:, j]
        return deps_mid[:, j] + _torsion_term(C, G, R, a_mid[:, j], b)

    h = 1.0 / N
    b = np.zeros((K + 1, N + 1, sheet.rank))
    cur = b[:, 0]
    for j in range(N):
        k1 = F_node(j, cur)
        k2 = F_mid(j, cur + 0.5 * h * k1)
        k3 = F_mid(j, cur + 0.5 * h * k2)
        k4 = F_node(j + 1, cur + h * k3)
        cur = cur + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        b[:, j + 1] = cur
        if not np.isfinite(cur).all():
            raise ValueError(f"companion solution blew up at t-step {j + 1}")
    return b


def b_is_apath_residual(A, sheet, b):
    """max |rho(gamma) b - dgamma/deps| over the grid."""
    if A.base_dim == 0:
        return 0.0
    rho = anchor_on_grid(A, sheet.base)
    pred = np.einsum("ptmn,ptn->ptm", rho, b)
    dg = np.gradient(sheet.base, 1.0 / sheet.K, axis=0, edge_order=2)
    return float(np.abs(pred - dg).max())


def equivalence_check(A, sheet, conn=None, tol=None):
    """Verdict ('equivalent' iff max_eps |b(eps,1)| <= tol) plus the defect.

    The tolerance is grid-dependent and always reported next to the
    verdict; it is never a silent absolute.
    """
    if tol is None:
        tol = equivalence_tolerance(sheet.N, sheet.K)
    b = homotopy_solve(A, sheet, conn)
    defect = float(np.abs(b[:, -1]).max())
    return {
        "equivalent": defect <= tol,
        "defect": defect,
        "tolerance": tol,
        "grid": (sheet.N, sheet.K),
    }


def connection_independence_test(A, sheet, conn1, conn2):
    """Max grid difference of the companion solutions for two connections."""
    b1 = homotopy_solve(A, sheet, conn1)
    b2 = homotopy_solve(A, sheet, conn2)
    return float(np.abs(b1 - b2).max())


# ---------------------------------------------------------------------------
# Sheet CSV interchange: header eps,t,g1..gm,a1..an

def sheet_to_csv(sheet, extra=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    m, n = sheet.base_dim, sheet.rank
    header = (["eps", "t"] + [f"g{d + 1}" for d in range(m)]
              + [f"a{d + 1}" for d in range(n)])
    if extra:
        header += list(extra.keys())
    w.writerow(header)
    eps = np.linspace(0.0, 1.0, sheet.K + 1)
    ts = np.linspace(0.0, 1.0, sheet.N + 1)
    for k in range(sheet.K + 1):
        for j in range(sheet.N + 1):
            row = [repr(eps[k]), repr(ts[j])]
            row += [repr(v) for v in sheet.base[k, j]]
            row += [repr(v) for v in sheet.fiber[k, j]]
            if extra:
                row += [repr(col[k, j]) for col in extra.values()]
            w.writerow(row)
    return buf.getvalue()


def sheet_from_csv(text, uniform_tol=1e-12):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty sheet CSV")
    header = rows[0]
    if header[:2] != ["eps", "t"]:
        raise ValueError("sheet CSV must start with columns eps,t")
    m = sum(1 for h in header if h.startswith("g"))
    n = sum(1 for h in header if h.startswith("a"))
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    eps = np.unique(data[:, 0])
    ts = np.unique(data[:, 1])
    K, N = len(eps) - 1, len(ts) - 1
    for grid, name in ((eps, "eps"), (ts, "t")):
        if len(grid) < 2:
            raise ValueError(f"{name}-grid must have at least two nodes")
        d = np.diff(grid)
        if np.abs(d - d[0]).max() > uniform_tol:
            raise ValueError(f"{name}-grid is not uniform to {uniform_tol:g}")
    if data.shape[0] != (K + 1) * (N + 1):
        raise ValueError("sheet CSV does not cover the full grid")
    order = np.lexsort((data[:, 1], data[:, 0]))
    data = data[order]
    base = data[:, 2:2 + m].reshape(K + 1, N + 1, m)
    fiber = data[:, 2 + m:2 + m + n].reshape(K + 1, N + 1, n)
    return HomotopySheet(base, fiber)
