"""The explicit groupoid of a contact chart: pair groupoid times a line.

For a base contact chart (M0, theta0) the total space is M0 x M0 x R with
coordinates (x, y, a), multiplication (x, y, a) . (y, z, b) = (x, z, a+b),
identity section the a = 0 diagonal and inverse (x, y, a) -> (y, x, -a).
The 1-form and scaling function are

    theta = -exp(a) p2* theta0 + p1* theta0,       f = exp(a).

All pullbacks along the structure maps are computed symbolically by
variable substitution plus the chain rule, so the residuals below are
exact up to float roundoff.  Because the thesis-level sources swap which
projection carries f between sections, the multiplicativity residual is
evaluated for both orderings and the report names the one that vanishes
(for this chart it is m* theta = pr1*f . pr2* theta + pr1* theta).
"""

from __future__ import annotations

import numpy as np

from . import expr as ex
from .expr import as_expr
from .forms import Form, one_form
from .jacobi import ContactChart, contact_structure_at
from .sampling import halton_points


class ContactGroupoidChart:
    def __init__(self, base):
        self.base = base
        d = base.dim
        self.d = d
        self.x_vars = tuple(f"x{i + 1}" for i in range(d))
        self.y_vars = tuple(f"y{i + 1}" for i in range(d))
        self.vars = self.x_vars + self.y_vars + ("a",)
        sub_x = dict(zip(base.vars, (ex.Var(v) for v in self.x_vars)))
        sub_y = dict(zip(base.vars, (ex.Var(v) for v in self.y_vars)))
        self.theta0_x = [c.subst(sub_x) for c in base.theta]
        self.theta0_y = [c.subst(sub_y) for c in base.theta]
        ea = ex.call("exp", ex.Var("a"))
        comps = ([c for c in self.theta0_x]
                 + [ex.neg(ea * c) for c in self.theta0_y]
                 + [ex.ZERO])
        self.theta = tuple(comps)
        self.f = ea
        # Composable pairs ((x,y,a),(y,z,b)) are parameterized freely by
        # (x, y, z, a, b).
        self.z_vars = tuple(f"z{i + 1}" for i in range(d))
        self.pair_vars = self.x_vars + self.y_vars + self.z_vars + ("a", "b")

    def total_chart(self):
        return ContactChart(2 * self.d + 1, self.theta, varnames=self.vars)

    # -- structure maps as substitutions Gamma_2 -> Gamma ---------------------

    def map_m(self):
        return ([ex.Var(v) for v in self.x_vars]
                + [ex.Var(v) for v in self.z_vars]
                + [ex.Var("a") + ex.Var("b")])

    def map_pr1(self):
        return ([ex.Var(v) for v in self.x_vars]
                + [ex.Var(v) for v in self.y_vars]
                + [ex.Var("a")])

    def map_pr2(self):
        return ([ex.Var(v) for v in self.y_vars]
                + [ex.Var(v) for v in self.z_vars]
                + [ex.Var("b")])

    def _pull_theta(self, comps):
        return one_form(2 * self.d + 1, self.theta).pullback(
            comps, self.pair_vars, self.vars)

    def _pull_scalar(self, g, comps):
        return g.subst(dict(zip(self.vars, comps)))

    def multiplicativity_forms(self):
        """Residual 1-forms on the composable space for both pr-orderings."""
        m_theta = self._pull_theta(self.map_m())
        p1_theta = self._pull_theta(self.map_pr1())
        p2_theta = self._pull_theta(self.map_pr2())
        f_p1 = self._pull_scalar(self.f, self.map_pr1())
        f_p2 = self._pull_scalar(self.f, self.map_pr2())

        def residual(scaled, plain):
            out = Form(len(self.pair_vars), 1, dict(m_theta.comps))
            out = out.add(scaled.scale(ex.Num(-1.0)))
            out = out.add(plain.scale(ex.Num(-1.0)))
            return out

        return {
            "pr2_f": residual(p1_theta.scale(f_p2), p2_theta),
            "pr1_f": residual(p2_theta.scale(f_p1), p1_theta),
        }


def _max_on_tangents(form, varnames, points, rng, n_vectors=3):
    worst = 0.0
    k = form.degree
    for x in points:
        for _ in range(n_vectors):
            vecs = [rng.standard_normal(len(varnames)) for _ in range(k)]
            worst = max(worst, abs(form.value_on(varnames, x, vecs)))
    return worst


def multiplicativity_residual(C, n_samples=100, seed=7):
    """Max |residual(tangent)| over composable samples, both orderings."""
    rng = np.random.default_rng(seed)
    forms = C.multiplicativity_forms()
    pts = halton_points(n_samples, len(C.pair_vars), box=[(-0.8, 0.8)] * len(C.pair_vars))
    out = {}
    for key, form in forms.items():
        out[key] = _max_on_tangents(form, C.pair_vars, pts, rng)
    out["convention"] = min(("pr2_f", "pr1_f"), key=lambda k: out[k])
    return out


def lie_derivative_one_form(theta, V, varnames):
    """(L_V theta)_j = V^s d_s theta_j + theta_s d_j V^s, symbolically."""
    n = len(varnames)
    out = []
    for j in range(n):
        acc = ex.ZERO
        for s in range(n):
            acc = acc + V[s] * theta[j].diff(varnames[s])
            acc = acc + theta[s] * V[s].diff(varnames[j])
        out.append(acc)
    return out


def reeb_residuals(C, n_samples=50, seed=11):
    """(max |L_{d/da} theta|, max |iota(d/da) theta - 1|) at samples.

    The a-coordinate field is the Reeb field of the abstract chart, not of
    this one; both residuals are reported as found.  Use
    `reeb_field_search` for the field that does annihilate them here.
    """
    d = C.d
    n = 2 * d + 1
    V = [ex.ZERO] * n
    V[-1] = ex.ONE
    return _reeb_pair(C, V, n_samples, seed)


def _reeb_pair(C, V, n_samples, seed):
    lie = lie_derivative_one_form(C.theta, V, C.vars)
    pts = halton_points(n_samples, len(C.vars), box=[(-0.8, 0.8)] * len(C.vars))
    worst_lie = 0.0
    worst_iota = 0.0
    for x in pts:
        env = dict(zip(C.vars, x))
        worst_lie = max(worst_lie, max(abs(e.evaluate(env)) for e in lie))
        iota = sum(V[j].evaluate(env) * C.theta[j].evaluate(env)
                   for j in range(len(C.vars)))
        worst_iota = max(worst_iota, abs(iota - 1.0))
    return worst_lie, worst_iota


def reeb_field_search(C, n_samples=50, seed=11):
    """Score candidate normalizations of the Reeb direction.

    Candidates: the bare a-direction with both signs, the first-factor
    lift of the base Reeb field, and the (-1/f)-scaled second-factor lift.
    Returns the per-candidate residual pairs and the winner.
    """
    d = C.d
    n = 2 * d + 1
    base_chart = C.base
    _, E0 = None, None
    lam0, E0 = contact_structure_at(base_chart, np.zeros(d))
    # Symbolic base Reeb field through the same linear algebra as
    # contact_to_jacobi, but only the lifts are needed here.
    from .jacobi import contact_to_jacobi
    J0 = contact_to_jacobi(base_chart)
    sub_x = dict(zip(base_chart.vars, (ex.Var(v) for v in C.x_vars)))
    sub_y = dict(zip(base_chart.vars, (ex.Var(v) for v in C.y_vars)))
    E0x = [c.subst(sub_x) for c in J0.E]
    E0y = [c.subst(sub_y) for c in J0.E]
    zero = [ex.ZERO] * d
    minus_inv_f = ex.neg(ex.call("exp", ex.neg(ex.Var("a"))))
    candidates = {
        "d_a": [ex.ZERO] * (n - 1) + [ex.ONE],
        "minus_d_a": [ex.ZERO] * (n - 1) + [ex.Num(-1.0)],
        "first_factor_reeb_lift": E0x + zero + [ex.ZERO],
        "second_factor_reeb_lift_scaled": (
            zero + [minus_inv_f * c for c in E0y] + [ex.ZERO]),
    }
    table = {}
    for name, V in candidates.items():
        table[name] = _reeb_pair(C, V, n_samples, seed)
    best = min(table, key=lambda k: max(table[k]))
    return {"candidates": table, "best": best, "residuals": table[best]}


def homogeneous_equivalence_check(C, n_samples=60, seed=13, tol=1e-9):
    """Symplectization consistency on Gamma x R.

    Builds omega = d(exp(-s) pi* theta) and checks that its additivity for
    the log-shifted pair structure (second factor at s - a) agrees with
    the theta-multiplicativity verdict; also certifies d(omega) = 0 at the
    samples.
    """
    rng = np.random.default_rng(seed)
    n = 2 * C.d + 1
    ext_vars = C.vars + ("s",)
    es = ex.call("exp", ex.neg(ex.Var("s")))
    pre = one_form(n + 1, [es * c for c in C.theta] + [ex.ZERO])
    omega = pre.d(ext_vars)

    pair_ext = C.pair_vars + ("s",)
    s = ex.Var("s")
    m_comps = C.map_m() + [s]
    p1_comps = C.map_pr1() + [s]
    p2_comps = C.map_pr2() + [s - ex.Var("a")]
    m_om = omega.pullback(m_comps, pair_ext, ext_vars)
    p1_om = omega.pullback(p1_comps, pair_ext, ext_vars)
    p2_om = omega.pullback(p2_comps, pair_ext, ext_vars)
    resid = m_om.add(p1_om.scale(ex.Num(-1.0))).add(p2_om.scale(ex.Num(-1.0)))

    pts = halton_points(n_samples, len(pair_ext), box=[(-0.8, 0.8)] * len(pair_ext))
    omega_res = _max_on_tangents(resid, pair_ext, pts, rng)

    theta_res = multiplicativity_residual(C, n_samples=n_samples, seed=seed)
    theta_val = theta_res[theta_res["convention"]]

    d_omega = omega.d(ext_vars)
    pts2 = halton_points(20, len(ext_vars), box=[(-0.8, 0.8)] * len(ext_vars))
    closed = max(d_omega.max_abs_at(ext_vars, x) for x in pts2)

    return {
        "omega_multiplicativity": omega_res,
        "theta_multiplicativity": theta_val,
        "d_omega": closed,
        "agree": (omega_res <= tol) == (theta_val <= tol),
        "tolerance": tol,
    }


def source_jacobi_residual(C, n_samples=40, seed=17):
    """Pushforward of the total-space Jacobi structure along the two
    groupoid projections.

    The source (x, y, a) -> y should carry (Lambda_theta, E_theta) to the
    base structure on the nose; the target then matches after the
    (-f)-conformal change.  Both residuals are returned together with the
    projection for which the plain (non-conformal) relation holds.
    """
    d = C.d
    total = C.total_chart()
    from .jacobi import contact_to_jacobi
    J0 = contact_to_jacobi(C.base)
    pts = halton_points(n_samples, 2 * d + 1, box=[(-0.7, 0.7)] * (2 * d + 1))
    worst = {"source": 0.0, "target_conformal": 0.0, "target_plain": 0.0}
    x_sl = slice(0, d)
    y_sl = slice(d, 2 * d)
    for g in pts:
        Lam, E = contact_structure_at(total, g)
        envy = dict(zip(C.base.vars, g[y_sl]))
        envx = dict(zip(C.base.vars, g[x_sl]))
        L0y = J0.Lambda.matrix_at(J0.vars, g[y_sl])
        E0y = np.array([c.evaluate(envy) for c in J0.E])
        L0x = J0.Lambda.matrix_at(J0.vars, g[x_sl])
        E0x = np.array([c.evaluate(envx) for c in J0.E])
        # source pushforward: the y-block of the structure
        dL = np.abs(Lam[y_sl, y_sl] - L0y).max()
        dE = np.abs(E[y_sl] - E0y).max()
        worst["source"] = max(worst["source"], dL, dE)
        # target, conformal factor u = -f
        env = dict(zip(C.vars, g))
        fval = C.f.evaluate(env)
        u = -fval
        Lu = u * Lam
        du = np.zeros(2 * d + 1)
        du[-1] = -fval  # d(-exp(a)) = -exp(a) da
        Eu = u * E + Lam.T @ du
        worst["target_conformal"] = max(
            worst["target_conformal"],
            np.abs(Lu[x_sl, x_sl] - L0x).max(),
            np.abs(Eu[x_sl] - E0x).max())
        worst["target_plain"] = max(
            worst["target_plain"],
            np.abs(Lam[x_sl, x_sl] - L0x).max(),
            np.abs(E[x_sl] - E0x).max())
    worst["jacobi_projection"] = ("source" if worst["source"]
                                  <= worst["target_plain"] else "target")
    return worst


def extract_scaling_function(C, n_samples=40, seed=19, floor=0.1):
    """Recover f from the multiplicativity identity sample-wise.

    At composable samples with |pr2* theta(v)| bounded away from zero,
    m* theta(v) = f(pr1) pr2* theta(v) + pr1* theta(v) determines f; any
    other function satisfying the identity agrees with f wherever theta
    does not vanish, which is the uniqueness statement made quantitative.
    """
    rng = np.random.default_rng(seed)
    m_theta = C._pull_theta(C.map_m())
    p1_theta = C._pull_theta(C.map_pr1())
    p2_theta = C._pull_theta(C.map_pr2())
    pts = halton_points(n_samples, len(C.pair_vars),
                        box=[(-0.8, 0.8)] * len(C.pair_vars))
    worst = 0.0
    used = 0
    for x in pts:
        env = dict(zip(C.pair_vars, x))
        for _ in range(6):
            v = rng.standard_normal(len(C.pair_vars))
            denom = p2_theta.value_on(C.pair_vars, x, [v])
            if abs(denom) < floor:
                continue
            num = (m_theta.value_on(C.pair_vars, x, [v])
                   - p1_theta.value_on(C.pair_vars, x, [v]))
            fhat = num / denom
            ftrue = C.f.evaluate({"a": env["a"]})
            worst = max(worst, abs(fhat - ftrue))
            used += 1
            break
    if used == 0:
        raise ValueError("no usable tangent samples for f extraction")
    return worst


def symplectic_case_split(per_generator):
    """Product model for trivial period, otherwise the circle-quotient
    description (the quotient construction itself is out of scope here)."""
    g = float(per_generator)
    if g < 0.0:
        raise ValueError("period generator must be nonnegative")
    if g == 0.0:
        return {
            "model": "product",
            "description": "pair groupoid times a line, cocycle-twisted",
        }
    return {
        "model": "circle-quotient",
        "period": g,
        "description": ("principal circle bundle of period a over the base; "
                        "total space the fibered square modulo the diagonal "
                        "circle action"),
    }
