"""Groupoid structure maps that hold only up to 2-morphisms.

A presentation here is a finite groupoid Gamma together with candidate
structure maps for a group-like object over a point: a multiplication
homomorphism m: Gamma x Gamma -> Gamma, an identity section e, an
inversion homomorphism i, and a chosen associativity 2-morphism alpha
between m(m x id) and m(id x m).  The suite checks the axioms; the
pentagon computation composes the six face 2-morphisms around the
four-fold associativity cube and reports the defect against the identity
2-morphism per object 4-tuple.

Face convention: outer reassociations use alpha on the three blocks being
reassociated; for the two inner faces the spectator factor is absorbed
into the adjacent block, and backward faces use the inverse arrow.  With
this convention a strict alpha (unit section) composes to the identity on
every 4-tuple, while the bundle-of-groups example over Z2 produces the
nontrivial defect at (1, 1, 1, -1).
"""

from __future__ import annotations

import itertools

from .groupoids import (FiniteGroupoid, GroupoidHom, hom_two_morphisms,
                        is_two_morphism)


def product_groupoid(G, H):
    objects = tuple((x, y) for x in G.objects for y in H.objects)
    arrows = tuple((g, h) for g in G.arrows for h in H.arrows)
    src = {(g, h): (G.src[g], H.src[h]) for (g, h) in arrows}
    tgt = {(g, h): (G.tgt[g], H.tgt[h]) for (g, h) in arrows}
    mult = {}
    for (g1, h1) in arrows:
        for (g2, h2) in arrows:
            if G.composable(g1, g2) and H.composable(h1, h2):
                mult[((g1, h1), (g2, h2))] = (G.mult[(g1, g2)], H.mult[(h1, h2)])
    unit = {(x, y): (G.unit[x], H.unit[y]) for (x, y) in objects}
    inv = {(g, h): (G.inv[g], H.inv[h]) for (g, h) in arrows}
    return FiniteGroupoid(objects, arrows, src, tgt, mult, unit, inv)


def power_groupoid(G, k):
    """G^k with tuple objects/arrows (flat tuples, not nested pairs)."""
    objects = tuple(itertools.product(G.objects, repeat=k))
    arrows = tuple(itertools.product(G.arrows, repeat=k))
    src = {a: tuple(G.src[g] for g in a) for a in arrows}
    tgt = {a: tuple(G.tgt[g] for g in a) for a in arrows}
    mult = {}
    for a in arrows:
        for b in arrows:
            if all(G.composable(g, h) for g, h in zip(a, b)):
                mult[(a, b)] = tuple(G.mult[(g, h)] for g, h in zip(a, b))
    unit = {x: tuple(G.unit[o] for o in x) for x in objects}
    inv = {a: tuple(G.inv[g] for g in a) for a in arrows}
    return FiniteGroupoid(objects, arrows, src, tgt, mult, unit, inv)


class WeinsteinPresentation:
    """Finite model of a group-like stack presented by Gamma (base = point).

    m_obj/m_arr: binary multiplication on objects/arrows.
    e_obj/e_arr: distinguished identity object and unit arrow.
    i: inversion homomorphism data (obj and arr maps).
    alpha: dict (x1, x2, x3) -> arrow, the associativity 2-morphism.
    """

    def __init__(self, name, gamma, m_obj, m_arr, e_obj, e_arr,
                 i_obj, i_arr, alpha):
        self.name = name
        self.gamma = gamma
        self.m_obj = dict(m_obj)
        self.m_arr = dict(m_arr)
        self.e_obj = e_obj
        self.e_arr = e_arr
        self.i_obj = dict(i_obj)
        self.i_arr = dict(i_arr)
        self.alpha = dict(alpha)

    # -- derived homomorphisms ------------------------------------------------

    def m_hom(self):
        G2 = power_groupoid(self.gamma, 2)
        return GroupoidHom(G2, self.gamma,
                           {x: self.m_obj[x] for x in G2.objects},
                           {a: self.m_arr[a] for a in G2.arrows})

    def i_hom(self):
        return GroupoidHom(self.gamma, self.gamma, self.i_obj, self.i_arr)

    def triple_homs(self):
        """m(m x id) and m(id x m) as homomorphisms Gamma^3 -> Gamma."""
        G3 = power_groupoid(self.gamma, 3)

        def f_obj(x):
            return self.m_obj[(self.m_obj[(x[0], x[1])], x[2])]

        def f_arr(a):
            return self.m_arr[(self.m_arr[(a[0], a[1])], a[2])]

        def g_obj(x):
            return self.m_obj[(x[0], self.m_obj[(x[1], x[2])])]

        def g_arr(a):
            return self.m_arr[(a[0], self.m_arr[(a[1], a[2])])]

        F = GroupoidHom(G3, self.gamma,
                        {x: f_obj(x) for x in G3.objects},
                        {a: f_arr(a) for a in G3.arrows})
        G = GroupoidHom(G3, self.gamma,
                        {x: g_obj(x) for x in G3.objects},
                        {a: g_arr(a) for a in G3.arrows})
        return F, G

    def left_identity_hom(self):
        """gamma |-> m(e, gamma) (e composed with the target projection)."""
        return GroupoidHom(
            self.gamma, self.gamma,
            {x: self.m_obj[(self.e_obj, x)] for x in self.gamma.objects},
            {g: self.m_arr[(self.e_arr, g)] for g in self.gamma.arrows})

    def right_identity_hom(self):
        return GroupoidHom(
            self.gamma, self.gamma,
            {x: self.m_obj[(x, self.e_obj)] for x in self.gamma.objects},
            {g: self.m_arr[(g, self.e_arr)] for g in self.gamma.arrows})

    def left_inverse_hom(self):
        """gamma |-> m(i(gamma), gamma), to be compared with e after s."""
        return GroupoidHom(
            self.gamma, self.gamma,
            {x: self.m_obj[(self.i_obj[x], x)] for x in self.gamma.objects},
            {g: self.m_arr[(self.i_arr[g], g)] for g in self.gamma.arrows})

    def right_inverse_hom(self):
        return GroupoidHom(
            self.gamma, self.gamma,
            {x: self.m_obj[(x, self.i_obj[x])] for x in self.gamma.objects},
            {g: self.m_arr[(g, self.i_arr[g])] for g in self.gamma.arrows})

    def constant_e_hom(self):
        return GroupoidHom(
            self.gamma, self.gamma,
            {x: self.e_obj for x in self.gamma.objects},
            {g: self.e_arr for g in self.gamma.arrows})

    def identity_hom(self):
        return GroupoidHom(self.gamma, self.gamma,
                           {x: x for x in self.gamma.objects},
                           {g: g for g in self.gamma.arrows})


def weinstein_axiom_suite(pres, alpha_limit=64):
    """Check the group-like axioms of a presentation.

    Returns a report with per-check pass flags, witnesses for failures,
    and all associativity 2-morphisms found (the chosen alpha need not be
    unique when isotropy is nontrivial and commutative).
    """
    report = {"name": pres.name, "checks": {}}

    def record(key, ok, detail=None):
        report["checks"][key] = {"pass": bool(ok), "detail": detail}

    base = pres.gamma.axiom_check()
    record("presentation-groupoid", not base, base[:3] or None)

    m = pres.m_hom()
    md = m.defects()
    record("m-homomorphism", not md, md[:3] or None)

    i = pres.i_hom()
    idf = i.defects()
    record("i-homomorphism", not idf, idf[:3] or None)

    F, G = pres.triple_homs()
    alpha_ok = is_two_morphism(F, G, pres.alpha)
    record("associativity-2morphism", alpha_ok,
           None if alpha_ok else "alpha is not a natural transformation")
    all_alphas = hom_two_morphisms(F, G, limit=alpha_limit)
    report["associativity_alphas_found"] = len(all_alphas)

    ident = pres.identity_hom()
    for key, hom in (("left-identity", pres.left_identity_hom()),
                     ("right-identity", pres.right_identity_hom())):
        found = hom_two_morphisms(hom, ident, limit=1)
        record(key, bool(found))

    e_const = pres.constant_e_hom()
    for key, hom in (("left-inverse", pres.left_inverse_hom()),
                     ("right-inverse", pres.right_inverse_hom())):
        found = hom_two_morphisms(hom, e_const, limit=1)
        record(key, bool(found))

    # Restriction to the identity section: alpha at (e, e, e) must be the
    # unit 2-morphism.
    eee = (pres.e_obj, pres.e_obj, pres.e_obj)
    a = pres.alpha.get(eee)
    unit = pres.gamma.unit[pres.m_obj[(pres.m_obj[(pres.e_obj, pres.e_obj)], pres.e_obj)]]
    record("alpha-restricts-to-id", a == unit, {"alpha(e,e,e)": a, "unit": unit})

    report["pass"] = all(c["pass"] for c in report["checks"].values())
    return report


def pentagon_obstruction(pres, tuples="objects"):
    """Compose the six face 2-morphisms around the associativity cube.

    Faces (x = (x1, x2, x3, x4), products via m on objects):

        f1: alpha(x1 x2, x3, x4)          ((12)3)4 -> (12)(34)
        f2: identity                      (12)(34) -> (12)(34)
        f3: alpha(x1, x2, x3 x4)          (12)(34) -> 1(2(34))
        f4: alpha(x1 x2, x3, x4)^-1       1(2(34)) -> 1((23)4), x1 absorbed
        f5: alpha(x1, x2 x3, x4)^-1       1((23)4) -> (1(23))4
        f6: alpha(x1, x2, x3 x4)^-1       (1(23))4 -> ((12)3)4, x4 absorbed

    Returns one row per object 4-tuple with the composed defect arrow, the
    identity arrow it is compared against, and whether they differ.
    """
    g = pres.gamma
    mo = pres.m_obj
    al = pres.alpha
    rows = []
    if tuples == "objects":
        pool = itertools.product(g.objects, repeat=4)
        project = None
    elif tuples == "arrows":
        # One row per arrow 4-tuple; faces are functions of the source
        # objects (useful for single-object presentations, where object
        # tuples alone would give a single row).
        pool = itertools.product(g.arrows, repeat=4)
        project = g.src
    else:
        raise ValueError("tuples must be 'objects' or 'arrows'")
    for tup in pool:
        x = tup if project is None else tuple(project[a] for a in tup)
        x1, x2, x3, x4 = x
        p12 = mo[(x1, x2)]
        p34 = mo[(x3, x4)]
        p23 = mo[(x2, x3)]
        total = mo[(mo[(p12, x3)], x4)]
        faces = [
            al[(p12, x3, x4)],
            g.unit[total],
            al[(x1, x2, p34)],
            g.inv[al[(p12, x3, x4)]],
            g.inv[al[(x1, p23, x4)]],
            g.inv[al[(x1, x2, p34)]],
        ]
        comp = faces[0]
        for f in faces[1:]:
            comp = g.mult.get((f, comp))
            if comp is None:
                rows.append({"tuple": tup, "defect": None, "identity": g.unit[total],
                             "nontrivial": True, "error": "faces not composable"})
                break
        else:
            unit = g.unit[total]
            rows.append({"tuple": tup, "defect": comp, "identity": unit,
                         "nontrivial": comp != unit})
    return rows


# ---------------------------------------------------------------------------
# The two stock presentations

def bz2_presentation():
    """Z2 over a point with strictly associative multiplication, alpha = id."""
    g = FiniteGroupoid.z2()
    pairs = [(a, b) for a in (1, -1) for b in (1, -1)]
    m_obj = {("pt", "pt"): "pt"}
    m_arr = {(a, b): a * b for (a, b) in pairs}
    alpha = {("pt", "pt", "pt"): 1}
    return WeinsteinPresentation(
        "bz2", g, m_obj, m_arr, "pt", 1,
        {"pt": "pt"}, {a: a for a in (1, -1)}, alpha)


def z2_bz2_presentation():
    """Bundle of Z2-isotropy groups over the two-point group Z2.

    Arrows are (object, group element) pairs; multiplication multiplies
    both slots, alpha(x1, x2, x3) = (x1 x2 x3, x1 x2 x3).
    """
    pts = (1, -1)
    g = FiniteGroupoid.bundle_of_groups(pts, pts, lambda a, b: a * b,
                                        lambda a: a, 1)
    m_obj = {(x, y): x * y for x in pts for y in pts}
    m_arr = {((x1, g1), (x2, g2)): (x1 * x2, g1 * g2)
             for x1 in pts for g1 in pts for x2 in pts for g2 in pts}
    alpha = {(x1, x2, x3): (x1 * x2 * x3, x1 * x2 * x3)
             for x1 in pts for x2 in pts for x3 in pts}
    return WeinsteinPresentation(
        "z2bz2", g, m_obj, m_arr, 1, (1, 1),
        {x: x for x in pts}, {(x, h): (x, h) for x in pts for h in pts}, alpha)
