"""Finite groupoid algebra: axioms, actions, bibundles, Morita theory,
cocycle semidirect products and the coherence checks for groupoid-like
structures that hold only up to 2-morphisms.

Conventions.  Arrows compose as m(g, h) with s(g) = t(h) ("g after h"):
t(m(g, h)) = t(g) and s(m(g, h)) = s(h).  A right action pairs m with g
when J(m) = t(g); a left action pairs g with m when s(g) = J(m).  All
checks are exhaustive; carriers are small by design.
"""

from __future__ import annotations

import itertools
import json


class SearchBudgetError(RuntimeError):
    pass


class FiniteGroupoid:
    def __init__(self, objects, arrows, src, tgt, mult, unit=None, inv=None):
        self.objects = tuple(objects)
        self.arrows = tuple(arrows)
        self.src = dict(src)
        self.tgt = dict(tgt)
        self.mult = dict(mult)
        self.unit = dict(unit) if unit is not None else self._infer_units()
        self.inv = dict(inv) if inv is not None else self._infer_inverses()

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_group(cls, elements, op, inverse, identity):
        """A group as a groupoid over a single object 'pt'."""
        arrows = tuple(elements)
        return cls(
            objects=("pt",),
            arrows=arrows,
            src={g: "pt" for g in arrows},
            tgt={g: "pt" for g in arrows},
            mult={(g, h): op(g, h) for g in arrows for h in arrows},
            unit={"pt": identity},
            inv={g: inverse(g) for g in arrows},
        )

    @classmethod
    def cyclic_group(cls, n):
        return cls.from_group(tuple(range(n)), lambda a, b: (a + b) % n,
                              lambda a: (-a) % n, 0)

    @classmethod
    def z2(cls):
        return cls.from_group((1, -1), lambda a, b: a * b, lambda a: a, 1)

    @classmethod
    def pair_groupoid(cls, points):
        """Arrows (x, y): t = x, s = y; (x,y) . (y,z) = (x,z)."""
        points = tuple(points)
        arrows = tuple((x, y) for x in points for y in points)
        mult = {}
        for x, y in arrows:
            for (y2, z) in arrows:
                if y2 == y:
                    mult[((x, y), (y2, z))] = (x, z)
        return cls(
            objects=points,
            arrows=arrows,
            src={(x, y): y for (x, y) in arrows},
            tgt={(x, y): x for (x, y) in arrows},
            mult=mult,
            unit={x: (x, x) for x in points},
            inv={(x, y): (y, x) for (x, y) in arrows},
        )

    @classmethod
    def trivial(cls):
        return cls.pair_groupoid(("pt",))

    @classmethod
    def bundle_of_groups(cls, points, elements, op, inverse, identity):
        """Arrows (x, g) with s = t = x; used for action groupoids with a
        trivial action."""
        arrows = tuple((x, g) for x in points for g in elements)
        mult = {}
        for x, g in arrows:
            for g2 in elements:
                mult[((x, g), (x, g2))] = (x, op(g, g2))
        return cls(
            objects=tuple(points),
            arrows=arrows,
            src={a: a[0] for a in arrows},
            tgt={a: a[0] for a in arrows},
            mult=mult,
            unit={x: (x, identity) for x in points},
            inv={(x, g): (x, inverse(g)) for (x, g) in arrows},
        )

    # -- inference -------------------------------------------------------------

    def composable(self, g, h):
        return self.src[g] == self.tgt[h]

    def _infer_units(self):
        units = {}
        for x in self.objects:
            for u in self.arrows:
                if self.src[u] != x or self.tgt[u] != x:
                    continue
                ok = True
                for g in self.arrows:
                    if self.src[g] == x and self.mult.get((g, u)) != g:
                        ok = False
                        break
                    if self.tgt[g] == x and self.mult.get((u, g)) != g:
                        ok = False
                        break
                if ok:
                    units[x] = u
                    break
        return units

    def _infer_inverses(self):
        inv = {}
        for g in self.arrows:
            for h in self.arrows:
                if (self.src[h] == self.tgt[g] and self.tgt[h] == self.src[g]
                        and self.mult.get((g, h)) == self.unit.get(self.tgt[g])
                        and self.mult.get((h, g)) == self.unit.get(self.src[g])):
                    inv[g] = h
                    break
        return inv

    # -- axiom check -----------------------------------------------------------

    def axiom_check(self):
        """Exhaustive verification; violations are returned, not raised."""
        violations = []
        for (g, h), k in self.mult.items():
            if not self.composable(g, h):
                violations.append(("mult-domain", g, h))
            else:
                if self.tgt.get(k) != self.tgt[g] or self.src.get(k) != self.src[h]:
                    violations.append(("mult-endpoints", g, h, k))
        for g in self.arrows:
            for h in self.arrows:
                if self.composable(g, h) and (g, h) not in self.mult:
                    violations.append(("mult-missing", g, h))
        for g in self.arrows:
            for h in self.arrows:
                for k in self.arrows:
                    if self.composable(g, h) and self.composable(h, k):
                        left = self.mult.get((self.mult.get((g, h)), k))
                        right = self.mult.get((g, self.mult.get((h, k))))
                        if left != right:
                            violations.append(("associativity", g, h, k, left, right))
        for x in self.objects:
            u = self.unit.get(x)
            if u is None or self.src.get(u) != x or self.tgt.get(u) != x:
                violations.append(("unit-missing", x))
                continue
            for g in self.arrows:
                if self.tgt[g] == x and self.mult.get((u, g)) != g:
                    violations.append(("left-unit", x, g))
                if self.src[g] == x and self.mult.get((g, u)) != g:
                    violations.append(("right-unit", x, g))
        for g in self.arrows:
            h = self.inv.get(g)
            if h is None:
                violations.append(("inverse-missing", g))
                continue
            if (self.mult.get((g, h)) != self.unit.get(self.tgt[g])
                    or self.mult.get((h, g)) != self.unit.get(self.src[g])):
                violations.append(("inverse-law", g, h))
        return violations

    def is_valid(self):
        return not self.axiom_check()

    def arrows_from(self, x):
        return [g for g in self.arrows if self.src[g] == x]

    def arrows_between(self, x, y):
        return [g for g in self.arrows if self.src[g] == x and self.tgt[g] == y]

    # -- JSON ---------------------------------------------------------------

    def to_json_dict(self):
        ids = {g: i for i, g in enumerate(self.arrows)}
        return {
            "objects": [repr(x) for x in self.objects],
            "arrows": [{"id": i, "src": repr(self.src[g]), "tgt": repr(self.tgt[g])}
                       for g, i in ids.items()],
            "mult": [[ids[g], ids[h], ids[k]] for (g, h), k in self.mult.items()],
            "inv": [ids[self.inv[g]] for g in self.arrows],
            "unit": {repr(x): ids[u] for x, u in self.unit.items()},
        }

    @classmethod
    def from_json_dict(cls, d):
        arrows = tuple(a["id"] for a in d["arrows"])
        src = {a["id"]: a["src"] for a in d["arrows"]}
        tgt = {a["id"]: a["tgt"] for a in d["arrows"]}
        mult = {(g, h): k for g, h, k in d["mult"]}
        unit = {x: u for x, u in d.get("unit", {}).items()} or None
        inv = None
        if d.get("inv"):
            inv = dict(zip(arrows, d["inv"]))
        return cls(d["objects"], arrows, src, tgt, mult, unit, inv)

    @classmethod
    def from_json(cls, text):
        return cls.from_json_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Actions and torsors

class GroupoidAction:
    """Right or left action of G on a carrier with moment map J."""

    def __init__(self, G, carrier, moment, table, side="right"):
        if side not in ("right", "left"):
            raise ValueError("side must be 'right' or 'left'")
        self.G = G
        self.carrier = tuple(carrier)
        self.moment = dict(moment)
        self.table = dict(table)
        self.side = side

    def act(self, *args):
        return self.table.get(args)

    def axiom_check(self):
        v = []
        G = self.G
        if self.side == "right":
            for m in self.carrier:
                for g in G.arrows:
                    defined = (m, g) in self.table
                    should = self.moment[m] == G.tgt[g]
                    if defined != should:
                        v.append(("domain", m, g))
                    if defined:
                        out = self.table[(m, g)]
                        if self.moment.get(out) != G.src[g]:
                            v.append(("moment", m, g))
            for m in self.carrier:
                u = G.unit.get(self.moment[m])
                if self.table.get((m, u)) != m:
                    v.append(("unit", m))
            for m in self.carrier:
                for g in G.arrows:
                    if (m, g) not in self.table:
                        continue
                    for h in G.arrows:
                        if G.composable(g, h):
                            lhs = self.table.get((self.table[(m, g)], h))
                            rhs = self.table.get((m, G.mult[(g, h)]))
                            if lhs != rhs:
                                v.append(("compat", m, g, h))
        else:
            for m in self.carrier:
                for g in G.arrows:
                    defined = (g, m) in self.table
                    should = G.src[g] == self.moment[m]
                    if defined != should:
                        v.append(("domain", g, m))
                    if defined:
                        out = self.table[(g, m)]
                        if self.moment.get(out) != G.tgt[g]:
                            v.append(("moment", g, m))
            for m in self.carrier:
                u = G.unit.get(self.moment[m])
                if self.table.get((u, m)) != m:
                    v.append(("unit", m))
            for m in self.carrier:
                for h in G.arrows:
                    if (h, m) not in self.table:
                        continue
                    for g in G.arrows:
                        if G.composable(g, h):
                            lhs = self.table.get((g, self.table[(h, m)]))
                            rhs = self.table.get((G.mult[(g, h)], m))
                            if lhs != rhs:
                                v.append(("compat", g, h, m))
        return v

    @classmethod
    def right_translation(cls, G):
        """G acting on its own arrows by right multiplication, moment = src."""
        table = {(m, g): G.mult[(m, g)] for (m, g) in G.mult}
        return cls(G, G.arrows, dict(G.src), table, side="right")

    @classmethod
    def pullback_torsor(cls, G, S, f):
        """S x_{f, t} G1 with the right translation action; a torsor over S."""
        carrier = tuple((s, g) for s in S for g in G.arrows if f[s] == G.tgt[g])
        moment = {(s, g): G.src[g] for (s, g) in carrier}
        table = {}
        for (s, g) in carrier:
            for h in G.arrows:
                if G.composable(g, h):
                    table[((s, g), h)] = (s, G.mult[(g, h)])
        proj = {(s, g): s for (s, g) in carrier}
        return cls(G, carrier, moment, table, side="right"), proj


def torsor_check(action, base_proj):
    """Is the carrier a principal bundle over the base of base_proj?

    Checks surjectivity of the projection and of the moment map, and
    freeness plus transitivity of the action on each projection fiber.
    """
    G = action.G
    carrier = action.carrier
    base = set(base_proj.values())
    if set(base_proj.keys()) != set(carrier):
        return False
    if set(action.moment.values()) != set(G.objects):
        return False
    fibers = {}
    for m in carrier:
        fibers.setdefault(base_proj[m], []).append(m)
    if not fibers or set(fibers.keys()) != base:
        return False
    for fib in fibers.values():
        for m in fib:
            hits = {}
            for g in G.arrows:
                key = (m, g) if action.side == "right" else (g, m)
                out = action.table.get(key)
                if out is None:
                    continue
                if base_proj.get(out) != base_proj[m]:
                    return False
                if out in hits:
                    return False  # not free
                hits[out] = g
            if set(hits.keys()) != set(fib):
                return False  # not transitive
    return True


# ---------------------------------------------------------------------------
# Bibundles

class Bibundle:
    """Left-G, right-H carrier with moment maps jG, jH."""

    def __init__(self, G, H, carrier, jG, jH, left, right):
        self.G = G
        self.H = H
        self.carrier = tuple(carrier)
        self.jG = dict(jG)
        self.jH = dict(jH)
        self.left = dict(left)
        self.right = dict(right)

    @classmethod
    def identity(cls, G):
        """The arrows of G with left/right translation (unit HS morphism)."""
        left = {(g, x): G.mult[(g, x)] for (g, x) in G.mult}
        right = {(x, h): G.mult[(x, h)] for (x, h) in G.mult}
        return cls(G, G, G.arrows, dict(G.tgt), dict(G.src), left, right)

    @classmethod
    def from_homomorphism(cls, hom):
        """Bibundle G0 x_{f, t} H1 of a homomorphism f: G -> H."""
        G, H = hom.G, hom.H
        carrier = tuple((u, h) for u in G.objects for h in H.arrows
                        if hom.obj[u] == H.tgt[h])
        jG = {(u, h): u for (u, h) in carrier}
        jH = {(u, h): H.src[h] for (u, h) in carrier}
        left = {}
        for (u, h) in carrier:
            for g in G.arrows:
                if G.src[g] == u:
                    left[(g, (u, h))] = (G.tgt[g], H.mult[(hom.arr[g], h)])
        right = {}
        for (u, h) in carrier:
            for k in H.arrows:
                if H.composable(h, k):
                    right[((u, h), k)] = (u, H.mult[(h, k)])
        return cls(G, H, carrier, jG, jH, left, right)

    def validate(self):
        v = []
        la = GroupoidAction(self.G, self.carrier, self.jG, self.left, side="left")
        ra = GroupoidAction(self.H, self.carrier, self.jH, self.right, side="right")
        v += [("left",) + tuple(x) for x in la.axiom_check()]
        v += [("right",) + tuple(x) for x in ra.axiom_check()]
        for (g, x), out in self.left.items():
            for h in self.H.arrows:
                if (x, h) in self.right:
                    a = self.right.get((out, h))
                    b = self.left.get((g, self.right[(x, h)]))
                    if a != b:
                        v.append(("commute", g, x, h))
        return v

    def is_right_principal(self):
        """jG is the bundle projection; H acts freely transitively on its
        fibers and jH is surjective."""
        if set(self.jG.values()) != set(self.G.objects):
            return False
        if set(self.jH.values()) != set(self.H.objects):
            return False
        ra = GroupoidAction(self.H, self.carrier, self.jH, self.right, side="right")
        return torsor_check(ra, self.jG)

    def is_left_principal(self):
        if set(self.jG.values()) != set(self.G.objects):
            return False
        if set(self.jH.values()) != set(self.H.objects):
            return False
        la = GroupoidAction(self.G, self.carrier, self.jG, self.left, side="left")
        return torsor_check(la, self.jH)

    def is_morita(self):
        return (not self.validate()) and self.is_right_principal() \
            and self.is_left_principal()

    def flip(self):
        """The reverse bibundle H -> G (left and right roles swapped via
        inverses)."""
        G, H = self.G, self.H
        left = {}
        for (x, h) in self.right:
            left[(H.inv[h], x)] = self.right[(x, h)]
        right = {}
        for (g, x) in self.left:
            right[(x, G.inv[g])] = self.left[(g, x)]
        return Bibundle(H, G, self.carrier, dict(self.jH), dict(self.jG),
                        left, right)


def bibundle_compose(E, F):
    """E x_{H0} F / H with canonical lexicographically-least orbit
    representatives, so repeated runs label the carrier identically."""
    if E.H is not F.G and E.H != F.G:
        raise ValueError("middle groupoids do not match")
    if not E.is_right_principal():
        raise ValueError("first bibundle is not right-principal")
    if not F.is_right_principal():
        raise ValueError("second bibundle is not right-principal")
    H = E.H
    pairs = [(x, y) for x in E.carrier for y in F.carrier
             if E.jH[x] == F.jG[y]]
    # orbit of (x, y) under (x, y) . h = (x h, h^{-1} y)
    seen = {}
    orbits = []
    for p in pairs:
        if p in seen:
            continue
        orbit = set()
        stack = [p]
        while stack:
            q = stack.pop()
            if q in orbit:
                continue
            orbit.add(q)
            x, y = q
            for h in H.arrows:
                if (x, h) in E.right and (H.inv[h], y) in F.left:
                    q2 = (E.right[(x, h)], F.left[(H.inv[h], y)])
                    if q2 not in orbit:
                        stack.append(q2)
        rep = min(orbit, key=repr)
        for q in orbit:
            seen[q] = rep
        orbits.append(rep)
    carrier = tuple(sorted(orbits, key=repr))
    jG = {rep: E.jG[rep[0]] for rep in carrier}
    jK = {rep: F.jH[rep[1]] for rep in carrier}
    left = {}
    for rep in carrier:
        x, y = rep
        for g in E.G.arrows:
            if (g, x) in E.left:
                left[(g, rep)] = seen[(E.left[(g, x)], y)]
    right = {}
    for rep in carrier:
        x, y = rep
        for k in F.H.arrows:
            if (y, k) in F.right:
                right[(rep, k)] = seen[(x, F.right[(y, k)])]
    return Bibundle(E.G, F.H, carrier, jG, jK, left, right)


def morita_check(G, H, E):
    """Morita bibundle test: both moments surjective, both actions
    fiberwise free and transitive."""
    if E.G is not G and E.G != G:
        return False
    if E.H is not H and E.H != H:
        return False
    return E.is_morita()


def two_morphism_search(E1, E2, budget=10**6):
    """Bi-equivariant bijection E1 -> E2, or None.

    Backtracking with equivariant closure: assigning one element forces
    its whole G x H orbit.  `budget` caps the number of extension steps.
    """
    if len(E1.carrier) != len(E2.carrier):
        return None
    sig1 = {x: (E1.jG[x], E1.jH[x]) for x in E1.carrier}
    sig2 = {y: (E2.jG[y], E2.jH[y]) for y in E2.carrier}
    from collections import Counter
    if Counter(sig1.values()) != Counter(sig2.values()):
        return None

    G, H = E1.G, E1.H
    steps = 0

    def propagate(assign, x, y):
        nonlocal steps
        stack = [(x, y)]
        local = {}
        while stack:
            a, b = stack.pop()
            steps += 1
            if steps > budget:
                raise SearchBudgetError(
                    f"2-morphism search exceeded budget of {budget} steps")
            cur = assign.get(a, local.get(a))
            if cur is not None:
                if cur != b:
                    return None
                continue
            if sig1[a] != sig2[b]:
                return None
            local[a] = b
            for g in G.arrows:
                if (g, a) in E1.left:
                    if (g, b) not in E2.left:
                        return None
                    stack.append((E1.left[(g, a)], E2.left[(g, b)]))
            for h in H.arrows:
                if (a, h) in E1.right:
                    if (b, h) not in E2.right:
                        return None
                    stack.append((E1.right[(a, h)], E2.right[(b, h)]))
        return local

    order = sorted(E1.carrier, key=repr)
    cand2 = sorted(E2.carrier, key=repr)

    def extend(assign):
        todo = [a for a in order if a not in assign]
        if not todo:
            return dict(assign) if len(set(assign.values())) == len(assign) else None
        a = todo[0]
        used = set(assign.values())
        for b in cand2:
            if b in used or sig2[b] != sig1[a]:
                continue
            local = propagate(assign, a, b)
            if local is None:
                continue
            merged = dict(assign)
            merged.update(local)
            if len(set(merged.values())) != len(merged):
                continue
            res = extend(merged)
            if res is not None:
                return res
        return None

    return extend({})


# ---------------------------------------------------------------------------
# Abelian coefficient groups and cocycles

class CyclicGroup:
    def __init__(self, n):
        self.n = n
        self.elements = tuple(range(n))
        self.zero = 0

    def add(self, a, b):
        return (a + b) % self.n

    def neg(self, a):
        return (-a) % self.n


class BoundedInts:
    """Z restricted to a window; leaving the window is an explicit error so
    that the enumeration stays exact."""

    def __init__(self, lo, hi):
        self.lo, self.hi = lo, hi
        self.elements = tuple(range(lo, hi + 1))
        self.zero = 0

    def add(self, a, b):
        c = a + b
        if not (self.lo <= c <= self.hi):
            raise OverflowError(f"cocycle value {c} outside window [{self.lo}, {self.hi}]")
        return c

    def neg(self, a):
        c = -a
        if not (self.lo <= c <= self.hi):
            raise OverflowError(f"cocycle value {c} outside window [{self.lo}, {self.hi}]")
        return c


class Cocycle:
    """K-valued function on composable arrow pairs."""

    def __init__(self, G, K, table):
        self.G = G
        self.K = K
        self.table = dict(table)

    def __call__(self, g, h):
        return self.table.get((g, h), self.K.zero)

    def identity_defects(self):
        """Triples violating c(g,h) + c(gh,k) = c(h,k) + c(g,hk)."""
        G, K = self.G, self.K
        bad = []
        for g in G.arrows:
            for h in G.arrows:
                if not G.composable(g, h):
                    continue
                for k in G.arrows:
                    if not G.composable(h, k):
                        continue
                    lhs = K.add(self(g, h), self(G.mult[(g, h)], k))
                    rhs = K.add(self(h, k), self(g, G.mult[(h, k)]))
                    if lhs != rhs:
                        bad.append((g, h, k, lhs, rhs))
        return bad

    def is_cocycle(self):
        return not self.identity_defects()


def cocycle_semidirect(G, c):
    """Arrows G1 x K with (g, x)(h, y) = (gh, x + y + c(g, h)).

    Units and inverses are inferred from the multiplication table, so the
    construction goes through for any c; the groupoid axioms then hold
    exactly when c satisfies the cocycle identity.
    """
    K = c.K
    arrows = tuple((g, x) for g in G.arrows for x in K.elements)
    src = {(g, x): G.src[g] for (g, x) in arrows}
    tgt = {(g, x): G.tgt[g] for (g, x) in arrows}
    mult = {}
    for (g, x) in arrows:
        for (h, y) in arrows:
            if G.composable(g, h):
                try:
                    val = K.add(K.add(x, y), c(g, h))
                except OverflowError:
                    raise
                mult[((g, x), (h, y))] = (G.mult[(g, h)], val)
    return FiniteGroupoid(G.objects, arrows, src, tgt, mult)


# ---------------------------------------------------------------------------
# Homomorphisms and 2-morphisms between them

class GroupoidHom:
    def __init__(self, G, H, obj, arr):
        self.G = G
        self.H = H
        self.obj = dict(obj)
        self.arr = dict(arr)

    def defects(self):
        v = []
        G, H = self.G, self.H
        for g in G.arrows:
            fg = self.arr.get(g)
            if fg is None:
                v.append(("missing", g))
                continue
            if H.src[fg] != self.obj[G.src[g]] or H.tgt[fg] != self.obj[G.tgt[g]]:
                v.append(("endpoints", g))
        for (g, h), k in G.mult.items():
            a = H.mult.get((self.arr[g], self.arr[h]))
            if a != self.arr[k]:
                v.append(("multiplicative", g, h, a, self.arr[k]))
        for x, u in G.unit.items():
            if self.arr[u] != H.unit[self.obj[x]]:
                v.append(("unit", x))
        return v

    def is_homomorphism(self):
        return not self.defects()

    def compose(self, other):
        """self after other."""
        obj = {x: self.obj[other.obj[x]] for x in other.G.objects}
        arr = {g: self.arr[other.arr[g]] for g in other.G.arrows}
        return GroupoidHom(other.G, self.H, obj, arr)


def is_two_morphism(f, g, alpha):
    """alpha: objects(f.G) -> arrows(f.H) a natural transformation f => g.

    Requires s(alpha(x)) = f0(x), t(alpha(x)) = g0(x) and
    g1(gamma) . alpha(x) = alpha(y) . f1(gamma) for every gamma: x -> y.
    """
    H = f.H
    for x in f.G.objects:
        a = alpha.get(x)
        if a is None:
            return False
        if H.src[a] != f.obj[x] or H.tgt[a] != g.obj[x]:
            return False
    for gamma in f.G.arrows:
        x, y = f.G.src[gamma], f.G.tgt[gamma]
        lhs = H.mult.get((g.arr[gamma], alpha[x]))
        rhs = H.mult.get((alpha[y], f.arr[gamma]))
        if lhs is None or lhs != rhs:
            return False
    return True


def hom_two_morphisms(f, g, limit=None):
    """All natural transformations f => g (exhaustive product search)."""
    H = f.H
    xs = list(f.G.objects)
    candidates = [H.arrows_between(f.obj[x], g.obj[x]) for x in xs]
    found = []
    for combo in itertools.product(*candidates):
        alpha = dict(zip(xs, combo))
        if is_two_morphism(f, g, alpha):
            found.append(alpha)
            if limit is not None and len(found) >= limit:
                break
    return found
