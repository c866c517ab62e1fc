"""Constant-curvature model spaces in a single rational chart.

For curvature J = 0 the chart is Cartesian with metric diag(+1..-1) by
signature.  For J != 0 we use the stereographic chart

    g_ab = sigma(x)^-2 eta_ab,   sigma = 1 + (c/4) <x,x>_eta,   c = 2J/n,

which keeps every component of the metric, the Christoffel symbols and the
curvature a rational function of the coordinates, so all identities can be
checked exactly.  J is the trace of the Schouten tensor, J = Sc / (2(n-1)).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from .exactfield import Poly, RatFun, default_vars, register_irreducible
from .tensorfield import TensorField, scalar_field

DISPLAY_NAMES = ("x", "y", "z", "w", "u", "v")


class ModelSpace:
    """A constant-curvature chart with exact metric data."""

    def __init__(self, n, signature, J, chart, g=None, g_inv=None):
        p, q = signature
        if p + q != n:
            raise ValueError("signature (%d,%d) incompatible with dimension %d" % (p, q, n))
        if n < 2:
            raise ValueError("dimension must be at least 2")
        J = Fraction(J)
        if chart not in ("cartesian", "stereographic"):
            raise ValueError("unknown chart %r" % (chart,))
        if chart == "cartesian" and J != 0:
            raise ValueError("the Cartesian chart requires J = 0")
        self.n = n
        self.signature = (p, q)
        self.J = J
        self.chart = chart
        self.vars = default_vars(n)
        self.names = DISPLAY_NAMES[:n]
        self.eta = tuple([1] * p + [-1] * q)
        self.curvature_c = Fraction(2) * J / n
        one = Poly.const(self.vars, 1)
        if J == 0:
            self.sigma = one
        else:
            quad = {(0,) * n: Fraction(1)}
            for i in range(n):
                e = [0] * n
                e[i] = 2
                quad[tuple(e)] = self.curvature_c * self.eta[i] / 4
            self.sigma = Poly(self.vars, quad)
            # the conformal factor is irreducible (rank >= 2 quadric) and is
            # the only denominator the chart ever produces: registering it
            # makes the dominant cancellation gcds a pair of integer probes
            register_irreducible(self.sigma)
        self._custom = g is not None
        if g is not None:
            # rebind the provided metric to this space so field compatibility
            # checks treat it as native
            self.g = TensorField(self, g.variance, dict(g.comp), g.sym, _canonical=True)
            self.g_inv = (TensorField(self, g_inv.variance, dict(g_inv.comp), g_inv.sym,
                                      _canonical=True)
                          if g_inv is not None else _invert_metric(self, self.g))
        else:
            sig_rf = RatFun.from_poly(self.sigma)
            self.g = TensorField(self, ("d", "d"), {
                (i, i): RatFun.const(self.vars, self.eta[i]) / (sig_rf * sig_rf)
                for i in range(n)
            }, (("s", (0, 1)),))
            self.g_inv = TensorField(self, ("u", "u"), {
                (i, i): RatFun.const(self.vars, self.eta[i]) * (sig_rf * sig_rf)
                for i in range(n)
            }, (("s", (0, 1)),))
        self._cache: dict = {}

    # -- identity ------------------------------------------------------------

    def key(self) -> tuple:
        return (self.n, self.signature, self.J, self.chart,
                id(self) if self._custom else 0)

    def __repr__(self):
        return "ModelSpace(n=%d, signature=%s, J=%s, chart=%s)" % (
            self.n, self.signature, self.J, self.chart)

    def label(self) -> str:
        kind = "flat" if self.J == 0 else ("sphere" if self.J > 0 else "hyperbolic")
        return "%s-n%d-sig%d%d-J%s" % (kind, self.n, *self.signature, self.J)

    # -- scalar helpers --------------------------------------------------------

    def const(self, c) -> RatFun:
        return RatFun.const(self.vars, c)

    def coord(self, i: int) -> RatFun:
        return RatFun.variable(self.vars, i)

    def sigma_rf(self) -> RatFun:
        return RatFun.from_poly(self.sigma)

    def zero_rf(self) -> RatFun:
        return RatFun.zero(self.vars)

    # -- geometry ----------------------------------------------------------------

    @property
    def christoffel(self) -> TensorField:
        """Levi-Civita connection coefficients, index layout Gamma^c_{ab} as
        slots (c up, a down, b down), symmetric in the lower pair."""
        if "christoffel" not in self._cache:
            n = self.n
            dg = {}
            for (a, b), v in self.g.items():
                for c in range(n):
                    w = v.partial(c)
                    if not w.is_zero():
                        dg[(c, a, b)] = w
            acc = {}
            for c in range(n):
                for a in range(n):
                    for b in range(a, n):
                        total = self.zero_rf()
                        for d in range(n):
                            gi = self.g_inv.get((c, d))
                            if gi is None:
                                continue
                            term = self.zero_rf()
                            for piece in (dg.get((a, b, d)), dg.get((b, a, d))):
                                if piece is not None:
                                    term = term + piece
                            down = dg.get((d, a, b))
                            if down is not None:
                                term = term - down
                            if not term.is_zero():
                                total = total + gi * term
                        if not total.is_zero():
                            acc[(c, a, b)] = total * Fraction(1, 2)
            self._cache["christoffel"] = TensorField(
                self, ("u", "d", "d"), acc, (("s", (1, 2)),))
        return self._cache["christoffel"]

    def covariant_derivative(self, t: TensorField) -> TensorField:
        """One extra down slot in the first position.

        For fields whose declared symmetries are antisymmetric pairs (every
        tractor slot block) the canonical storage is iterated directly and
        contributions accumulate into canonical output slots; orbits there
        have constant size two, which makes the contribution count exact.
        Symmetric groups fall back to expanded iteration."""
        n = self.n
        gamma = self.christoffel
        variance = ("d",) + t.variance
        sym = tuple((k, tuple(s + 1 for s in slots)) for k, slots in t.sym)
        fast = all(kind == "a" and len(slots) == 2 for kind, slots in t.sym)
        acc: dict = {}
        if fast:
            target = TensorField(self, variance, {}, sym, _canonical=True)
            canon = target._canon

            def add(idx, v):
                r, sign = canon(idx)
                if sign == 0:
                    return
                if sign == -1:
                    v = -v
                w = acc.get(r)
                w = v if w is None else w + v
                if w.is_zero():
                    acc.pop(r, None)
                else:
                    acc[r] = w

            items = list(t.comp.items())
        else:
            def add(idx, v):
                w = acc.get(idx)
                w = v if w is None else w + v
                if w.is_zero():
                    acc.pop(idx, None)
                else:
                    acc[idx] = w

            items = list(t.items())
        for idx, v in items:
            for c in range(n):
                dv = v.d(c)
                if not dv.is_zero():
                    add((c,) + idx, dv)
        for idx, v in items:
            for pos, var in enumerate(t.variance):
                e = idx[pos]
                for c in range(n):
                    for f in range(n):
                        # up slot: + Gamma^f_{c e} T^..e.. ; down: - Gamma^e_{c f} T_..e..
                        gm = gamma.get((f, c, e) if var == "u" else (e, c, f))
                        if gm is None:
                            continue
                        nidx = (c,) + idx[:pos] + (f,) + idx[pos + 1:]
                        add(nidx, gm * v if var == "u" else -(gm * v))
        return TensorField(self, variance, acc, sym, _canonical=fast)

    def laplacian(self, t: TensorField) -> TensorField:
        """Trace of the second covariant derivative; preserves valence."""
        dd = self.covariant_derivative(self.covariant_derivative(t))
        return dd.raise_index(0).contract(0, 1)

    def gradient(self, f: RatFun) -> TensorField:
        return self.covariant_derivative(scalar_field(self, f))

    @property
    def curvature(self) -> "CurvatureData":
        if "curvature" not in self._cache:
            self._cache["curvature"] = CurvatureData(self)
        return self._cache["curvature"]


def _invert_metric(space, g: TensorField) -> TensorField:
    """Exact inverse via adjugate; used for the corrupted-metric controls."""
    n = space.n
    rows = [[g.component((i, j)) for j in range(n)] for i in range(n)]

    def det(mat):
        if len(mat) == 1:
            return mat[0][0]
        total = RatFun.zero(space.vars)
        for j in range(len(mat)):
            minor = [r[:j] + r[j + 1:] for r in mat[1:]]
            term = mat[0][j] * det(minor)
            total = total + (term if j % 2 == 0 else -term)
        return total

    d = det(rows)
    if d.is_zero():
        raise ValueError("metric is not invertible")
    comp = {}
    for i in range(n):
        for j in range(n):
            minor = [r[:j] + r[j + 1:] for k, r in enumerate(rows) if k != i]
            cof = det(minor) if minor else RatFun.one(space.vars)
            if (i + j) % 2:
                cof = -cof
            val = cof / d
            if not val.is_zero():
                comp[(j, i)] = val
    return TensorField(space, ("u", "u"), comp, (("s", (0, 1)),))


class CurvatureData:
    """Christoffel symbols and curvature tensors of a model space.

    ``riemann`` has the index layout R_ab^c_d (slots a,b down / c up / d
    down) defined by the commutator convention on vector fields."""

    def __init__(self, space: ModelSpace):
        self.space = space
        n = space.n
        gamma = space.christoffel
        dgamma = space_partial_table(space, gamma)
        acc = {}
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    for d in range(n):
                        total = space.zero_rf()
                        t1 = dgamma.get((a, c, b, d))
                        if t1 is not None:
                            total = total + t1
                        t2 = dgamma.get((b, c, a, d))
                        if t2 is not None:
                            total = total - t2
                        for e in range(n):
                            g1a = gamma.get((c, a, e))
                            g1b = gamma.get((e, b, d))
                            if g1a is not None and g1b is not None:
                                total = total + g1a * g1b
                            g2a = gamma.get((c, b, e))
                            g2b = gamma.get((e, a, d))
                            if g2a is not None and g2b is not None:
                                total = total - g2a * g2b
                        if not total.is_zero():
                            acc[(a, b, c, d)] = total
        self.christoffel = gamma
        self.riemann = TensorField(space, ("d", "d", "u", "d"), acc)
        self.riemann_lower = self.riemann.lower_index(2)
        # Ricci: contract the up slot against the first down slot
        self.ricci = self.riemann.contract(2, 0)
        self.schouten = self.ricci.scale(Fraction(1, 2 * (n - 1)))
        self.j_check = self.schouten.raise_index(0).contract(0, 1).component(())


def space_partial_table(space: ModelSpace, t: TensorField) -> dict:
    """Plain partial derivatives of all components: key (deriv, *index)."""
    out = {}
    for idx, v in t.items():
        for c in range(space.n):
            dv = v.partial(c)
            if not dv.is_zero():
                out[(c,) + idx] = dv
    return out


def make_model(n: int, signature, J, chart: str) -> ModelSpace:
    """Build a model space; the metric follows the J = 0 / stereographic rule."""
    return ModelSpace(n, tuple(signature), J, chart)


_FLEET: Optional[list] = None


def fleet() -> list:
    """The test fleet: n in {2,3}, J in {0, +-1} resp. {0, +-3/2}, both the
    Riemannian and the Lorentzian signature.  Instances are shared so their
    caches (curvature, operator tables, bases) are computed once."""
    global _FLEET
    if _FLEET is None:
        models = []
        for n, js in ((2, (0, 1, -1)), (3, (0, Fraction(3, 2), -Fraction(3, 2)))):
            for sig in ((n, 0), (n - 1, 1)):
                for J in js:
                    chart = "cartesian" if J == 0 else "stereographic"
                    models.append(make_model(n, sig, J, chart))
        _FLEET = models
    return _FLEET


class SpaceFormReport:
    """Outcome of the exact space-form identity checks."""

    def __init__(self):
        self.failures: list[tuple] = []

    def fail(self, identity: str, idx, value):
        self.failures.append((identity, idx, str(value)))

    @property
    def ok(self) -> bool:
        return not self.failures

    def first(self):
        return self.failures[0] if self.failures else None

    def to_json(self):
        return {"ok": self.ok,
                "failures": [{"identity": i, "component": list(c), "value": v}
                             for i, c, v in self.failures]}


def verify_space_form(space: ModelSpace) -> SpaceFormReport:
    """Check the constant-curvature identities exactly.

    R_abcd = (4/n) J g_c[a g_b]d, vanishing Weyl part, P = (J/n) g with
    trace J, parallel curvature, and metric compatibility of the connection.
    """
    rep = SpaceFormReport()
    n = space.n
    J = space.J
    cur = space.curvature
    g = space.g

    # metricity
    nabla_g = space.covariant_derivative(g)
    for idx, v in nabla_g.items():
        rep.fail("metricity: nabla g = 0", idx, v)
        break

    # constant-curvature form of the Riemann tensor
    expect = {}
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    ca = g.get((c, a))
                    bd = g.get((b, d))
                    cb = g.get((c, b))
                    ad = g.get((a, d))
                    total = space.zero_rf()
                    if ca is not None and bd is not None:
                        total = total + ca * bd
                    if cb is not None and ad is not None:
                        total = total - cb * ad
                    total = total * (Fraction(2) * J / n)
                    if not total.is_zero():
                        expect[(a, b, c, d)] = total
    diff = cur.riemann_lower - TensorField(space, ("d", "d", "d", "d"), expect)
    for idx, v in diff.items():
        rep.fail("space form: R_abcd = (4/n) J g_c[a g_b]d", idx, v)
        break

    # Schouten tensor and its trace
    p_expect = g.scale(J / n)
    pdiff = cur.schouten - p_expect
    for idx, v in pdiff.items():
        rep.fail("Schouten: P = (J/n) g", idx, v)
        break
    if cur.j_check != space.const(J):
        rep.fail("Schouten trace: P^a_a = J", (), cur.j_check)

    # Weyl part of the decomposition must vanish
    weyl = dict(cur.riemann_lower.items())
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    total = space.zero_rf()
                    for s, (i1, j1, i2, j2) in (
                        (1, (c, a, b, d)), (-1, (c, b, a, d)),
                        (1, (d, b, a, c)), (-1, (d, a, b, c)),
                    ):
                        gv = g.get((i1, j1))
                        pv = cur.schouten.get((i2, j2))
                        if gv is not None and pv is not None:
                            total = total + (gv * pv if s == 1 else -(gv * pv))
                    if not total.is_zero():
                        key = (a, b, c, d)
                        w = weyl.get(key)
                        w = -total if w is None else w - total
                        if w.is_zero():
                            weyl.pop(key, None)
                        else:
                            weyl[key] = w
    for idx, v in sorted(weyl.items()):
        rep.fail("Weyl: C_abcd = 0", idx, v)
        break

    # parallel curvature
    nabla_r = space.covariant_derivative(cur.riemann_lower)
    for idx, v in nabla_r.items():
        rep.fail("parallel curvature: nabla R = 0", idx, v)
        break
    return rep
