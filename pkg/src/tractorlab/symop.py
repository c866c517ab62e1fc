"""Linear differential operators on scalars, in canonical form.

A ``DiffOp`` is stored by its canonical coefficient tensors: for each order r
a fully symmetric valence-r tensor a^{b_1..b_r}, the operator being
sum_r a^{b_1..b_r} nabla_{b_1} .. nabla_{b_r}.  Internally every operator
also has a partial-derivative form (coefficients of the commuting coordinate
partials), which makes composition, commutators and application exact and
mechanical; converting back by peeling the top order re-absorbs all curvature
terms into lower orders, which is exactly the canonicalization the coefficient
contract requires.  The two forms are in exact bijection on a fixed chart, so
canonical-coefficient equality coincides with operator equality.

The second half of the module builds the symmetry operators attached to
Killing tensors from their prolongations and verifies commutation with the
Laplacian, together with the explicit low-order formulas and the algebra
relations for composed symmetries.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Dict, Optional

from .exactfield import RatFun
from .tensorfield import TensorField, scalar_field, zero_tensor

Alpha = tuple  # partial-derivative multi-index, one entry per coordinate


def _alpha_factorial(alpha: Alpha) -> int:
    out = 1
    for k in alpha:
        out *= math.factorial(k)
    return out


def _multiset_orderings(alpha: Alpha) -> int:
    """Number of ordered index tuples (b_1..b_r) with multiset alpha."""
    return math.factorial(sum(alpha)) // _alpha_factorial(alpha)


def _alpha_of(idx: tuple, n: int) -> Alpha:
    counts = [0] * n
    for i in idx:
        counts[i] += 1
    return tuple(counts)


def _rep_of_alpha(alpha: Alpha) -> tuple:
    out = []
    for i, k in enumerate(alpha):
        out.extend([i] * k)
    return tuple(out)


class OpForm:
    """Operator in partial-derivative form: map alpha -> RatFun coefficient.

    Supports the value protocol of the tensor layer (add, negate, multiply
    by a RatFun on the left, ``d(i)`` = compose with the i-th coordinate
    partial), so tensor and tractor machinery can carry operator-valued
    components transparently.
    """

    __slots__ = ("space", "terms")

    def __init__(self, space, terms: Optional[Dict[Alpha, RatFun]] = None):
        self.space = space
        self.terms = {}
        if terms:
            for a, c in terms.items():
                if not c.is_zero():
                    self.terms[tuple(a)] = c

    @classmethod
    def identity(cls, space) -> "OpForm":
        return cls(space, {(0,) * space.n: RatFun.one(space.vars)})

    @classmethod
    def partial_op(cls, space, i: int) -> "OpForm":
        a = [0] * space.n
        a[i] = 1
        return cls(space, {tuple(a): RatFun.one(space.vars)})

    def is_zero(self) -> bool:
        return not self.terms

    def order(self) -> int:
        return max((sum(a) for a in self.terms), default=0)

    def __add__(self, other: "OpForm") -> "OpForm":
        acc = dict(self.terms)
        for a, c in other.terms.items():
            w = acc.get(a)
            w = c if w is None else w + c
            if w.is_zero():
                acc.pop(a, None)
            else:
                acc[a] = w
        out = OpForm(self.space)
        out.terms = acc
        return out

    def __sub__(self, other: "OpForm") -> "OpForm":
        return self + (-other)

    def __neg__(self) -> "OpForm":
        out = OpForm(self.space)
        out.terms = {a: -c for a, c in self.terms.items()}
        return out

    def __mul__(self, c) -> "OpForm":
        """Left multiplication by a function or constant."""
        if isinstance(c, (int, Fraction)):
            c = RatFun.const(self.space.vars, c)
        if c.is_zero():
            return OpForm(self.space)
        out = OpForm(self.space)
        out.terms = {a: c * v for a, v in self.terms.items()}
        return out

    __rmul__ = __mul__

    def d(self, i: int) -> "OpForm":
        """Compose with the coordinate partial: partial_i after self."""
        acc: Dict[Alpha, RatFun] = {}
        for a, c in self.terms.items():
            na = a[:i] + (a[i] + 1,) + a[i + 1:]
            w = acc.get(na)
            w = c if w is None else w + c
            if w.is_zero():
                acc.pop(na, None)
            else:
                acc[na] = w
            dc = c.partial(i)
            if not dc.is_zero():
                w = acc.get(a)
                w = dc if w is None else w + dc
                if w.is_zero():
                    acc.pop(a, None)
                else:
                    acc[a] = w
        out = OpForm(self.space)
        out.terms = acc
        return out

    def compose(self, other: "OpForm") -> "OpForm":
        """self after other: expand partial^a (e_b partial^b) by Leibniz."""
        n = self.space.n
        acc: Dict[Alpha, RatFun] = {}
        for a, c in self.terms.items():
            for b, e in other.terms.items():
                for gamma, mult in _alpha_splittings(a):
                    de = e
                    ok = True
                    for i in range(n):
                        for _ in range(gamma[i]):
                            de = de.partial(i)
                            if de.is_zero():
                                ok = False
                                break
                        if not ok:
                            break
                    if not ok or de.is_zero():
                        continue
                    rest = tuple(a[i] - gamma[i] + b[i] for i in range(n))
                    w = c * de if mult == 1 else c * de * mult
                    prev = acc.get(rest)
                    w = w if prev is None else prev + w
                    if w.is_zero():
                        acc.pop(rest, None)
                    else:
                        acc[rest] = w
        out = OpForm(self.space)
        out.terms = acc
        return out

    def apply(self, f: RatFun) -> RatFun:
        total = RatFun.zero(self.space.vars)
        for a, c in self.terms.items():
            g = f
            for i, k in enumerate(a):
                for _ in range(k):
                    g = g.partial(i)
                    if g.is_zero():
                        break
                if g.is_zero():
                    break
            if not g.is_zero():
                total = total + c * g
        return total

    def __eq__(self, other):
        if not isinstance(other, OpForm):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(tuple(sorted(self.terms.items())))


def _alpha_splittings(a: Alpha):
    """All (gamma, binomial multiplicity) with gamma <= a componentwise."""
    ranges = [range(k + 1) for k in a]
    for gamma in itertools.product(*ranges):
        mult = 1
        for ai, gi in zip(a, gamma):
            mult *= math.comb(ai, gi)
        yield gamma, mult


# ---------------------------------------------------------------------------
# covariant-derivative tables: nabla_{b_1}..nabla_{b_r} f expanded over
# coordinate partials, cached per model space
# ---------------------------------------------------------------------------


def covd_table(space, r: int) -> dict:
    """Map (b_1..b_r) -> {alpha: RatFun} for iterated covariant derivatives
    of a scalar, outermost derivative first."""
    key = ("covd", r)
    if key in space._cache:
        return space._cache[key]
    n = space.n
    if r == 0:
        table = {(): {(0,) * n: RatFun.one(space.vars)}}
    else:
        prev = covd_table(space, r - 1)
        gamma = space.christoffel
        table = {}
        for bs, form in prev.items():
            for b0 in range(n):
                acc: Dict[Alpha, RatFun] = {}

                def add(alpha, v):
                    w = acc.get(alpha)
                    w = v if w is None else w + v
                    if w.is_zero():
                        acc.pop(alpha, None)
                    else:
                        acc[alpha] = w

                for alpha, c in form.items():
                    na = alpha[:b0] + (alpha[b0] + 1,) + alpha[b0 + 1:]
                    add(na, c)
                    dc = c.partial(b0)
                    if not dc.is_zero():
                        add(alpha, dc)
                for pos in range(r - 1):
                    for e in range(n):
                        gm = gamma.get((e, b0, bs[pos]))
                        if gm is None:
                            continue
                        sub = prev[bs[:pos] + (e,) + bs[pos + 1:]]
                        for alpha, c in sub.items():
                            add(alpha, -(gm * c))
                table[(b0,) + bs] = acc
    space._cache[key] = table
    return table


def sym_covd_table(space, r: int) -> dict:
    """Map alpha (multiset of r indices) -> {partial alpha: RatFun}: the sum
    of covd_table entries over all orderings with that multiset."""
    key = ("symcovd", r)
    if key in space._cache:
        return space._cache[key]
    n = space.n
    table = covd_table(space, r)
    out: dict = {}
    for bs, form in table.items():
        a = _alpha_of(bs, n)
        if a not in out:
            out[a] = {}
        acc = out[a]
        for alpha, c in form.items():
            w = acc.get(alpha)
            w = c if w is None else w + c
            if w.is_zero():
                acc.pop(alpha, None)
            else:
                acc[alpha] = w
    space._cache[key] = out
    return out


# ---------------------------------------------------------------------------
# DiffOp
# ---------------------------------------------------------------------------


class DiffOp:
    """Differential operator on scalars with canonical symmetric coefficients."""

    __slots__ = ("space", "coeffs", "_pform")

    def __init__(self, space, coeffs: Dict[int, TensorField]):
        self.space = space
        self.coeffs = {}
        for r, t in coeffs.items():
            if t.is_zero():
                continue
            self.coeffs[r] = t
        self._pform = None

    @classmethod
    def zero(cls, space) -> "DiffOp":
        return cls(space, {})

    @classmethod
    def identity(cls, space) -> "DiffOp":
        return cls(space, {0: scalar_field(space, RatFun.one(space.vars))})

    @classmethod
    def from_scalar(cls, space, f: RatFun) -> "DiffOp":
        return cls(space, {0: scalar_field(space, f)})

    @property
    def order(self) -> int:
        return max(self.coeffs, default=0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def principal_symbol(self) -> TensorField:
        if not self.coeffs:
            return zero_tensor(self.space, ())
        return self.coeffs[self.order]

    # -- partial-derivative form ------------------------------------------------

    def pform(self) -> OpForm:
        if self._pform is None:
            out = OpForm(self.space)
            for r, tensor in self.coeffs.items():
                stable = sym_covd_table(self.space, r)
                # symmetric tensor: one representative per index multiset,
                # matched against the ordering-summed derivative table
                n = self.space.n
                seen = set()
                for idx, v in tensor.items():
                    a = _alpha_of(idx, n)
                    if a in seen:
                        continue
                    seen.add(a)
                    form = stable.get(a)
                    if form is None:
                        continue
                    for alpha, c in form.items():
                        w = out.terms.get(alpha)
                        piece = v * c
                        w = piece if w is None else w + piece
                        if w.is_zero():
                            out.terms.pop(alpha, None)
                        else:
                            out.terms[alpha] = w
            self._pform = out
        return self._pform

    @classmethod
    def from_pform(cls, space, form: OpForm) -> "DiffOp":
        """Canonicalize: peel symmetric coefficients from the top order down."""
        n = space.n
        coeffs: Dict[int, TensorField] = {}
        rem = OpForm(space)
        rem.terms = dict(form.terms)
        while rem.terms:
            m = rem.order()
            comp = {}
            for alpha, c in rem.terms.items():
                if sum(alpha) == m:
                    idx = _rep_of_alpha(alpha)
                    comp[idx] = c * Fraction(1, _multiset_orderings(alpha))
            tensor = TensorField(space, ("u",) * m, comp,
                                 (("s", tuple(range(m))),) if m > 1 else None,
                                 _canonical=True)
            coeffs[m] = tensor
            expand = cls(space, {m: tensor}).pform()
            rem = rem - expand
            if rem.order() >= m and rem.terms:
                top = [a for a in rem.terms if sum(a) >= m]
                if top:
                    raise AssertionError("canonicalization failed to reduce order")
        op = cls(space, coeffs)
        return op

    # -- algebra -------------------------------------------------------------------

    def _require_same_space(self, other: "DiffOp"):
        if self.space.key() != other.space.key():
            raise ValueError("operators over different model spaces")

    def compose(self, other: "DiffOp") -> "DiffOp":
        """Operator composition self . other (apply other first)."""
        self._require_same_space(other)
        return DiffOp.from_pform(self.space, self.pform().compose(other.pform()))

    def commutator(self, other: "DiffOp") -> "DiffOp":
        self._require_same_space(other)
        ab = self.pform().compose(other.pform())
        ba = other.pform().compose(self.pform())
        return DiffOp.from_pform(self.space, ab - ba)

    def apply(self, f: RatFun) -> RatFun:
        return self.pform().apply(f)

    def __add__(self, other: "DiffOp") -> "DiffOp":
        self._require_same_space(other)
        coeffs = dict(self.coeffs)
        for r, t in other.coeffs.items():
            if r in coeffs:
                s = coeffs[r] + t
                if s.is_zero():
                    del coeffs[r]
                else:
                    coeffs[r] = s
            else:
                coeffs[r] = t
        return DiffOp(self.space, coeffs)

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        return self + other.scale(-1)

    def scale(self, c) -> "DiffOp":
        return DiffOp(self.space, {r: t.scale(c) for r, t in self.coeffs.items()})

    def __eq__(self, other):
        if not isinstance(other, DiffOp):
            return NotImplemented
        if self.space.key() != other.space.key():
            return False
        if set(self.coeffs) != set(other.coeffs):
            return False
        return all(self.coeffs[r] == other.coeffs[r] for r in self.coeffs)

    def __hash__(self):
        return hash(tuple(sorted(self.coeffs)))

    # -- display -----------------------------------------------------------------

    def __str__(self):
        return self.to_text()

    __repr__ = __str__

    def to_text(self) -> str:
        """Human form in partial-derivative monomials, e.g. ``x dy - y dx``."""
        names = self.space.names
        form = self.pform()
        if form.is_zero():
            return "0"
        pieces = []
        def _order(alpha):
            c = form.terms[alpha]
            negative = str(c).startswith("-")
            return (-sum(alpha), 1 if negative else 0, tuple(-k for k in alpha))
        for alpha in sorted(form.terms, key=_order):
            c = form.terms[alpha]
            mono = " ".join(
                ("d%s^%d" % (names[i], k) if k > 1 else "d%s" % names[i])
                for i, k in enumerate(alpha) if k
            )
            cs = c.to_str(names)
            negative = cs.startswith("-")
            if negative:
                cs = cs[1:]
            if ("+" in cs or "- " in cs) or ("/" in cs and not c.is_const()):
                cs = "(%s)" % cs
            if mono:
                body = mono if cs == "1" else "%s %s" % (cs, mono)
            else:
                body = cs
            pieces.append(("- " if negative else "+ ") + body)
        s = " ".join(pieces)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "coefficients": {str(r): t.to_json() for r, t in sorted(self.coeffs.items())},
            "text": self.to_text(),
        }


def laplace_op(space) -> DiffOp:
    """The Laplacian as a canonical operator: top coefficient g^{ab}."""
    key = ("laplace_op",)
    if key not in space._cache:
        space._cache[key] = DiffOp(space, {2: space.g_inv})
    return space._cache[key]


# ---------------------------------------------------------------------------
# symmetry operators from prolonged Killing tensors
# ---------------------------------------------------------------------------

from .killing import (  # noqa: E402  (cycle-free: killing does not import symop)
    killing_basis,
    killing_check,
    killing_residual,
    prolong,
)
from .tractor import (  # noqa: E402
    TractorField,
    adjoint_h_contract,
    bracket,
    dual_pairing,
    expand_to_standard,
    fundamental_D,
    tractor_product,
)


def d_op_tower(space, ell: int) -> TractorField:
    """The l-fold iterated fundamental derivative applied to a generic
    scalar, as an operator-valued tractor field (outermost slot first)."""
    key = ("d_op_tower", ell)
    if key in space._cache:
        return space._cache[key]
    F = TractorField(space, (), (), {(): TensorField(
        space, (), {(): OpForm.identity(space)}, None, _canonical=True)})
    for _ in range(ell):
        F = fundamental_D(F)
    space._cache[key] = F
    return F


def operator_from_tractor(S: TractorField, ell: int) -> DiffOp:
    """Contract an l-fold adjoint field against the iterated fundamental
    derivative and canonicalize the resulting scalar operator."""
    space = S.space
    if ell == 0:
        return DiffOp.from_scalar(space, S.part(()).component(()))
    raw = dual_pairing(S, d_op_tower(space, ell)).component(())
    if not isinstance(raw, OpForm):
        # zero contraction
        return DiffOp.zero(space)
    return DiffOp.from_pform(space, raw)


def build_symmetry(k: TensorField) -> DiffOp:
    """The canonical symmetry operator attached to a symmetric tensor: the
    full contraction of its prolongation with the iterated fundamental
    derivative.  For a Killing tensor it commutes with the Laplacian."""
    space = k.space
    ell = k.valence
    if ell == 0:
        return DiffOp.from_scalar(space, k.component(()))
    P = prolong(k)
    return operator_from_tractor(P.tractor, ell)


class SymmetryCertificate:
    """Outcome of the exact commutation check for a symmetry operator."""

    def __init__(self, operator: DiffOp, residual: DiffOp,
                 killing_tensor=None, formula_deltas=None):
        self.operator = operator
        self.residual = residual
        self.killing_tensor = killing_tensor
        self.formula_deltas = formula_deltas or {}
        self.top_matches_residual_rule = None

    @property
    def commutes(self) -> bool:
        return self.residual.is_zero()

    def to_json(self) -> dict:
        return {
            "commutes": self.commutes,
            "residual_order": self.residual.order if not self.residual.is_zero() else None,
            "operator": self.operator.to_json(),
            "formula_deltas": {k: str(v) for k, v in self.formula_deltas.items()},
        }


def verify_symmetry(D: DiffOp, space=None) -> SymmetryCertificate:
    """Exact commutator with the Laplacian, plus the principal-symbol rule:
    the top coefficient of [Delta, D] is twice the symmetrized derivative of
    D's principal symbol."""
    space = space or D.space
    lap = laplace_op(space)
    residual = lap.commutator(D)
    cert = SymmetryCertificate(D, residual)
    symbol = D.principal_symbol()
    if D.order >= 1 and symbol.valence == D.order:
        expected_top = killing_residual(symbol).scale(2)
        actual_top = residual.coeffs.get(D.order + 1)
        if expected_top.is_zero():
            cert.top_matches_residual_rule = actual_top is None
        else:
            cert.top_matches_residual_rule = (actual_top == expected_top)
    return cert


# ---------------------------------------------------------------------------
# explicit low-order formulas
# ---------------------------------------------------------------------------


def divergence(k: TensorField) -> TensorField:
    """Contract the derivative index into the first slot: nabla_r k^{r...}."""
    return k.space.covariant_derivative(k).contract(1, 0)


def trace_last(k: TensorField) -> TensorField:
    """Contract the last two slots with the metric."""
    v = k.valence
    return k.lower_index(v - 1).contract(v - 2, v - 1)


def order3_trace_identities(k: TensorField) -> dict:
    """The divergence/trace identities satisfied by valence-3 Killing
    tensors; returns the three differences (all must vanish).

    The first holds with the free pair symmetrized; the second carries the
    curvature correction forced by commuting the contracted derivatives,
    div div k + (1/2) Lap tr k + ((n-1)/n) J tr k = 0.  Both reduce to the
    commonly quoted flat-space shorthands when J = 0."""
    space = k.space
    n = space.n
    div = divergence(k)                      # nabla_r k^{rab}
    tr = trace_last(k)                       # k^{ar}_r
    grad_tr = space.covariant_derivative(tr).raise_index(0)   # nabla^a tr^b
    divdiv = divergence(div)                 # nabla_s nabla_r k^{rsa}
    lap_tr = space.laplacian(tr)
    div_trace = trace_last(div)
    return {
        "div_plus_grad_trace": div + grad_tr.symmetrize(),
        "divdiv_plus_lap_trace": divdiv + lap_tr.scale(Fraction(1, 2))
        + tr.scale(Fraction(n - 1, n) * space.J),
        "trace_of_div": div_trace,
    }


def explicit_order3(k: TensorField) -> DiffOp:
    """Closed form of the valence-3 symmetry operator; asserts the trace
    identities first and must coincide with the tractor construction."""
    space = k.space
    if k.valence != 3:
        raise ValueError("expected a valence-3 tensor")
    ok, _ = killing_check(k)
    if not ok:
        raise ValueError("input is not a Killing tensor")
    idents = order3_trace_identities(k)
    for name, diff in idents.items():
        if not diff.is_zero():
            raise AssertionError("trace identity %s violated" % name)
    div = divergence(k)
    divdiv = divergence(div)
    tr = trace_last(k)
    n = space.n
    first_order = divdiv.scale(Fraction(1, 4)) + \
        tr.scale(-Fraction(n - 1, 2 * n) * space.J)
    coeffs = {3: k.symmetrize(), 2: div.symmetrize().scale(Fraction(3, 2))}
    if not first_order.is_zero():
        coeffs[1] = first_order
    return DiffOp(space, coeffs)


def invariant_scalar_order2(k: TensorField) -> RatFun:
    """Full adjoint-metric contraction of the valence-2 prolongation; a
    constant for Killing inputs, with the closed form
    (1/4)[-div div k + (2(n+1)/n) J tr k]."""
    space = k.space
    if k.valence != 2:
        raise ValueError("expected a valence-2 tensor")
    P = prolong(k)
    scal = adjoint_h_contract(P.tractor, 0, 1).part(()).component(())
    return scal


def invariant_scalar_order2_closed_form(k: TensorField) -> RatFun:
    space = k.space
    divdiv = divergence(divergence(k)).component(())
    tr = trace_last(k).component(())
    n = space.n
    return (tr * (Fraction(2 * (n + 1), n) * space.J) - divdiv) * Fraction(1, 4)


def invariant_vector_order3(k: TensorField) -> TensorField:
    """h-contraction of the two adjoint slots of the partial (two-step)
    prolongation of a valence-3 Killing tensor: a Killing vector field."""
    space = k.space
    if k.valence != 3:
        raise ValueError("expected a valence-3 tensor")
    from .killing import prolong_step
    F = TractorField(space, (), ("u", "u", "u"), {(): k})
    F = prolong_step(prolong_step(F))
    vec = adjoint_h_contract(F, 0, 1)
    return vec.part(())


def invariant_scalars(k: TensorField) -> dict:
    """The metric-tractor contractions attached to a Killing tensor.

    Valence 2: the full contraction, a constant scalar with a closed form in
    the divergences and the trace.  Valence 3: the partial contraction,
    a Killing vector field.  Returns the values together with the closed-form
    comparisons and certificates."""
    if k.valence == 2:
        value = invariant_scalar_order2(k)
        closed = invariant_scalar_order2_closed_form(k)
        if not value.is_const():
            raise AssertionError("order-2 invariant scalar is not constant")
        return {"scalar": value, "closed_form": closed, "matches": value == closed}
    if k.valence == 3:
        vec = invariant_vector_order3(k)
        closed = invariant_vector_order3_closed_form(k)
        return {"vector": vec, "closed_form": closed, "matches": vec == closed,
                "vector_is_killing": killing_check(vec)[0]}
    raise ValueError("invariant scalars are defined for valence 2 and 3")


def invariant_vector_order3_closed_form(k: TensorField) -> TensorField:
    """-(1/8)[div div k - (2(n+3)/n) J tr k].

    The coefficients agree with the commonly quoted -(1/12)-form once the
    second trace identity is used in its shorthand form; with the exact
    curvature-corrected identity (see order3_trace_identities) the
    h-contraction evaluates to this expression, verified exactly on the
    whole fleet."""
    space = k.space
    n = space.n
    divdiv = divergence(divergence(k))
    tr = trace_last(k)
    return (divdiv - tr.scale(Fraction(2 * (n + 3), n) * space.J)).scale(Fraction(-1, 8))


# ---------------------------------------------------------------------------
# algebra of composed symmetries
# ---------------------------------------------------------------------------


def vector_commutator(k: TensorField, kc: TensorField) -> TensorField:
    """Lie bracket of vector fields, [k, kc]^a = k^b d_b kc^a - kc^b d_b k^a."""
    space = k.space
    n = space.n
    comp = {}
    for a in range(n):
        total = space.zero_rf()
        for b in range(n):
            kb = k.get((b,))
            cb = kc.get((b,))
            ca = kc.get((a,))
            ka = k.get((a,))
            if kb is not None and ca is not None:
                total = total + kb * ca.partial(b)
            if cb is not None and ka is not None:
                total = total - cb * ka.partial(b)
        if not total.is_zero():
            comp[(a,)] = total
    return TensorField(space, ("u",), comp)


def dd_skew_identity_check(space) -> bool:
    """The iterated fundamental derivative, expanded into standard-tractor
    slots, vanishes under skew-symmetrization over all four slot indices."""
    dd = d_op_tower(space, 2)
    std = expand_to_standard(dd)
    import itertools as _it
    total = None
    for perm in _it.permutations(range(4)):
        sign = 1
        for i in range(4):
            for j in range(i + 1, 4):
                if perm[i] > perm[j]:
                    sign = -sign
        t = std.permute_slots(perm)
        t = t if sign == 1 else -t
        total = t if total is None else total + t
    return total.is_zero()


def algebra_product(k: TensorField, kc: TensorField) -> dict:
    """Exact decomposition of a composition of two degree-one symmetries:
    the symmetric tractor part plus half the symmetry of the bracket.

    Returns the pieces and the residual of the decomposition (must vanish),
    plus the cross-check that the tractor bracket of the prolongations is
    the prolongation of the vector-field bracket."""
    space = k.space
    if k.valence != 1 or kc.valence != 1:
        raise ValueError("algebra decomposition is for Killing vectors")
    Dk = build_symmetry(k)
    Dkc = build_symmetry(kc)
    lhs = Dk.compose(Dkc)
    K = prolong(k).tractor
    Kc = prolong(kc).tractor
    sym_part = tractor_product(K, Kc).symmetrize_slots()
    op_sym = operator_from_tractor(sym_part, 2)
    kbr = vector_commutator(k, kc)
    op_br = build_symmetry(kbr)
    residual = lhs - (op_sym + op_br.scale(Fraction(1, 2)))
    bracket_matches = bracket(K, Kc) == prolong(kbr).tractor
    # the symmetric product of the two vectors gives the same operator as the
    # symmetric tractor part (the wedge component pairs to zero)
    kprod = k.tensor_product(kc).symmetrize()
    op_prod = build_symmetry(kprod)
    return {
        "compose": lhs,
        "sym_op": op_sym,
        "sym_op_from_product": op_prod,
        "bracket_op": op_br,
        "residual": residual,
        "bracket_matches_vector_commutator": bracket_matches,
        "sym_part_matches_product": op_sym == op_prod,
    }


# ---------------------------------------------------------------------------
# flat-space and trace-free special forms
# ---------------------------------------------------------------------------


def weyl_flat_symmetry(k: TensorField) -> DiffOp:
    """Flat-space symmetry operator with binomially weighted divergences:
    sum_i (1/2^i) C(l,i) (div^i k) nabla^{l-i}."""
    space = k.space
    if space.J != 0:
        raise ValueError("the quantization formula is for flat models")
    ok, _ = killing_check(k)
    if not ok:
        raise ValueError("input is not a Killing tensor")
    ell = k.valence
    coeffs: Dict[int, TensorField] = {}
    current = k
    for i in range(ell + 1):
        weight = Fraction(math.comb(ell, i), 2 ** i)
        t = current if current.valence == 0 else current.symmetrize()
        t = t.scale(weight)
        if not t.is_zero():
            coeffs[ell - i] = coeffs.get(ell - i, zero_tensor(space, ("u",) * (ell - i))) + t \
                if (ell - i) in coeffs else t
        if i < ell:
            current = divergence(current)
    return DiffOp(space, coeffs)


def tracefree_symmetry(k: TensorField) -> DiffOp:
    """For a trace-free Killing tensor the bare operator k nabla..nabla is
    already a symmetry; rejects inputs with nonzero metric trace."""
    ok, _ = killing_check(k)
    if not ok:
        raise ValueError("input is not a Killing tensor")
    if k.valence >= 2 and not trace_last(k).is_zero():
        raise ValueError("input tensor is not trace-free")
    return DiffOp(k.space, {k.valence: k.symmetrize() if k.valence > 1 else k})


def tracefree_combinations(space, valence: int = 2) -> list:
    """Exact kernel of the metric-trace map on the certified Killing basis.

    On the curved two-dimensional models this kernel is trivial (the trace
    map is injective there); flat models and the curved three-dimensional
    models have nontrivial trace-free Killing tensors."""
    from .linalg import exact_nullspace
    basis = killing_basis(space, valence)
    clear = RatFun.from_poly(space.sigma) ** valence
    traces = []
    for k in basis.elements:
        t = trace_last(k).component(()) * clear
        if not t.den.is_const():
            raise AssertionError("trace unexpectedly non-polynomial after clearing")
        traces.append(t)
    monos = sorted({e for t in traces for e in t.num.terms()})
    rows = [[t.num.terms().get(e, Fraction(0)) for t in traces] for e in monos]
    out = []
    for vec in exact_nullspace(rows, len(traces)):
        cand = None
        for c, k in zip(vec, basis.elements):
            if c:
                piece = k.scale(c)
                cand = piece if cand is None else cand + piece
        if cand is not None and not cand.is_zero():
            out.append(cand.symmetrize())
    return out
