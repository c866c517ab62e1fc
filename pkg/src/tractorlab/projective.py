"""Projective tractor calculus in the Levi-Civita scale, and the alternative
symmetry construction it induces.

The standard projective tractor bundle splits (in a chosen scale) into a
vector part and a scalar part; slots are stored with signature letters
'n' (vector, one upper index) / 'r' (scalar) for the bundle and 's' (scalar)
/ 'm' (one lower index) for its dual.  Densities are trivialized by the
Levi-Civita scale, so a field's projective weight is bookkeeping that only
feeds the middle slot of the invariant derivative below.

On the model spaces the projective Schouten tensor is twice the Riemannian
one, the exterior square of the dual standard bundle is isomorphic to the
Riemannian adjoint bundle (with the vector slot lowered and the two-form
slot doubled), and the parallel metric tractor h ties the two calculi
together; every identity used is checked exactly by the test suite.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Dict

from .exactfield import RatFun
from .killing import killing_check, prolong
from .symop import DiffOp, OpForm
from .tensorfield import TensorField, scalar_field, zero_tensor
from .tractor import BLOCK_VAR, TractorField, _acc_add, block_sizes

# extend the slot vocabulary with the projective bundle and its dual
BLOCK_VAR.setdefault(("P", "n"), "u")
BLOCK_VAR.setdefault(("P", "r"), "")
BLOCK_VAR.setdefault(("P*", "s"), "")
BLOCK_VAR.setdefault(("P*", "m"), "d")


class WeightedField:
    """A tensor field together with its projective weight."""

    def __init__(self, field: TensorField, weight):
        self.field = field
        self.weight = Fraction(weight)


class ProjField:
    """Projective tractor field: a TractorField over 'P'/'P*' slots plus a
    projective weight for the tensor part."""

    def __init__(self, tf: TractorField, weight=0):
        self.tf = tf
        self.weight = Fraction(weight)

    @property
    def space(self):
        return self.tf.space

    def __eq__(self, other):
        if not isinstance(other, ProjField):
            return NotImplemented
        return self.weight == other.weight and self.tf == other.tf

    def is_zero(self):
        return self.tf.is_zero()


def proj_schouten(space) -> TensorField:
    """Projective Schouten tensor in the Levi-Civita scale: twice the
    Riemannian one, (2J/n) g."""
    return space.g.scale(Fraction(2, space.n) * space.J)


def proj_connection(F: ProjField) -> ProjField:
    """Projectively invariant tractor connection in the chosen scale; adds
    one down tangent index in the first tangent position."""
    tf = F.tf
    space = tf.space
    n = space.n
    g = space.g
    pbar = Fraction(2, n) * space.J  # P-bar_{ab} = pbar * g_{ab}
    acc: Dict[tuple, dict] = {}
    for sig, f in tf.parts.items():
        df = space.covariant_derivative(f)
        off = tf._block_width(sig)
        order = list(range(1, off + 1)) + [0] + list(range(off + 1, df.valence))
        df = df.permute(order)
        for idx, v in df.items():
            _acc_add(acc, sig, idx, v)
    for sig, f in tf.parts.items():
        widths = block_sizes(tf.spec, sig)
        starts = []
        pos = 0
        for w in widths:
            starts.append(pos)
            pos += w
        width = pos
        for slot, kind in enumerate(tf.spec):
            letter = sig[slot]
            for idx, v in f.items():
                block = idx[starts[slot]:starts[slot] + widths[slot]]
                pre = idx[:starts[slot]]
                post = idx[starts[slot] + widths[slot]:width]
                tang = idx[width:]
                if kind == "P":
                    if letter == "r":
                        # r -> n: + delta_a^b rho
                        nsig = sig[:slot] + ("n",) + sig[slot + 1:]
                        for a in range(n):
                            _acc_add(acc, nsig, pre + (a,) + post + (a,) + tang, v)
                    else:
                        # n -> r: - Pbar_{ab} nu^b
                        if pbar:
                            (b,) = block
                            nsig = sig[:slot] + ("r",) + sig[slot + 1:]
                            for a in range(n):
                                gv = g.get((a, b))
                                if gv is not None:
                                    _acc_add(acc, nsig, pre + post + (a,) + tang,
                                             (gv * v) * (-pbar))
                else:  # P*
                    if letter == "s":
                        # s -> m: + Pbar_{ab} sigma
                        if pbar:
                            nsig = sig[:slot] + ("m",) + sig[slot + 1:]
                            for a in range(n):
                                for b in range(n):
                                    gv = g.get((a, b))
                                    if gv is not None:
                                        _acc_add(acc, nsig, pre + (b,) + post + (a,) + tang,
                                                 (gv * v) * pbar)
                    else:
                        # m -> s: - mu_a
                        (b,) = block
                        nsig = sig[:slot] + ("s",) + sig[slot + 1:]
                        _acc_add(acc, nsig, pre + post + (b,) + tang, -v)
    out = TractorField.from_entries(space, tf.spec, ("d",) + tf.tangent, acc)
    return ProjField(out, F.weight)


def proj_D(F: ProjField) -> ProjField:
    """The projectively invariant derivative, adding a dual slot and a
    bundle slot in front.

    Middle-slot convention: the scalar middle part is (weight + #upper
    tangent indices - #lower tangent indices) times the field, tractor slots
    contributing zero; pinned by the exact metric-tractor identities and the
    end-to-end agreement with the Riemannian construction."""
    tf = F.tf
    space = tf.space
    n = space.n
    spec = ("P*", "P") + tf.spec
    acc: Dict[tuple, dict] = {}

    # bottom slot: the coupled derivative, sig (m, r)
    G = proj_connection(F).tf
    for sig, f in G.parts.items():
        off = G._block_width(sig)
        for idx, v in f.items():
            a = idx[off]
            _acc_add(acc, ("m", "r") + sig, (a,) + idx[:off] + idx[off + 1:], v)

    # middle slots
    count = F.weight + sum(1 if t == "u" else -1 for t in tf.tangent)
    for sig, f in tf.parts.items():
        off = tf._block_width(sig)
        for idx, v in f.items():
            blocks = idx[:off]
            tang = idx[off:]
            if count:
                _acc_add(acc, ("s", "r") + sig, idx, v * count)
            for t, var in enumerate(tf.tangent):
                e = tang[t]
                if var == "d":
                    # delta_c^b phi_a: source index moves to the m-block
                    for b in range(n):
                        ntang = tang[:t] + (b,) + tang[t + 1:]
                        _acc_add(acc, ("m", "n") + sig, (e, b) + blocks + ntang, v)
                else:
                    # - v^b delta_a^c: source index moves to the n-block
                    for a in range(n):
                        ntang = tang[:t] + (a,) + tang[t + 1:]
                        _acc_add(acc, ("m", "n") + sig, (a, e) + blocks + ntang, -v)
    out = TractorField.from_entries(space, spec, tf.tangent, acc)
    return ProjField(out, F.weight)


def parallel_h(space) -> ProjField:
    """The parallel metric tractor: slots (g^{ab} | 0 | (2/n) J)."""
    n = space.n
    parts = {
        ("n", "n"): space.g_inv,
    }
    j_rf = space.const(Fraction(2, n) * space.J)
    if not j_rf.is_zero():
        parts[("r", "r")] = scalar_field(space, j_rf)
    return ProjField(TractorField(space, ("P", "P"), (), parts), -2)


def h_raise_slot(F: ProjField, i: int) -> ProjField:
    """Contract the metric tractor into the i-th dual slot, turning it into
    a bundle slot (m -> n via the inverse metric, s -> r via (2/n) J)."""
    tf = F.tf
    if tf.spec[i] != "P*":
        raise ValueError("h-raising expects a dual slot")
    space = tf.space
    n = space.n
    jfac = Fraction(2, n) * space.J
    spec = tf.spec[:i] + ("P",) + tf.spec[i + 1:]
    acc: Dict[tuple, dict] = {}
    for sig, f in tf.parts.items():
        widths = block_sizes(tf.spec, sig)
        starts = []
        pos = 0
        for w in widths:
            starts.append(pos)
            pos += w
        letter = sig[i]
        if letter == "m":
            nsig = sig[:i] + ("n",) + sig[i + 1:]
            s0 = starts[i]
            for idx, v in f.items():
                a = idx[s0]
                for p in range(n):
                    gv = space.g_inv.get((p, a))
                    if gv is not None:
                        _acc_add(acc, nsig, idx[:s0] + (p,) + idx[s0 + 1:], gv * v)
        else:  # 's'
            if jfac:
                nsig = sig[:i] + ("r",) + sig[i + 1:]
                for idx, v in f.items():
                    _acc_add(acc, nsig, idx, v * jfac)
    out = TractorField.from_entries(space, spec, tf.tangent, acc)
    return ProjField(out, F.weight)


_DUAL_LETTER = {"n": "m", "r": "s", "m": "n", "s": "r"}


def proj_dual_contract_all(F: ProjField, G: ProjField) -> TensorField:
    """Full slot-wise contraction of dual projective specs (no extra
    weights: the standard projective pairing is sigma rho + mu_a nu^a)."""
    tf, tg = F.tf, G.tf
    if tuple("P" if k == "P*" else "P*" for k in tf.spec) != tg.spec:
        raise ValueError("specs are not dual")
    space = tf.space
    acc: dict = {}
    for sig, f in tf.parts.items():
        dual_sig = tuple(_DUAL_LETTER[s] for s in sig)
        gpart = tg.parts.get(dual_sig)
        if gpart is None:
            continue
        width = sum(block_sizes(tf.spec, sig))
        gindex: dict = {}
        for idx2, v2 in gpart.items():
            gindex.setdefault(idx2[:width], []).append((idx2[width:], v2))
        for idx1, v1 in f.items():
            hits = gindex.get(idx1[:width])
            if not hits:
                continue
            t1 = idx1[width:]
            for t2, v2 in hits:
                v = v1 * v2
                key = t1 + t2
                w = acc.get(key)
                w = v if w is None else w + v
                if w.is_zero():
                    acc.pop(key, None)
                else:
                    acc[key] = w
    return TensorField(space, tf.tangent + tg.tangent, acc)


def adjoint_to_projective(K: TractorField) -> ProjField:
    """Identify an l-fold adjoint tractor with a section of the l-fold
    exterior square of the dual projective bundle: each adjoint slot becomes
    an antisymmetric pair of dual slots, the vector part lowered and the
    two-form part lowered and doubled."""
    space = K.space
    if any(k != "A" for k in K.spec) or K.tangent:
        raise ValueError("expected a pure adjoint tensor power")
    ell = len(K.spec)
    # lower every block index first
    lowered_parts = {}
    for sig, f in K.parts.items():
        g = f
        width = sum(block_sizes(K.spec, sig))
        for pos in range(width):
            g = g.lower_index(pos)
        lowered_parts[sig] = g
    spec = ("P*",) * (2 * ell)
    acc: Dict[tuple, dict] = {}
    for sig, f in lowered_parts.items():
        options = []
        for letter in sig:
            # pair orientation pinned by the end-to-end operator equality
            # with the Riemannian construction (the opposite orientation
            # flips the operator by (-1)^l)
            if letter == "Y":
                options.append([(("s", "m"), Fraction(-1)), (("m", "s"), Fraction(1))])
            else:
                options.append([(("m", "m"), Fraction(-2))])
        widths = block_sizes(K.spec, sig)
        starts = []
        pos = 0
        for w in widths:
            starts.append(pos)
            pos += w
        for idx, v in f.items():
            for combo in itertools.product(*options):
                letters = []
                weight = Fraction(1)
                for ls, w in combo:
                    letters.extend(ls)
                    weight *= w
                _acc_add(acc, tuple(letters), idx, v * weight)
    out = TractorField.from_entries(space, spec, (), acc)
    return ProjField(out, 2 * ell)


def d_bar_tower(space, ell: int) -> ProjField:
    """Iterated projective derivative of a generic weight-0 scalar, as an
    operator-valued field (outermost pair first)."""
    key = ("d_bar_tower", ell)
    if key in space._cache:
        return space._cache[key]
    F = ProjField(TractorField(space, (), (), {(): TensorField(
        space, (), {(): OpForm.identity(space)}, None, _canonical=True)}), 0)
    for _ in range(ell):
        F = proj_D(F)
    space._cache[key] = F
    return F


def proj_symmetry(k: TensorField) -> DiffOp:
    """The projective construction of the symmetry operator: identify the
    Riemannian prolongation with a parallel section over the projective
    bundle, raise the first slot of each pair with the metric tractor and
    contract against the iterated projective derivative."""
    space = k.space
    ell = k.valence
    ok, _ = killing_check(k)
    if not ok:
        raise ValueError("input is not a Killing tensor")
    if ell == 0:
        return DiffOp.from_scalar(space, k.component(()))
    K = prolong(k).tractor
    V = adjoint_to_projective(K)
    W = V
    for i in range(ell):
        W = h_raise_slot(W, 2 * i)
    X = d_bar_tower(space, ell)
    raw = proj_dual_contract_all(W, X).component(())
    if not isinstance(raw, OpForm):
        return DiffOp.zero(space)
    return DiffOp.from_pform(space, raw)


# ---------------------------------------------------------------------------
# verification helpers
# ---------------------------------------------------------------------------


def proj_curvature_check(space) -> bool:
    """Exact flatness of the projective tractor connection on a spanning
    family of sections of the bundle and its dual."""
    from .tractor import _monomials
    sections = []
    n = space.n
    for m in _monomials(space, 2):
        sections.append(ProjField(TractorField(
            space, ("P",), (), {("r",): scalar_field(space, m)})))
        for i in range(n):
            nu = TensorField(space, ("u",), {(i,): m})
            sections.append(ProjField(TractorField(space, ("P",), (), {("n",): nu})))
        sections.append(ProjField(TractorField(
            space, ("P*",), (), {("s",): scalar_field(space, m)})))
        for i in range(n):
            mu = TensorField(space, ("d",), {(i,): m})
            sections.append(ProjField(TractorField(space, ("P*",), (), {("m",): mu})))
    for F in sections:
        G = proj_connection(proj_connection(F)).tf
        for sig, f in G.parts.items():
            off = G._block_width(sig)
            anti = f - f.permute(
                list(range(off)) + [off + 1, off] + list(range(off + 2, f.valence)))
            if not anti.is_zero():
                return False
    return True


def agrees_with_adjoint_connection(space) -> bool:
    """The projective connection on the identified exterior square matches
    the Riemannian adjoint connection under the slot identification."""
    from .tractor import adjoint_section, tractor_connection
    from .tractor import _monomials
    n = space.n
    for m in _monomials(space, 1):
        for i in range(n):
            phi = TensorField(space, ("u",), {(i,): m})
            for j in range(i + 1, n):
                psi = TensorField(space, ("u", "u"), {(i, j): m, (j, i): -m})
                A = adjoint_section(space, phi, psi)
                lhs = adjoint_to_projective_pairfield(tractor_connection(A))
                rhs = proj_connection(adjoint_to_projective_single(A))
                if lhs != rhs.tf:
                    return False
    return True


def adjoint_to_projective_single(A: TractorField) -> ProjField:
    return adjoint_to_projective(A)


def adjoint_to_projective_pairfield(dA: TractorField) -> TractorField:
    """Apply the slot identification to a single-adjoint-slot field with one
    tangent index (the image of the connection)."""
    space = dA.space
    acc: Dict[tuple, dict] = {}
    for sig, f in dA.parts.items():
        width = sum(block_sizes(dA.spec, sig))
        g = f
        for pos in range(width):
            g = g.lower_index(pos)
        letter = sig[0]
        if letter == "Y":
            options = [(("s", "m"), Fraction(-1)), (("m", "s"), Fraction(1))]
        else:
            options = [(("m", "m"), Fraction(-2))]
        for idx, v in g.items():
            for letters, w in options:
                _acc_add(acc, letters, idx, v * w)
    return TractorField.from_entries(space, ("P*", "P*"), dA.tangent, acc)


def h_parallel_check(space) -> bool:
    return proj_connection(parallel_h(space)).is_zero()


def metric_tractor_derivative_check(space) -> bool:
    """The h-contracted antisymmetrized derivative annihilates both the
    inverse metric (weight -2) and the metric (weight +2), exactly."""
    for field, weight in ((space.g_inv, -2), (space.g, 2)):
        F = ProjField(TractorField(space, (), field.variance, {(): field}), weight)
        X = proj_D(F)
        W = h_raise_slot(X, 0)
        anti = W.tf - W.tf.permute_slots((1, 0))
        if not anti.is_zero():
            return False
    return True


def weight_independence_check(space) -> bool:
    """The h-contracted antisymmetrized derivative on weight-w scalars has a
    w-independent coordinate expression."""
    forms = []
    for w in (0, 1, -1):
        F = ProjField(TractorField(space, (), (), {(): TensorField(
            space, (), {(): OpForm.identity(space)}, None, _canonical=True)}), w)
        X = proj_D(F)
        W = h_raise_slot(X, 0)
        diff = W.tf - W.tf.permute_slots((1, 0))
        forms.append(diff)
    return forms[0] == forms[1] and forms[0] == forms[2]


def invariant_second_order(space, f: RatFun, weight) -> TensorField:
    """The projectively invariant operator sym(nabla nabla) + Pbar on
    weight-1 densities, evaluated in the Levi-Civita scale."""
    t = scalar_field(space, f)
    dd = space.covariant_derivative(space.covariant_derivative(t)).symmetrize()
    return dd + proj_schouten(space).scale(f)


def dD_comm_invariant_check(space) -> bool:
    """Dbar commutes with the invariant second-order operator on the
    monomial family of weight-1 scalars."""
    from .tractor import _monomials
    for m in _monomials(space, 2):
        F = ProjField(TractorField(space, (), (), {(): scalar_field(space, m)}), 1)
        lhs = proj_D(ProjField(TractorField(
            space, (), ("d", "d"), {(): invariant_second_order(space, m, 1)}), 1))
        X = proj_D(F)
        # coupled invariant operator on the tractor-valued image
        dd = proj_connection(proj_connection(X))
        tf = dd.tf.symmetrize_tangent()
        pb = proj_schouten(space)
        add_parts = {}
        for sig, f in X.tf.parts.items():
            t = pb.tensor_product(f)
            # reorder: blocks first, then the two new tangent indices
            off = X.tf._block_width(sig)
            order = list(range(2, 2 + off)) + [0, 1] + list(range(2 + off, t.valence))
            add_parts[sig] = t.permute(order)
        rhs_tf = tf + TractorField(space, X.tf.spec, ("d", "d"), add_parts)
        if lhs.tf != rhs_tf:
            return False
    return True
