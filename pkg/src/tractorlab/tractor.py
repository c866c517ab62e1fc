"""Tractor calculus on constant-curvature model spaces.

The standard tractor bundle is a trivial line bundle plus the tangent bundle;
the adjoint bundle is its second exterior power.  Sections are stored
slot-wise in the injector frame: every slot of a tractor field carries a
signature letter ('Y' or 'Z') selecting the frame component, and the data for
a full signature is an ordinary tensor field whose leading indices realize
the slot blocks (Y of the standard bundle: no index; Z: one index; Y of the
adjoint bundle: one index; Z: an antisymmetric pair), followed by the field's
free tangent indices.

The connection, the fundamental derivative, the invariant pairings and the
Lie bracket below are exactly the component formulas of the frame calculus;
their structure constants are pinned by the exact flatness, parallelism and
commutation checks in the test suite.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Dict, Optional, Sequence

from .exactfield import RatFun
from .tensorfield import TensorField, scalar_field, zero_tensor

Sig = tuple  # one letter per tractor slot

# indices carried by each (slot kind, signature letter) block
BLOCK_VAR = {
    ("T", "Y"): "",
    ("T", "Z"): "u",
    ("T*", "Y"): "",
    ("T*", "Z"): "d",
    ("A", "Y"): "u",
    ("A", "Z"): "uu",
    ("A*", "Y"): "d",
    ("A*", "Z"): "dd",
}


def block_sizes(spec: Sequence[str], sig: Sig) -> list:
    return [len(BLOCK_VAR[(k, s)]) for k, s in zip(spec, sig)]


def part_variance(spec: Sequence[str], sig: Sig, tangent: Sequence[str]) -> tuple:
    out = []
    for k, s in zip(spec, sig):
        out.extend(BLOCK_VAR[(k, s)])
    out.extend(tangent)
    return tuple(out)


def _part_sym(spec: Sequence[str], sig: Sig) -> tuple:
    """Antisymmetry declarations for the 2-index adjoint blocks."""
    groups = []
    off = 0
    for k, s in zip(spec, sig):
        w = len(BLOCK_VAR[(k, s)])
        if w == 2:
            groups.append(("a", (off, off + 1)))
        off += w
    return tuple(groups)


class TractorField:
    """Slot-signature-sparse section of a tensor product of tractor bundles."""

    __slots__ = ("space", "spec", "tangent", "parts")

    def __init__(self, space, spec, tangent, parts: Dict[Sig, TensorField]):
        self.space = space
        self.spec = tuple(spec)
        self.tangent = tuple(tangent)
        clean = {}
        for sig, field in parts.items():
            if field.is_zero():
                continue
            sig = tuple(sig)
            expect = part_variance(self.spec, sig, self.tangent)
            if field.variance != expect:
                raise ValueError("part %r has variance %r, expected %r" %
                                 (sig, field.variance, expect))
            std_sym = _part_sym(self.spec, sig)
            if field.sym != std_sym:
                # connection/derivative code iterates canonical storage and
                # relies on every part being compressed exactly by the block
                # antisymmetries; renormalize anything else
                field = TensorField(field.space, expect, dict(field.items()), std_sym)
            if not field.is_zero():
                clean[sig] = field
        self.parts = clean

    # -- builders ---------------------------------------------------------------

    @classmethod
    def from_entries(cls, space, spec, tangent, entries: Dict[Sig, dict]) -> "TractorField":
        parts = {}
        for sig, comp in entries.items():
            sig = tuple(sig)
            field = TensorField(space, part_variance(spec, sig, tangent), comp,
                                _part_sym(spec, sig))
            if not field.is_zero():
                parts[sig] = field
        return cls(space, spec, tangent, parts)

    def part(self, sig: Sig) -> TensorField:
        sig = tuple(sig)
        f = self.parts.get(sig)
        if f is not None:
            return f
        return zero_tensor(self.space, part_variance(self.spec, sig, self.tangent),
                           _part_sym(self.spec, sig))

    def all_sigs(self):
        return itertools.product(*( ("Y", "Z") for _ in self.spec ))

    # -- linear structure ----------------------------------------------------------

    def _compatible(self, other: "TractorField"):
        if (self.space.key() != other.space.key() or self.spec != other.spec
                or self.tangent != other.tangent):
            raise ValueError("incompatible tractor fields")

    def __add__(self, other: "TractorField") -> "TractorField":
        self._compatible(other)
        parts = dict(self.parts)
        for sig, f in other.parts.items():
            g = parts.get(sig)
            s = f if g is None else g + f
            if s.is_zero():
                parts.pop(sig, None)
            else:
                parts[sig] = s
        return TractorField(self.space, self.spec, self.tangent, parts)

    def __sub__(self, other: "TractorField") -> "TractorField":
        return self + (-other)

    def __neg__(self) -> "TractorField":
        return TractorField(self.space, self.spec, self.tangent,
                            {s: -f for s, f in self.parts.items()})

    def scale(self, c) -> "TractorField":
        return TractorField(self.space, self.spec, self.tangent,
                            {s: f.scale(c) for s, f in self.parts.items()})

    def is_zero(self) -> bool:
        return not self.parts

    def __eq__(self, other):
        if not isinstance(other, TractorField):
            return NotImplemented
        if self.spec != other.spec or self.tangent != other.tangent:
            return False
        sigs = set(self.parts) | set(other.parts)
        return all(self.part(s) == other.part(s) for s in sigs)

    def __repr__(self):
        return "TractorField(spec=%s, tangent=%s, sigs=%s)" % (
            list(self.spec), list(self.tangent), sorted(self.parts))

    # -- tangent index operations -----------------------------------------------------

    def _block_width(self, sig: Sig) -> int:
        return sum(block_sizes(self.spec, sig))

    def map_parts(self, fn) -> "TractorField":
        parts = {}
        for sig, f in self.parts.items():
            g = fn(sig, f)
            if not g.is_zero():
                parts[sig] = g
        return TractorField(self.space, self.spec, self.tangent, parts)

    def raise_tangent(self, i: int) -> "TractorField":
        parts = {}
        for sig, f in self.parts.items():
            g = f.raise_index(self._block_width(sig) + i)
            if not g.is_zero():
                parts[sig] = g
        return TractorField(self.space, self.spec,
                            self.tangent[:i] + ("u",) + self.tangent[i + 1:], parts)

    def lower_tangent(self, i: int) -> "TractorField":
        parts = {}
        for sig, f in self.parts.items():
            g = f.lower_index(self._block_width(sig) + i)
            if not g.is_zero():
                parts[sig] = g
        return TractorField(self.space, self.spec,
                            self.tangent[:i] + ("d",) + self.tangent[i + 1:], parts)

    def contract_tangent(self, i: int, j: int) -> "TractorField":
        parts = {}
        for sig, f in self.parts.items():
            off = self._block_width(sig)
            g = f.contract(off + i, off + j)
            if not g.is_zero():
                parts[sig] = g
        keep = [k for k in range(len(self.tangent)) if k not in (i, j)]
        return TractorField(self.space, self.spec,
                            tuple(self.tangent[k] for k in keep), parts)

    def symmetrize_tangent(self) -> "TractorField":
        parts = {}
        for sig, f in self.parts.items():
            off = self._block_width(sig)
            g = f.symmetrize(tuple(range(off, off + len(self.tangent))))
            if not g.is_zero():
                parts[sig] = g
        return TractorField(self.space, self.spec, self.tangent, parts)

    # -- slot permutations ---------------------------------------------------------

    def permute_slots(self, order: Sequence[int]) -> "TractorField":
        """Reorder tractor slots; slot k of the result is original slot order[k].
        All permuted slots must have the same kind."""
        order = tuple(order)
        spec = tuple(self.spec[o] for o in order)
        parts: Dict[Sig, TensorField] = {}
        nt = len(self.tangent)
        for sig, f in self.parts.items():
            widths = block_sizes(self.spec, sig)
            starts = []
            pos = 0
            for w in widths:
                starts.append(pos)
                pos += w
            new_sig = tuple(sig[o] for o in order)
            idx_order = []
            for o in order:
                idx_order.extend(range(starts[o], starts[o] + widths[o]))
            idx_order.extend(range(pos, pos + nt))
            g = f.permute(idx_order)
            prev = parts.get(new_sig)
            parts[new_sig] = g if prev is None else prev + g
        return TractorField(self.space, spec, self.tangent, parts)

    def symmetrize_slots(self) -> "TractorField":
        """Average over all permutations of the tractor slots (uniform kind)."""
        perms = list(itertools.permutations(range(len(self.spec))))
        total = None
        for p in perms:
            t = self.permute_slots(p)
            total = t if total is None else total + t
        return total.scale(Fraction(1, len(perms)))


# ---------------------------------------------------------------------------
# connection and fundamental derivative
# ---------------------------------------------------------------------------


def _acc_add(acc: dict, sig: Sig, idx: tuple, v):
    bucket = acc.setdefault(sig, {})
    w = bucket.get(idx)
    w = v if w is None else w + v
    if w.is_zero():
        bucket.pop(idx, None)
    else:
        bucket[idx] = w


class _CanonAcc:
    """Accumulator into canonical component slots, one canonizer per
    signature.  Callers must feed each logical contribution exactly once."""

    def __init__(self, space, spec, tangent):
        self.space = space
        self.spec = tuple(spec)
        self.tangent = tuple(tangent)
        self.acc: Dict[Sig, dict] = {}
        self._canon: dict = {}

    def add(self, sig: Sig, idx: tuple, v):
        canon = self._canon.get(sig)
        if canon is None:
            dummy = TensorField(self.space, part_variance(self.spec, sig, self.tangent),
                                {}, _part_sym(self.spec, sig), _canonical=True)
            canon = dummy._canon
            self._canon[sig] = canon
        r, sign = canon(idx)
        if sign == 0:
            return
        if sign == -1:
            v = -v
        bucket = self.acc.setdefault(sig, {})
        w = bucket.get(r)
        w = v if w is None else w + v
        if w.is_zero():
            bucket.pop(r, None)
        else:
            bucket[r] = w

    def build(self) -> "TractorField":
        parts = {}
        for sig, comp in self.acc.items():
            if not comp:
                continue
            f = TensorField(self.space, part_variance(self.spec, sig, self.tangent),
                            comp, _part_sym(self.spec, sig), _canonical=True)
            if not f.is_zero():
                parts[sig] = f
        return TractorField(self.space, self.spec, self.tangent, parts)


def tractor_connection(F: TractorField, j_coeff: Optional[Fraction] = None) -> TractorField:
    """Coupled Levi-Civita--tractor covariant derivative.

    Adds one down tangent slot in the first tangent position.  ``j_coeff``
    overrides the curvature coupling (2/n) J; it exists for the negative
    flatness controls in the test suite.
    """
    space = F.space
    n = space.n
    jc = Fraction(2, n) * space.J if j_coeff is None else Fraction(j_coeff)
    g = space.g
    new_tangent = ("d",) + F.tangent
    out = _CanonAcc(space, F.spec, new_tangent)

    # covariant derivative of each signature component; the canonical keys
    # of the derivative match the output block structure directly
    for sig, f in F.parts.items():
        df = space.covariant_derivative(f)
        off = F._block_width(sig)
        # move the derivative index behind the slot blocks
        order = list(range(1, off + 1)) + [0] + list(range(off + 1, df.valence))
        df = df.permute(order)
        for idx, v in df.comp.items():
            out.add(sig, idx, v)

    # algebraic slot transformations; the transformed slot's antisymmetric
    # pair is expanded explicitly because the rules use its indices
    # asymmetrically, the remaining slots stay canonical
    for sig, f in F.parts.items():
        widths = block_sizes(F.spec, sig)
        starts = []
        pos = 0
        for w in widths:
            starts.append(pos)
            pos += w
        width = pos
        for slot, kind in enumerate(F.spec):
            letter = sig[slot]
            new_sig = sig[:slot] + ("Z" if letter == "Y" else "Y",) + sig[slot + 1:]
            s0 = starts[slot]
            w0 = widths[slot]
            for idx0, v0 in f.comp.items():
                block0 = idx0[s0:s0 + w0]
                orientations = [(block0, v0)]
                if w0 == 2 and block0[0] != block0[1]:
                    orientations.append(((block0[1], block0[0]), -v0))
                rest_pre = idx0[:s0]
                rest_post = idx0[s0 + w0:width]
                tang = idx0[width:]
                for block, v in orientations:
                    if kind == "T":
                        if letter == "Y":
                            # Y -> Z: + jc f delta^b_c
                            if jc:
                                for c in range(n):
                                    nidx = rest_pre + (c,) + rest_post + (c,) + tang
                                    out.add(new_sig, nidx, v * jc)
                        else:
                            # Z -> Y: - mu^b g_bc
                            (b,) = block
                            for c in range(n):
                                gv = g.get((b, c))
                                if gv is not None:
                                    nidx = rest_pre + rest_post + (c,) + tang
                                    out.add(new_sig, nidx, -(gv * v))
                    elif kind == "T*":
                        if letter == "Y":
                            # Y -> Z: + f g_cb
                            for c in range(n):
                                for b in range(n):
                                    gv = g.get((c, b))
                                    if gv is not None:
                                        nidx = rest_pre + (b,) + rest_post + (c,) + tang
                                        out.add(new_sig, nidx, gv * v)
                        else:
                            # Z -> Y: - jc nu_c
                            (b,) = block
                            if jc:
                                nidx = rest_pre + rest_post + (b,) + tang
                                out.add(new_sig, nidx, v * (-jc))
                    elif kind == "A":
                        if letter == "Y":
                            # Y -> Z: + jc delta_c^[b1 phi^b2]
                            (b,) = block
                            if jc:
                                half = jc / 2
                                for c in range(n):
                                    if c == b:
                                        continue
                                    # one add per antisymmetric pair: the
                                    # canonical accumulator supplies the mirror
                                    out.add(new_sig,
                                            rest_pre + (c, b) + rest_post + (c,) + tang,
                                            v * half)
                        else:
                            # Z -> Y: - 2 psi_c^b = -2 g_ce psi^{eb}
                            e, b = block
                            for c in range(n):
                                gv = g.get((c, e))
                                if gv is not None:
                                    nidx = rest_pre + (b,) + rest_post + (c,) + tang
                                    out.add(new_sig, nidx, (gv * v) * (-2))
                    else:  # A*
                        if letter == "Y":
                            # Y -> Z: + g_c[b1 omega_b2].  The coefficient 1
                            # (not 2) is forced by parallelism of the frame
                            # contraction YY = delta/2 and by flatness of the
                            # dual connection; the exact checks pin it.
                            (b,) = block
                            half = Fraction(1, 2)
                            for c in range(n):
                                for e in range(n):
                                    gv = g.get((c, e))
                                    if gv is None:
                                        continue
                                    out.add(new_sig,
                                            rest_pre + (e, b) + rest_post + (c,) + tang,
                                            (gv * v) * half)
                        else:
                            # Z -> Y: - 2 jc mu_cb  (tangent c = first pair index)
                            b1, b2 = block
                            if jc:
                                nidx = rest_pre + (b2,) + rest_post + (b1,) + tang
                                out.add(new_sig, nidx, v * (-2 * jc))
    return out.build()


def tractor_laplacian(F: TractorField) -> TractorField:
    dd = tractor_connection(tractor_connection(F))
    return dd.raise_tangent(0).contract_tangent(0, 1)


def fundamental_D(F: TractorField) -> TractorField:
    """Pair a field with the adjoint frame: one extra dual-adjoint slot in
    front.  The Y part is twice the coupled covariant derivative; the Z part
    collects the algebraic metric terms contributed by each free tangent
    index (tractor slots contribute only through the coupled derivative)."""
    space = F.space
    n = space.n
    g = space.g
    spec = ("A*",) + F.spec
    out = _CanonAcc(space, spec, F.tangent)

    G = tractor_connection(F)
    for sig, f in G.parts.items():
        off = G._block_width(sig)
        for idx, v in f.comp.items():
            # the derivative index (first tangent of G) becomes the Y block
            a = idx[off]
            nidx = (a,) + idx[:off] + idx[off + 1:]
            out.add(("Y",) + sig, nidx, v * 2)

    for sig, f in F.parts.items():
        off = F._block_width(sig)
        new_sig = ("Z",) + sig
        for idx, v in f.comp.items():
            blocks = idx[:off]
            tang = idx[off:]
            for t, var in enumerate(F.tangent):
                e = tang[t]
                if var == "d":
                    # phi_e scatters as g_{b a1} phi_{a2=e} - g_{b a2} phi_{a1=e}
                    for a1 in range(n):
                        for b in range(n):
                            gv = g.get((b, a1))
                            if gv is None:
                                continue
                            ntang = tang[:t] + (b,) + tang[t + 1:]
                            out.add(new_sig, (a1, e) + blocks + ntang, gv * v)
                else:
                    # v^e scatters as delta^b_{a1} v_{a2} - delta^b_{a2} v_{a1}
                    for a2 in range(n):
                        gv = g.get((a2, e))
                        if gv is None:
                            continue
                        for b in range(n):
                            ntang = tang[:t] + (b,) + tang[t + 1:]
                            out.add(new_sig, (b, a2) + blocks + ntang, gv * v)
    return out.build()


# ---------------------------------------------------------------------------
# pairings and bracket
# ---------------------------------------------------------------------------


class TractorMetric:
    """The invariant bilinear forms on the standard and adjoint bundles.

    Non-degenerate exactly when J != 0; both are parallel for the tractor
    connection (verified in the test suite via the Leibniz identity)."""

    def __init__(self, space):
        self.space = space
        self.j_std = Fraction(2, space.n) * space.J
        self.j_adj = Fraction(1, space.n) * space.J

    def nondegenerate(self) -> bool:
        return self.space.J != 0

    def pair_std(self, F: TractorField, G: TractorField) -> TensorField:
        return pairing(F, G)

    def pair_adj(self, F: TractorField, G: TractorField) -> TensorField:
        return pairing(F, G)


def pairing(F: TractorField, G: TractorField) -> TensorField:
    """Invariant pairing of two fields with identical tractor specs made of
    standard ('T') or adjoint ('A') slots, contracting all slots at once.
    Extra tangent indices are carried along (F's first, then G's)."""
    if F.spec != G.spec or any(k not in ("T", "A") for k in F.spec):
        raise ValueError("pairing requires matching standard/adjoint specs")
    space = F.space
    n = space.n
    g = space.g
    J = space.J
    acc: dict = {}
    fac_y = {"T": Fraction(2, n) * J, "A": Fraction(1, n) * J}
    nt_f = len(F.tangent)
    for sig, f in F.parts.items():
        gpart = G.parts.get(sig)
        if gpart is None:
            continue
        widths = block_sizes(F.spec, sig)
        width = sum(widths)
        scale = Fraction(1)
        for kind, letter in zip(F.spec, sig):
            if letter == "Y" and kind == "T":
                scale *= fac_y["T"]
            elif letter == "Y" and kind == "A":
                scale *= fac_y["A"]
        if scale == 0:
            continue
        for idx1, v1 in f.items():
            b1 = idx1[:width]
            t1 = idx1[width:]
            for idx2, v2 in gpart.items():
                b2 = idx2[:width]
                t2 = idx2[width:]
                metric_factor = None
                ok = True
                for p1, p2 in zip(b1, b2):
                    gv = g.get((p1, p2))
                    if gv is None:
                        ok = False
                        break
                    metric_factor = gv if metric_factor is None else metric_factor * gv
                if not ok:
                    continue
                v = v1 * v2
                if metric_factor is not None:
                    v = metric_factor * v
                if scale != 1:
                    v = v * scale
                key = t1 + t2
                w = acc.get(key)
                w = v if w is None else w + v
                if w.is_zero():
                    acc.pop(key, None)
                else:
                    acc[key] = w
    return TensorField(space, F.tangent + G.tangent, acc)


def dual_pairing(F: TractorField, G: TractorField) -> TensorField:
    """Full contraction of matching 'T' vs 'T*' (or 'A' vs 'A*') specs via the
    frame contraction rules; each adjoint Y pair contributes a factor 1/2."""
    dual = {"T": "T*", "A": "A*", "T*": "T", "A*": "A"}
    if tuple(dual[k] for k in F.spec) != G.spec:
        raise ValueError("dual pairing requires dual tractor specs")
    space = F.space
    acc: dict = {}
    for sig, f in F.parts.items():
        gpart = G.parts.get(sig)
        if gpart is None:
            continue
        widths = block_sizes(F.spec, sig)
        width = sum(widths)
        scale = Fraction(1)
        for kind, letter in zip(F.spec, sig):
            if letter == "Y" and kind in ("A", "A*"):
                scale /= 2
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
                if scale != 1:
                    v = v * scale
                key = t1 + t2
                w = acc.get(key)
                w = v if w is None else w + v
                if w.is_zero():
                    acc.pop(key, None)
                else:
                    acc[key] = w
    return TensorField(space, F.tangent + G.tangent, acc)


def bracket(F: TractorField, G: TractorField) -> TractorField:
    """Lie bracket on sections of the adjoint bundle.

    Normalized so that on prolonged Killing vectors it reproduces the
    prolongation of the vector-field commutator (equivalently, so that the
    composition algebra of degree-one symmetries closes with coefficient
    1/2 on the bracket term); this fixes the overall structure-constant
    scale, which the exact tests pin down."""
    if F.spec != ("A",) or G.spec != ("A",) or F.tangent or G.tangent:
        raise ValueError("bracket is defined on single-slot adjoint sections")
    space = F.space
    n = space.n
    g = space.g
    J = space.J
    phi1 = F.part(("Y",))
    psi1 = F.part(("Z",))
    phi2 = G.part(("Y",))
    psi2 = G.part(("Z",))
    # vector part: 2 [phi1_r psi2^{ra} - phi2_r psi1^{ra}]
    vec = {}
    for a in range(n):
        total = space.zero_rf()
        for r in range(n):
            for e in range(n):
                gv = g.get((r, e))
                if gv is None:
                    continue
                p1 = phi1.get((e,))
                q2 = psi2.get((r, a))
                if p1 is not None and q2 is not None:
                    total = total + gv * p1 * q2
                p2 = phi2.get((e,))
                q1 = psi1.get((r, a))
                if p2 is not None and q1 is not None:
                    total = total - gv * p2 * q1
        if not total.is_zero():
            vec[(a,)] = total * 2
    # two-form part: -4 psi1^{r[b} psi2_r^{c]} - (2/n) J phi1^[b phi2^c]
    form = {}
    for b in range(n):
        for c in range(n):
            total = space.zero_rf()
            for r in range(n):
                for e in range(n):
                    gv = g.get((r, e))
                    if gv is None:
                        continue
                    for (i1, i2), sgn in (((b, c), 1), ((c, b), -1)):
                        q1 = psi1.get((r, i1))
                        q2 = psi2.get((e, i2))
                        if q1 is not None and q2 is not None:
                            t = gv * q1 * q2
                            total = total - (t if sgn == 1 else -t)
            jpart = space.zero_rf()
            pb = phi1.get((b,))
            pc = phi2.get((c,))
            if pb is not None and pc is not None:
                jpart = jpart + pb * pc
            pb2 = phi1.get((c,))
            pc2 = phi2.get((b,))
            if pb2 is not None and pc2 is not None:
                jpart = jpart - pb2 * pc2
            total = total - jpart * (Fraction(J, 2 * n))
            if not total.is_zero():
                form[(b, c)] = total * 2
    return TractorField.from_entries(space, ("A",), (), {("Y",): vec, ("Z",): form})


# ---------------------------------------------------------------------------
# sections, prolongation of Killing vectors, verification reports
# ---------------------------------------------------------------------------


def standard_section(space, f: RatFun, mu: Optional[TensorField] = None) -> TractorField:
    """Section (f, mu^b) of the standard bundle."""
    parts = {}
    if not f.is_zero():
        parts[("Y",)] = scalar_field(space, f)
    if mu is not None and not mu.is_zero():
        parts[("Z",)] = mu
    return TractorField(space, ("T",), (), parts)


def adjoint_section(space, phi: Optional[TensorField], psi: Optional[TensorField]) -> TractorField:
    """Section (phi^b, psi^{bc}) of the adjoint bundle."""
    parts = {}
    if phi is not None and not phi.is_zero():
        parts[("Y",)] = phi
    if psi is not None and not psi.is_zero():
        parts[("Z",)] = psi
    return TractorField(space, ("A",), (), parts)


def kostant_prolong(k: TensorField) -> TractorField:
    """First-jet prolongation (k^a, (1/2) nabla^[a k^b]) of a vector field;
    parallel for the tractor connection exactly when k is Killing."""
    space = k.space
    if k.variance != ("u",):
        raise ValueError("expected a vector field")
    dk = space.covariant_derivative(k).raise_index(0)
    psi = dk.antisymmetrize((0, 1)).scale(Fraction(1, 2))
    return adjoint_section(space, k, psi)


class CheckReport:
    def __init__(self, name):
        self.name = name
        self.failures: list = []

    def fail(self, what, detail):
        self.failures.append((what, str(detail)))

    @property
    def ok(self):
        return not self.failures

    def first(self):
        return self.failures[0] if self.failures else None

    def to_json(self):
        return {"check": self.name, "ok": self.ok,
                "failures": [{"case": w, "detail": d} for w, d in self.failures]}


def _monomials(space, deg: int):
    out = [space.const(1)]
    if deg >= 1:
        out.extend(space.coord(i) for i in range(space.n))
    if deg >= 2:
        for i in range(space.n):
            for j in range(i, space.n):
                out.append(space.coord(i) * space.coord(j))
    return out


def _spanning_sections(space, include_duals: bool = True):
    """Injector basis elements times monomials of degree <= 2, for the
    standard and adjoint bundles (and optionally their duals)."""
    out = []
    n = space.n
    for m in _monomials(space, 2):
        out.append(standard_section(space, m))
        for i in range(n):
            mu = TensorField(space, ("u",), {(i,): m})
            out.append(standard_section(space, space.zero_rf(), mu))
        for i in range(n):
            phi = TensorField(space, ("u",), {(i,): m})
            out.append(adjoint_section(space, phi, None))
        for i in range(n):
            for j in range(i + 1, n):
                psi = TensorField(space, ("u", "u"), {(i, j): m, (j, i): -m})
                out.append(adjoint_section(space, None, psi))
        if not include_duals:
            continue
        out.append(TractorField(space, ("T*",), (), {("Y",): scalar_field(space, m)}))
        for i in range(n):
            nu = TensorField(space, ("d",), {(i,): m})
            out.append(TractorField(space, ("T*",), (), {("Z",): nu}))
            om = TensorField(space, ("d",), {(i,): m})
            out.append(TractorField(space, ("A*",), (), {("Y",): om}))
        for i in range(n):
            for j in range(i + 1, n):
                mu2 = TensorField(space, ("d", "d"), {(i, j): m, (j, i): -m})
                out.append(TractorField(space, ("A*",), (), {("Z",): mu2}))
    return out


def tractor_curvature_check(space, j_coeff=None, include_duals: bool = True) -> CheckReport:
    """Exact flatness of the tractor connection on a spanning family."""
    rep = CheckReport("tractor curvature")
    for count, F in enumerate(_spanning_sections(space, include_duals)):
        G = tractor_connection(tractor_connection(F, j_coeff=j_coeff), j_coeff=j_coeff)
        anti = None
        for sig, f in G.parts.items():
            off = G._block_width(sig)
            a = f - f.permute(
                list(range(off)) + [off + 1, off] + list(range(off + 2, f.valence)))
            if not a.is_zero():
                rep.fail("section %d sig %s" % (count, "".join(sig)),
                         next(iter(a.items())))
                return rep
    return rep


def check_D_commutes(space) -> CheckReport:
    """The fundamental derivative commutes with the coupled connection and
    with the coupled Laplacian, exactly, on the monomial spanning family."""
    rep = CheckReport("fundamental derivative commutation")
    scalars = [scalar_field(space, m) for m in _monomials(space, 2)]
    one_forms = []
    for m in _monomials(space, 2):
        for i in range(space.n):
            one_forms.append(TensorField(space, ("d",), {(i,): m}))

    def as_tractor(t: TensorField) -> TractorField:
        return TractorField(space, (), t.variance, {(): t})

    for count, t in enumerate(scalars + one_forms):
        F = as_tractor(t)
        lhs = tractor_connection(fundamental_D(F))
        # reorder: connection then D puts the derivative index first as well
        rhs = fundamental_D(tractor_connection(F))
        if lhs != rhs:
            diff = lhs - rhs
            sig = next(iter(diff.parts))
            rep.fail("nabla D - D nabla on section %d" % count,
                     (sig, next(iter(diff.parts[sig].items()))))
            return rep
    for count, t in enumerate(scalars):
        F = as_tractor(t)
        lhs = fundamental_D(TractorField(space, (), (), {(): space.laplacian(t)}))
        rhs = tractor_laplacian(fundamental_D(F))
        if lhs != rhs:
            rep.fail("D Delta - Delta D on scalar %d" % count, "mismatch")
            return rep
    return rep


# ---------------------------------------------------------------------------
# expansion of adjoint slots into pairs of standard slots
# ---------------------------------------------------------------------------


def expand_to_standard(F: TractorField) -> TractorField:
    """Rewrite every adjoint slot as an antisymmetrized pair of standard
    slots (Y lands in (Y,Z)/(Z,Y) with weights +-1/2, Z in (Z,Z))."""
    space = F.space
    spec = []
    for k in F.spec:
        if k == "A":
            spec.extend(["T", "T"])
        elif k == "A*":
            spec.extend(["T*", "T*"])
        else:
            spec.append(k)
    spec = tuple(spec)
    acc: Dict[Sig, dict] = {}
    for sig, f in F.parts.items():
        widths = block_sizes(F.spec, sig)
        starts = []
        pos = 0
        for w in widths:
            starts.append(pos)
            pos += w
        width = pos
        for idx, v in f.items():
            blocks = [idx[starts[s]:starts[s] + widths[s]] for s in range(len(F.spec))]
            tang = idx[width:]
            # per adjoint slot: list of (letters, block values, weight)
            options = []
            for slot, kind in enumerate(F.spec):
                letter = sig[slot]
                blk = blocks[slot]
                if kind in ("T", "T*"):
                    options.append([((letter,), blk, Fraction(1))])
                elif letter == "Y":
                    (a,) = blk
                    options.append([
                        (("Y", "Z"), (a,), Fraction(1, 2)),
                        (("Z", "Y"), (a,), Fraction(-1, 2)),
                    ])
                else:
                    options.append([(("Z", "Z"), blk, Fraction(1))])
            for combo in itertools.product(*options):
                letters: list = []
                nidx: list = []
                weight = Fraction(1)
                for ls, blk, w in combo:
                    letters.extend(ls)
                    nidx.extend(blk)
                    weight *= w
                _acc_add(acc, tuple(letters), tuple(nidx) + tang,
                         v if weight == 1 else v * weight)
    return TractorField.from_entries(space, spec, F.tangent, acc)


def skew_standard_slots(F: TractorField, slots: Sequence[int]) -> TractorField:
    """Alternating average of F over the given standard-tractor slots."""
    slots = tuple(slots)
    total = None
    perms = list(itertools.permutations(slots))
    base = list(range(len(F.spec)))
    for perm in perms:
        order = list(base)
        sign = 1
        mapping = dict(zip(slots, perm))
        for pos in slots:
            order[pos] = mapping[pos]
        # parity of the induced permutation on the chosen slots
        seq = [mapping[s] for s in slots]
        for i in range(len(seq)):
            for j in range(i + 1, len(seq)):
                if seq[i] > seq[j]:
                    sign = -sign
        t = F.permute_slots(order)
        t = t if sign == 1 else -t
        total = t if total is None else total + t
    return total.scale(Fraction(1, len(perms)))


def tractor_product(F: TractorField, G: TractorField) -> TractorField:
    """Tensor product of tractor fields without free tangent indices."""
    if F.tangent or G.tangent:
        raise ValueError("tractor_product expects fields without tangent indices")
    space = F.space
    spec = F.spec + G.spec
    parts: Dict[Sig, TensorField] = {}
    for s1, f1 in F.parts.items():
        for s2, f2 in G.parts.items():
            t = f1.tensor_product(f2)
            sig = s1 + s2
            prev = parts.get(sig)
            parts[sig] = t if prev is None else prev + t
    return TractorField(space, spec, (), parts)


def adjoint_h_contract(F: TractorField, i: int, j: int) -> TractorField:
    """Contract two adjoint slots of one field with the adjoint metric."""
    if F.spec[i] != "A" or F.spec[j] != "A":
        raise ValueError("h-contraction needs two adjoint slots")
    space = F.space
    n = space.n
    g = space.g
    J = space.J
    lo, hi = (i, j) if i < j else (j, i)
    keep = [k for k in range(len(F.spec)) if k not in (lo, hi)]
    spec = tuple(F.spec[k] for k in keep)
    acc: Dict[Sig, dict] = {}
    for sig, f in F.parts.items():
        if sig[lo] != sig[hi]:
            continue
        letter = sig[lo]
        widths = block_sizes(F.spec, sig)
        starts = []
        pos = 0
        for w in widths:
            starts.append(pos)
            pos += w
        width = pos
        new_sig = tuple(sig[k] for k in keep)
        keep_positions = []
        for k in keep:
            keep_positions.extend(range(starts[k], starts[k] + widths[k]))
        keep_positions.extend(range(width, width + len(F.tangent)))
        for idx, v in f.items():
            bi = idx[starts[lo]:starts[lo] + widths[lo]]
            bj = idx[starts[hi]:starts[hi] + widths[hi]]
            if letter == "Y":
                gv = g.get((bi[0], bj[0]))
                if gv is None:
                    continue
                w = (gv * v) * (Fraction(J, n))
            else:
                g1 = g.get((bi[0], bj[0]))
                g2 = g.get((bi[1], bj[1]))
                if g1 is None or g2 is None:
                    continue
                w = g1 * g2 * v
            if w.is_zero():
                continue
            nidx = tuple(idx[p] for p in keep_positions)
            _acc_add(acc, new_sig, nidx, w)
    return TractorField.from_entries(space, spec, F.tangent, acc)
