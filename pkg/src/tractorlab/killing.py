"""Killing tensors on the model spaces: the defining equation, certified
bases, dimension counts, prolongation to parallel tractors, and the inverse
reconstruction.

Bases of valence-l Killing tensors are generated as symmetric products of the
Killing vectors; a maximal independent subset is certified by exact rank of a
point-evaluation matrix, and the count is cross-checked against both the
two-row Weyl dimension formula and a brute-force polynomial-ansatz solver for
the Killing equation.  A disagreement anywhere raises instead of being
papered over.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

from .exactfield import Poly, RatFun
from .linalg import exact_nullity, modp_nullity, modp_rank_pivots
from .tensorfield import TensorField, from_components, scalar_field
from .tractor import TractorField, expand_to_standard, skew_standard_slots, tractor_connection


# ---------------------------------------------------------------------------
# the Killing equation
# ---------------------------------------------------------------------------


def killing_residual(v: TensorField) -> TensorField:
    """Symmetrized covariant derivative with the new index raised: the
    valence-(l+1) residual of the Killing equation."""
    space = v.space
    return space.covariant_derivative(v).raise_index(0).symmetrize()


def killing_check(v: TensorField) -> tuple:
    """(is_killing, residual) for a fully symmetric contravariant field."""
    if any(var != "u" for var in v.variance):
        raise ValueError("Killing candidates carry upper indices")
    res = killing_residual(v)
    return res.is_zero(), res


# ---------------------------------------------------------------------------
# Killing vector basis: rotations and pseudo-translations
# ---------------------------------------------------------------------------


@dataclass
class KillingBasis:
    space: object
    valence: int
    elements: List[TensorField]
    provenance: List[str]
    seed: int = 0

    def __len__(self):
        return len(self.elements)

    def to_json(self) -> dict:
        return {
            "model": self.space.label(),
            "valence": self.valence,
            "count": len(self.elements),
            "seed": self.seed,
            "elements": [
                {"provenance": word, "tensor": t.to_json()}
                for word, t in zip(self.provenance, self.elements)
            ],
        }


def killing_vector_basis(space) -> KillingBasis:
    """The n(n+1)/2 generators: rotations eta_ii x^i d_j - eta_jj x^j d_i and
    pseudo-translations d_i + (c/4)(2 eta_ii x^i x^j d_j - <x,x>_eta d_i);
    every generator is certified against the Killing equation."""
    key = ("kbasis", 1)
    if key in space._cache:
        return space._cache[key]
    n = space.n
    eta = space.eta
    c4 = space.curvature_c / 4
    xs = [space.coord(i) for i in range(n)]
    norm = space.zero_rf()
    for i in range(n):
        norm = norm + xs[i] * xs[i] * eta[i]
    elements = []
    words = []
    for i in range(n):
        comp = {}
        for j in range(n):
            val = space.const(1) if i == j else space.zero_rf()
            if c4:
                val = val + (xs[i] * xs[j] * (2 * eta[i] * c4))
                if i == j:
                    val = val - norm * c4
            if not val.is_zero():
                comp[(j,)] = val
        elements.append(from_components(space, ("u",), comp))
        words.append("T%d" % (i + 1))
    for i in range(n):
        for j in range(i + 1, n):
            comp = {(j,): xs[i] * eta[i], (i,): -(xs[j] * eta[j])}
            elements.append(from_components(space, ("u",), comp))
            words.append("R%d%d" % (i + 1, j + 1))
    for word, el in zip(words, elements):
        ok, res = killing_check(el)
        if not ok:
            raise AssertionError("generator %s fails the Killing equation on %s"
                                 % (word, space.label()))
    basis = KillingBasis(space, 1, elements, words)
    space._cache[key] = basis
    return basis


# ---------------------------------------------------------------------------
# dimension formula and certified bases of higher valence
# ---------------------------------------------------------------------------


def killing_dim(n: int, valence: int) -> int:
    """Dimension of the valence-l Killing tensor space on an n-dimensional
    space form: the two-row partition (l, l) of the general linear group in
    n+1 variables, by the Weyl product formula."""
    if n < 2 or valence < 0:
        raise ValueError("need n >= 2 and valence >= 0")
    if valence == 0:
        return 1
    N = n + 1
    lam = [valence, valence] + [0] * (N - 2)
    num = 1
    den = 1
    for i in range(N):
        for j in range(i + 1, N):
            num *= lam[i] - lam[j] + j - i
            den *= j - i
    assert num % den == 0
    return num // den


def _sym_index_reps(n: int, valence: int):
    return list(itertools.combinations_with_replacement(range(n), valence))


def _eval_points(space, count: int, seed: int):
    rng = random.Random(seed)
    pts = []
    guard = 0
    while len(pts) < count:
        guard += 1
        if guard > 100 * count:
            raise RuntimeError("could not sample enough regular points")
        p = tuple(Fraction(rng.randint(-9, 9), rng.randint(1, 3)) for _ in range(space.n))
        if space.sigma.eval(p) == 0:
            continue
        pts.append(p)
    return pts


def _grid_points(space, count: int):
    pts = []
    vals = [Fraction(k, 7) for k in range(1, 60)]
    for combo in itertools.product(vals, repeat=space.n):
        if space.sigma.eval(combo) != 0:
            pts.append(tuple(combo))
        if len(pts) >= count:
            break
    return pts


def killing_basis(space, valence: int, seed: int = 0) -> KillingBasis:
    """Certified basis of valence-l Killing tensors from symmetric products
    of Killing vectors.  The selection is an exact rank computation on point
    evaluations; the count must equal the Weyl-formula dimension."""
    if valence < 0:
        raise ValueError("valence must be non-negative")
    key = ("kbasis", valence, seed)
    if key in space._cache:
        return space._cache[key]
    if valence == 0:
        basis = KillingBasis(space, 0, [scalar_field(space, space.const(1))], ["1"], seed)
        space._cache[key] = basis
        return basis
    if valence == 1:
        basis = killing_vector_basis(space)
        space._cache[key] = basis
        return basis
    kv = killing_vector_basis(space)
    words = []
    candidates = []
    for combo in itertools.combinations_with_replacement(range(len(kv.elements)), valence):
        t = kv.elements[combo[0]]
        for i in combo[1:]:
            t = t.tensor_product(kv.elements[i])
        candidates.append(t.symmetrize())
        words.append("*".join(kv.provenance[i] for i in combo))
    expected = killing_dim(space.n, valence)
    reps = _sym_index_reps(space.n, valence)

    def rank_and_pivots(points):
        rows = []
        for p in points:
            for idx in reps:
                row = []
                for cand in candidates:
                    v = cand.get(idx)
                    row.append(v.eval(p) if v is not None else Fraction(0))
                if any(row):
                    rows.append(row)
        return modp_rank_pivots(rows)

    pts = _eval_points(space, 2 * len(candidates), seed)
    rank, pivots = rank_and_pivots(pts)
    if rank != expected:
        pts = _eval_points(space, 3 * len(candidates), seed + 1)
        rank, pivots = rank_and_pivots(pts)
    if rank != expected:
        pts = _grid_points(space, 3 * len(candidates))
        rank, pivots = rank_and_pivots(pts)
    if rank != expected:
        raise AssertionError(
            "generated Killing tensors of valence %d span rank %d, expected %d on %s"
            % (valence, rank, expected, space.label()))
    elements = [candidates[i] for i in pivots]
    chosen = [words[i] for i in pivots]
    basis = KillingBasis(space, valence, elements, chosen, seed)
    space._cache[key] = basis
    return basis


def killing_ansatz_dim(space, valence: int, exact_threshold: int = 64) -> int:
    """Brute-force oracle: solve the Killing equation exactly for a
    polynomial ansatz (degree <= l flat, <= 2l curved, which contains all
    symmetric products of Killing vectors).  Returns the solution dimension.

    For large systems the nullity is certified by a sandwich: a mod-p
    elimination bounds it from above, the generated basis from below; if the
    two disagree the exact rational elimination decides.
    """
    n = space.n
    deg = valence if space.J == 0 else 2 * valence
    monos = [e for total in range(deg + 1)
             for e in itertools.combinations_with_replacement(range(n), total)]

    def mono_poly(exps):
        e = [0] * n
        for i in exps:
            e[i] += 1
        return RatFun.from_poly(Poly.monomial(space.vars, tuple(e)))

    reps = _sym_index_reps(n, valence)
    unknowns = [(idx, m) for idx in reps for m in monos]
    res_reps = _sym_index_reps(n, valence + 1)
    rows: dict = {}
    sym_decl = (("s", tuple(range(valence))),) if valence > 1 else None
    for u, (idx, m) in enumerate(unknowns):
        basis_field = TensorField(space, ("u",) * valence, {idx: mono_poly(m)},
                                  sym_decl, _canonical=True)
        res = killing_residual(basis_field)
        for ridx in res_reps:
            v = res.get(ridx)
            if v is None:
                continue
            if not v.den.is_const():
                raise AssertionError("ansatz residual unexpectedly non-polynomial")
            for exps, coeff in v.num.terms().items():
                rows.setdefault((ridx, exps), {})[u] = coeff
    matrix = []
    nu = len(unknowns)
    for _, entries in sorted(rows.items()):
        row = [Fraction(0)] * nu
        for u, c in entries.items():
            row[u] = c
        matrix.append(row)
    if nu <= exact_threshold:
        return exact_nullity(matrix, nu)
    upper = modp_nullity(matrix, nu)
    lower = len(killing_basis(space, valence))
    if upper == lower:
        return upper
    return exact_nullity(matrix, nu)


# ---------------------------------------------------------------------------
# prolongation to parallel tractors
# ---------------------------------------------------------------------------


@dataclass
class ProlongedTractor:
    base: TensorField
    tractor: TractorField
    valence: int


def prolong_step(F: TractorField) -> TractorField:
    """One prolongation step: absorb the first tangent index into a new
    adjoint slot (appended last), pairing the field with the antisymmetrized
    raised derivative weighted by 1/(l+1)."""
    space = F.space
    ell = len(F.tangent)
    if ell == 0:
        raise ValueError("no tangent index left to prolong")
    if any(v != "u" for v in F.tangent):
        raise ValueError("prolongation expects upper tangent indices")
    spec = F.spec + ("A",)
    tangent = F.tangent[1:]
    parts = {}
    for sig, f in F.parts.items():
        parts[sig + ("Y",)] = f
    G = tractor_connection(F).raise_tangent(0)
    for sig, f in G.parts.items():
        off = G._block_width(sig)
        anti = f.antisymmetrize((off, off + 1)).scale(Fraction(1, ell + 1))
        if anti.is_zero():
            continue
        nsig = sig + ("Z",)
        prev = parts.get(nsig)
        parts[nsig] = anti if prev is None else prev + anti
    # reinterpret block structure under the extended spec
    out = {}
    for sig, f in parts.items():
        if f.is_zero():
            continue
        out[sig] = TensorField(space, f.variance, dict(f.comp), f.sym, _canonical=True)
    return TractorField(space, spec, tangent, out)


def prolong(k: TensorField, valence: Optional[int] = None) -> ProlongedTractor:
    """Iterated prolongation of a symmetric tensor into the l-fold adjoint
    tensor power; parallel exactly when the input is Killing.  Results are
    cached per model (several verification passes reuse them)."""
    space = k.space
    ell = k.valence if valence is None else valence
    if k.valence != ell:
        raise ValueError("tensor valence does not match the requested order")
    cache = space._cache.setdefault("prolong", {})
    hit = cache.get(k)
    if hit is not None:
        return hit
    if ell == 0:
        F = TractorField(space, (), (), {(): k})
        out = ProlongedTractor(k, F, 0)
    else:
        F = TractorField(space, (), ("u",) * ell, {(): k})
        for _ in range(ell):
            F = prolong_step(F)
        out = ProlongedTractor(k, F, ell)
    cache[k] = out
    return out


def prolongation_is_parallel(P: ProlongedTractor) -> bool:
    return tractor_connection(P.tractor).is_zero()


def reconstruct(F: TractorField) -> TensorField:
    """Base Killing tensor of a parallel section: the all-Y slot component.
    Raises when the section is not parallel."""
    dF = tractor_connection(F)
    if not dF.is_zero():
        sig = next(iter(dF.parts))
        raise ValueError("section is not parallel; first nonzero signature %r" % (sig,))
    ell = len(F.spec)
    top = F.part(("Y",) * ell)
    return top


def young_membership_check(F: TractorField) -> bool:
    """Skew-symmetrization over the index triples that generate all triples
    (two adjacent pair indices + the next pair's first index, and three
    leading pair indices) must vanish for a two-row Young symmetry."""
    ell = len(F.spec)
    if ell < 2:
        return True
    std = expand_to_standard(F)
    if not skew_standard_slots(std, (0, 1, 2)).is_zero():
        return False
    if ell >= 3 and not skew_standard_slots(std, (0, 2, 4)).is_zero():
        return False
    return True


def killing_residual_tractor(F: TractorField) -> TractorField:
    """Symmetrized raised coupled derivative over the tangent indices."""
    G = tractor_connection(F).raise_tangent(0)
    return G.symmetrize_tangent()


# ---------------------------------------------------------------------------
# the curvature identity satisfied by Killing tensors
# ---------------------------------------------------------------------------


def lemma_identity_check(k: TensorField) -> tuple:
    """Exact check of the second-derivative identity for Killing tensors:
    the symmetrized derivative of the antisymmetrized derivative equals
    -(2(l+1)/n) J g^(a1 [c k^d] a2...al), symmetrizing over all a's.
    Returns (ok, difference)."""
    space = k.space
    ell = k.valence
    ok, _ = killing_check(k)
    if not ok:
        raise ValueError("input is not a Killing tensor")
    W = space.covariant_derivative(k).raise_index(0).antisymmetrize((0, 1))
    B = space.covariant_derivative(W).raise_index(0)
    # slots: (a1, c, d, a2..al); symmetrize over a-slots only
    sym_slots = (0,) + tuple(range(3, ell + 2))
    lhs = B.symmetrize(sym_slots) if len(sym_slots) > 1 else B
    gk = space.g_inv.tensor_product(k)  # (a1, c, d, a2..al)
    gk = gk.antisymmetrize((1, 2))
    gk = gk.symmetrize(sym_slots) if len(sym_slots) > 1 else gk
    rhs = gk.scale(Fraction(2 * (ell + 1), space.n) * space.J)
    diff = lhs + rhs
    return diff.is_zero(), diff
