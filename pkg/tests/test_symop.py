"""Differential operators and the symmetry construction."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from tractorlab.killing import killing_basis, killing_check, killing_vector_basis, prolong
from tractorlab.spaceforms import fleet, make_model
from tractorlab.symop import (
    DiffOp,
    OpForm,
    algebra_product,
    build_symmetry,
    dd_skew_identity_check,
    divergence,
    explicit_order3,
    invariant_scalar_order2,
    invariant_scalar_order2_closed_form,
    invariant_vector_order3,
    invariant_vector_order3_closed_form,
    laplace_op,
    operator_from_tractor,
    order3_trace_identities,
    trace_last,
    tracefree_symmetry,
    vector_commutator,
    verify_symmetry,
    weyl_flat_symmetry,
)
from tractorlab.tensorfield import from_components, scalar_field


# ---------------------------------------------------------------------------
# operator ring
# ---------------------------------------------------------------------------


def test_partials_commute_flat(flat2):
    dx = DiffOp(flat2, {1: from_components(flat2, ("u",), {(0,): 1})})
    dy = DiffOp(flat2, {1: from_components(flat2, ("u",), {(1,): 1})})
    assert dx.commutator(dy).is_zero()


def test_commutator_with_coordinate(flat2):
    lap = laplace_op(flat2)
    X = DiffOp.from_scalar(flat2, flat2.coord(0))
    comm = lap.commutator(X)
    # textbook identity, cross-checked by action on monomials below
    want = DiffOp(flat2, {1: from_components(flat2, ("u",), {(0,): 2})})
    assert comm == want
    for f in (flat2.coord(0) ** 3, flat2.coord(0) * flat2.coord(1)):
        assert comm.apply(f) == lap.apply(flat2.coord(0) * f) - flat2.coord(0) * lap.apply(f)


def test_compose_with_identity(flat2):
    lap = laplace_op(flat2)
    assert lap.compose(DiffOp.identity(flat2)) == lap
    assert DiffOp.identity(flat2).compose(lap) == lap


def test_flat_laplacian_text(flat2):
    assert laplace_op(flat2).to_text() == "dx^2 + dy^2"


def test_sphere_laplacian_conformal_form(sphere2):
    # Gamma-expansion oracle: in two dimensions the operator is sigma^2
    # times the flat Laplacian, with no first-order part
    lap = laplace_op(sphere2)
    s2 = sphere2.sigma_rf() ** 2
    form = lap.pform()
    n = sphere2.n
    assert form.terms[(2, 0)] == s2
    assert form.terms[(0, 2)] == s2
    assert all(sum(a) != 1 for a in form.terms)
    assert lap.apply(sphere2.const(1)).is_zero()


def test_canonical_roundtrip(sphere2):
    lap = laplace_op(sphere2)
    again = DiffOp.from_pform(sphere2, lap.pform())
    assert again == lap


def test_apply_oracle_random_operators(sphere2):
    random.seed(2)
    m = sphere2
    x, y = m.coord(0), m.coord(1)
    ops = []
    for _ in range(2):
        coeffs = {
            2: from_components(m, ("u", "u"), {(i, j): random.randint(-3, 3)
                                               for i in range(2) for j in range(2)}).symmetrize(),
            1: from_components(m, ("u",), {(0,): x * random.randint(-2, 2), (1,): y}),
            0: scalar_field(m, m.const(random.randint(-2, 2))),
        }
        ops.append(DiffOp(m, coeffs))
    A, B = ops
    C = A.compose(B)
    for f in (x, y * y, x * y + m.const(3), x * x * y):
        assert C.apply(f) == A.apply(B.apply(f))
    # canonical-coefficient equality iff equal action on low-degree monomials
    assert A != B
    monos = [m.const(1), x, y, x * x, x * y, y * y]
    assert any(A.apply(f) != B.apply(f) for f in monos)


# ---------------------------------------------------------------------------
# symmetry operators
# ---------------------------------------------------------------------------


def test_order1_is_directional_derivative(sphere2):
    for k in killing_vector_basis(sphere2).elements:
        assert build_symmetry(k) == DiffOp(sphere2, {1: k})


def test_order2_closed_form(sphere2):
    for k in killing_basis(sphere2, 2).elements:
        want = DiffOp(sphere2, {2: k.symmetrize(), 1: divergence(k)})
        assert build_symmetry(k) == want


def test_metric_gives_laplacian(sphere2):
    assert build_symmetry(sphere2.g_inv) == laplace_op(sphere2)


def test_symmetries_commute_with_laplacian(sphere2):
    for v in (1, 2):
        for k in killing_basis(sphere2, v).elements:
            assert verify_symmetry(build_symmetry(k)).commutes


def test_noncommuting_control_reproduces_residual_rule(flat2):
    D = DiffOp(flat2, {1: from_components(flat2, ("u",), {(0,): flat2.coord(0)})})
    cert = verify_symmetry(D)
    assert not cert.commutes
    assert cert.residual == DiffOp(flat2, {2: from_components(
        flat2, ("u", "u"), {(0, 0): 2})})
    assert cert.top_matches_residual_rule


def test_residual_rule_on_random_symbols(sphere2):
    random.seed(7)
    m = sphere2
    V = from_components(m, ("u", "u"), {(i, j): random.randint(-3, 3) * m.coord(0)
                                        for i in range(2) for j in range(2)}).symmetrize()
    D = build_symmetry(V)
    cert = verify_symmetry(D)
    assert not cert.commutes
    assert cert.top_matches_residual_rule


def test_order3_explicit_formula(sphere2):
    for k in killing_basis(sphere2, 3).elements[:4]:
        assert explicit_order3(k) == build_symmetry(k)


def test_order3_trace_identities(sphere2):
    for k in killing_basis(sphere2, 3).elements[:4]:
        for name, diff in order3_trace_identities(k).items():
            assert diff.is_zero(), name


def test_invariant_scalar_order2(sphere2):
    for k in killing_basis(sphere2, 2).elements[:4]:
        s = invariant_scalar_order2(k)
        assert s.is_const()
        assert s == invariant_scalar_order2_closed_form(k)


def test_invariant_scalar_for_metric(all_models):
    # k = g: derivatives vanish and the trace is n, value (n+1) J / 2
    for m in all_models:
        s = invariant_scalar_order2(m.g_inv)
        assert s == m.const(Fraction(m.n + 1, 2) * m.J), m.label()


def test_invariant_scalar_flat_square(flat2):
    k = from_components(flat2, ("u", "u"), {(0, 0): 1})
    assert invariant_scalar_order2(k).is_zero()


def test_invariant_vector_order3(sphere2):
    for k in killing_basis(sphere2, 3).elements[:4]:
        v = invariant_vector_order3(k)
        assert v == invariant_vector_order3_closed_form(k)
        assert killing_check(v)[0]


# ---------------------------------------------------------------------------
# algebra of compositions
# ---------------------------------------------------------------------------


def test_algebra_product_translations(flat2):
    kb = killing_vector_basis(flat2)
    dec = algebra_product(kb.elements[0], kb.elements[1])
    assert dec["residual"].is_zero()
    assert dec["bracket_op"].is_zero()
    assert dec["bracket_matches_vector_commutator"]
    assert dec["sym_part_matches_product"]


def test_algebra_product_rotation_translation(flat2):
    kb = killing_vector_basis(flat2)
    rot, t1 = kb.elements[2], kb.elements[0]
    br = vector_commutator(rot, t1)
    assert dict(br.items()) == {(1,): flat2.const(-1)}
    dec = algebra_product(rot, t1)
    assert dec["residual"].is_zero()
    assert dec["bracket_matches_vector_commutator"]


def test_algebra_product_curved_pairs(sphere2):
    kb = killing_vector_basis(sphere2)
    for i in range(3):
        for j in range(i + 1, 3):
            dec = algebra_product(kb.elements[i], kb.elements[j])
            assert dec["residual"].is_zero()
            assert dec["bracket_matches_vector_commutator"]
            assert dec["sym_part_matches_product"]


def test_dd_skew_identity(sphere2, flat2):
    assert dd_skew_identity_check(sphere2)
    assert dd_skew_identity_check(flat2)


def test_operator_linear_in_tensor(sphere2):
    b = killing_basis(sphere2, 2)
    k1, k2 = b.elements[0], b.elements[1]
    assert build_symmetry(k1 + k2) == build_symmetry(k1) + build_symmetry(k2)
    assert build_symmetry(k1.scale(3)) == build_symmetry(k1).scale(3)


def test_operator_injective_on_basis(sphere2):
    # evaluation-rank certificate: the operators of independent Killing
    # tensors are independent
    from tractorlab.linalg import modp_rank_pivots
    b = killing_basis(sphere2, 2)
    ops = [build_symmetry(k) for k in b.elements]
    pts = [(Fraction(1, 3), Fraction(2, 5)), (Fraction(-1, 2), Fraction(3, 7)),
           (Fraction(2, 3), Fraction(-1, 5)), (Fraction(1, 7), Fraction(1, 2))]
    rows = []
    for p in pts:
        for alpha in {a for op in ops for a in op.pform().terms}:
            rows.append([op.pform().terms.get(alpha, sphere2.zero_rf()).eval(p)
                         if alpha in op.pform().terms else Fraction(0) for op in ops])
    rank, _ = modp_rank_pivots(rows)
    assert rank == len(ops)


# ---------------------------------------------------------------------------
# flat-space quantization and trace-free forms
# ---------------------------------------------------------------------------


def test_weyl_order1_reduces_to_directional(flat2):
    k = killing_vector_basis(flat2).elements[2]
    assert weyl_flat_symmetry(k) == DiffOp(flat2, {1: k})


def test_weyl_order2_commutes_and_difference_is_constant(flat2):
    for k in killing_basis(flat2, 2).elements:
        W = weyl_flat_symmetry(k)
        assert verify_symmetry(W).commutes
        diff = W - build_symmetry(k)
        assert diff.order == 0 or diff.is_zero()
        want = DiffOp.from_scalar(
            flat2, divergence(divergence(k)).component(()) * Fraction(1, 4))
        assert diff == want


def test_weyl_order3_commutes(flat2):
    for k in killing_basis(flat2, 3).elements[:4]:
        W = weyl_flat_symmetry(k)
        assert verify_symmetry(W).commutes
        diff = W - build_symmetry(k)
        assert diff.is_zero() or diff.order < 3
        if not diff.is_zero():
            assert verify_symmetry(diff).commutes


def test_weyl_requires_flat(sphere2):
    with pytest.raises(ValueError):
        weyl_flat_symmetry(killing_vector_basis(sphere2).elements[0])


def test_tracefree_constant_difference(flat2):
    k = from_components(flat2, ("u", "u"), {(0, 0): 1, (1, 1): -1})
    D = tracefree_symmetry(k)
    assert D.to_text() == "dx^2 - dy^2"
    assert verify_symmetry(D).commutes


def test_tracefree_kernel_facts(sphere2, flat2):
    # exact fact: the trace map on valence-2 Killing tensors is injective on
    # the curved two-dimensional models (no nonzero trace-free elements
    # exist there), while the flat model has a two-dimensional kernel
    from tractorlab.symop import tracefree_combinations
    assert tracefree_combinations(sphere2, 2) == []
    flat_kernel = tracefree_combinations(flat2, 2)
    assert len(flat_kernel) == 2
    for k in flat_kernel:
        D = tracefree_symmetry(k)
        assert verify_symmetry(D).commutes


def test_tracefree_on_curved_three_dimensional_model():
    # the curved n=3 models do carry trace-free Killing tensors; the bare
    # operator is an exact symmetry there
    from tractorlab.symop import tracefree_combinations
    m = next(mm for mm in fleet() if mm.n == 3 and mm.J == Fraction(3, 2)
             and mm.signature == (3, 0))
    kernel = tracefree_combinations(m, 2)
    assert len(kernel) == 10
    for k in kernel[:2]:
        assert trace_last(k).is_zero()
        D = tracefree_symmetry(k)
        assert verify_symmetry(D).commutes


def test_tracefree_rejects_traceful(sphere2):
    with pytest.raises(ValueError):
        tracefree_symmetry(sphere2.g_inv)


def test_invariant_scalars_surface(sphere2):
    from tractorlab.symop import invariant_scalars
    k2 = killing_basis(sphere2, 2).elements[0]
    out2 = invariant_scalars(k2)
    assert out2["matches"] and out2["scalar"].is_const()
    k3 = killing_basis(sphere2, 3).elements[0]
    out3 = invariant_scalars(k3)
    assert out3["matches"] and out3["vector_is_killing"]
    with pytest.raises(ValueError):
        invariant_scalars(killing_vector_basis(sphere2).elements[0])


def test_order_zero_symmetry(sphere2):
    from tractorlab.tensorfield import scalar_field
    c = scalar_field(sphere2, sphere2.const(Fraction(7, 2)))
    D = build_symmetry(c)
    assert D.order == 0
    assert verify_symmetry(D).commutes


def test_triple_fundamental_derivative_display(sphere2):
    # third iterate on a generic scalar: the all-vector part carries the
    # curvature correction 8 [nabla^3 - (4/n) J g_{b[a} nabla_{c]}] and the
    # alternating part next to it is 8 g_{a b1} nabla_c nabla_{b2}
    from tractorlab.symop import OpForm, covd_table, d_op_tower
    m = sphere2
    dd = d_op_tower(m, 3)
    tab1 = covd_table(m, 1)
    tab2 = covd_table(m, 2)
    tab3 = covd_table(m, 3)
    g = m.g
    n = m.n
    jc = Fraction(4, n) * m.J
    yyy = dd.part(("Y", "Y", "Y"))
    for a in range(n):
        for b in range(n):
            for c in range(n):
                want = OpForm(m, {al: 8 * v for al, v in tab3[(a, b, c)].items()})
                gba = g.get((b, a))
                gbc = g.get((b, c))
                if gba is not None:
                    want = want - OpForm(m, {al: (gba * v) * (4 * jc)
                                             for al, v in tab1[(c,)].items()})
                if gbc is not None:
                    want = want + OpForm(m, {al: (gbc * v) * (4 * jc)
                                             for al, v in tab1[(a,)].items()})
                got = yyy.get((a, b, c)) or OpForm(m)
                assert got == want, (a, b, c)
    yzy = dd.part(("Y", "Z", "Y"))
    for a in range(n):
        for b1 in range(n):
            for b2 in range(n):
                for c in range(n):
                    want = OpForm(m)
                    g1 = g.get((a, b1))
                    if g1 is not None:
                        want = want + OpForm(m, {al: (g1 * v) * 4
                                                 for al, v in tab2[(c, b2)].items()})
                    g2 = g.get((a, b2))
                    if g2 is not None:
                        want = want - OpForm(m, {al: (g2 * v) * 4
                                                 for al, v in tab2[(c, b1)].items()})
                    got = yzy.get((a, b1, b2, c)) or OpForm(m)
                    assert got == want, (a, b1, b2, c)
