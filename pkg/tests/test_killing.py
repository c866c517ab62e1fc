"""Killing tensors: equation, bases, dimensions, prolongation, Young
symmetry, reconstruction and the second-derivative identity."""

from fractions import Fraction

import pytest

from tractorlab.killing import (
    killing_ansatz_dim,
    killing_basis,
    killing_check,
    killing_dim,
    killing_residual,
    killing_residual_tractor,
    killing_vector_basis,
    lemma_identity_check,
    prolong,
    prolongation_is_parallel,
    reconstruct,
    young_membership_check,
)
from tractorlab.spaceforms import fleet, make_model
from tractorlab.tensorfield import from_components
from tractorlab.tractor import TractorField, tractor_connection


def test_rotation_is_killing(flat2):
    k = from_components(flat2, ("u",), {(0,): -flat2.coord(1), (1,): flat2.coord(0)})
    ok, res = killing_check(k)
    assert ok and res.is_zero()


def test_inverse_metric_is_killing(all_models):
    for m in all_models:
        ok, _ = killing_check(m.g_inv)
        assert ok, m.label()


def test_dilation_is_not_killing(flat2):
    k = from_components(flat2, ("u",), {(0,): flat2.coord(0)})
    ok, res = killing_check(k)
    assert not ok
    # residual of the dilation is the (symmetrized) identity
    assert res.component((0, 0)) == flat2.const(1)
    assert res.component((0, 1)) == flat2.zero_rf()


def test_killing_vector_basis_flat(flat2):
    kb = killing_vector_basis(flat2)
    assert kb.provenance == ["T1", "T2", "R12"]
    assert kb.elements[0].component((0,)) == flat2.const(1)


def test_killing_vector_basis_certified_fleet(all_models):
    for m in all_models:
        kb = killing_vector_basis(m)
        assert len(kb) == m.n * (m.n + 1) // 2, m.label()
        for k in kb.elements:
            assert killing_check(k)[0]


def test_weyl_dimension_formula():
    assert [killing_dim(2, v) for v in (0, 1, 2, 3)] == [1, 3, 6, 10]
    assert [killing_dim(3, v) for v in (1, 2, 3)] == [6, 20, 50]
    assert killing_dim(4, 1) == 10


def test_basis_counts():
    flat2 = make_model(2, (2, 0), 0, "cartesian")
    sphere2 = make_model(2, (2, 0), 1, "stereographic")
    flat3 = make_model(3, (3, 0), 0, "cartesian")
    assert len(killing_basis(flat2, 2)) == 6
    assert len(killing_basis(sphere2, 2)) == 6
    assert len(killing_basis(flat3, 2)) == 20


def test_ansatz_oracle_matches_formula_n2(models_n2):
    for m in models_n2:
        for v in (1, 2):
            assert killing_ansatz_dim(m, v) == killing_dim(2, v), (m.label(), v)


def test_basis_elements_satisfy_killing_equation(sphere2):
    for v in (2, 3):
        for k in killing_basis(sphere2, v).elements:
            assert killing_check(k)[0]


def test_prolongation_parallel_iff_killing(sphere2):
    rot = killing_vector_basis(sphere2).elements[2]
    assert prolongation_is_parallel(prolong(rot))
    k2 = killing_basis(sphere2, 2).elements[0]
    assert prolongation_is_parallel(prolong(k2))
    bad = from_components(sphere2, ("u", "u"),
                          {(0, 0): sphere2.coord(0)}).symmetrize()
    assert not prolongation_is_parallel(prolong(bad))


def test_prolong_step_equivalence(sphere2):
    # the one-step residual vanishes exactly when the input residual does
    from tractorlab.killing import prolong_step
    k2 = killing_basis(sphere2, 2).elements[1]
    F = TractorField(sphere2, (), ("u", "u"), {(): k2})
    assert killing_residual_tractor(prolong_step(F)).is_zero()
    bad = from_components(sphere2, ("u", "u"), {(1, 1): sphere2.coord(1)}).symmetrize()
    Fb = TractorField(sphere2, (), ("u", "u"), {(): bad})
    assert not killing_residual_tractor(prolong_step(Fb)).is_zero()


def test_prolong_top_slot_is_base(sphere2):
    k2 = killing_basis(sphere2, 2).elements[2]
    P = prolong(k2)
    assert P.tractor.part(("Y", "Y")) == k2


def test_closed_form_of_two_step_prolongation(sphere2):
    """The two-step prolongation matches the closed component formula
    (mixed parts 1/(l+1) antisymmetrized derivative, pair-pair part
    (1/l)[(1/(l+1)) nabla nabla + (2/n) J g] on the symmetric input)."""
    m = sphere2
    k = killing_basis(m, 2).elements[4]
    P = prolong(k).tractor
    dk = m.covariant_derivative(k).raise_index(0)          # nabla^c k^{ab}
    anti = dk.antisymmetrize((0, 1))                       # nabla^[c k^d] b
    third = Fraction(1, 3)
    for idx, v in P.part(("Y", "Z")).items():
        b, c1, c2 = idx
        assert v == anti.component((c1, c2, b)) * third
    for idx, v in P.part(("Z", "Y")).items():
        c1, c2, b = idx
        assert v == anti.component((c1, c2, b)) * third
    # pair-pair slot: (1/2)[ (1/3) nabla^{b1} nabla^{c1} k^{b2 c2}
    #                        + (2/n) J g^{b1 c1} k^{b2 c2} ], both pairs skewed
    ddk = m.covariant_derivative(dk).raise_index(0)        # (b1, c1, b2, c2)
    expr = ddk.scale(third) + m.g_inv.tensor_product(k).scale(Fraction(2, m.n) * m.J)
    expr = expr.permute((0, 2, 1, 3))                      # (b1, b2, c1, c2)
    expr = expr.antisymmetrize((0, 1)).antisymmetrize((2, 3)).scale(Fraction(1, 2))
    zz = P.part(("Z", "Z"))
    assert dict(zz.items()) == dict(expr.items())


def test_young_membership(sphere2):
    for v in (2, 3):
        for k in killing_basis(sphere2, v).elements[:4]:
            assert young_membership_check(prolong(k).tractor)


def test_reconstruct_round_trip(sphere2):
    for v in (1, 2, 3):
        for k in killing_basis(sphere2, v).elements:
            P = prolong(k)
            assert reconstruct(P.tractor) == k


def test_reconstruct_rejects_non_parallel(sphere2):
    bad = from_components(sphere2, ("u",), {(0,): sphere2.coord(0)})
    P = prolong(bad)
    with pytest.raises(ValueError):
        reconstruct(P.tractor)


def test_parallel_with_zero_top_is_zero(sphere2):
    # a random constant combination of prolonged basis elements minus the
    # prolongation of its top slot is parallel with zero top, hence zero
    b2 = killing_basis(sphere2, 2)
    F = prolong(b2.elements[0]).tractor.scale(3) + prolong(b2.elements[4]).tractor.scale(-7)
    top = reconstruct(F)
    G = F - prolong(top.symmetrize()).tractor
    assert tractor_connection(G).is_zero()
    assert G.is_zero()


def test_reconstruct_metric_prolongation(sphere2):
    P = prolong(sphere2.g_inv)
    assert reconstruct(P.tractor) == sphere2.g_inv


def test_lemma_identity(sphere2):
    for k in killing_basis(sphere2, 2).elements[:4]:
        ok, diff = lemma_identity_check(k)
        assert ok, dict(diff.items())


def test_lemma_identity_flat(flat2):
    for k in killing_basis(flat2, 2).elements[:3]:
        ok, _ = lemma_identity_check(k)
        assert ok


def test_lemma_identity_rejects_non_killing(sphere2):
    bad = from_components(sphere2, ("u", "u"), {(0, 0): sphere2.coord(0)}).symmetrize()
    with pytest.raises(ValueError):
        lemma_identity_check(bad)


def test_symmetric_products_are_killing(sphere2):
    kb = killing_vector_basis(sphere2)
    prod = kb.elements[0].tensor_product(kb.elements[2]).symmetrize()
    assert killing_check(prod)[0]


def test_basis_json_round_trip(flat2):
    kb = killing_basis(flat2, 1)
    doc = kb.to_json()
    assert doc["count"] == 3
    assert [e["provenance"] for e in doc["elements"]] == ["T1", "T2", "R12"]


def test_valence_zero_convention(flat2):
    kb = killing_basis(flat2, 0)
    assert len(kb) == 1 and kb.provenance == ["1"]
    P = prolong(kb.elements[0])
    assert P.valence == 0
    assert P.tractor.part(()).component(()) == flat2.const(1)
    assert killing_dim(2, 0) == 1
