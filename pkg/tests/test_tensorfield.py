"""Tensor field operations: symmetrization, contraction, metric shifts."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from tractorlab.exactfield import RatFun
from tractorlab.spaceforms import fleet
from tractorlab.tensorfield import (
    TensorField,
    from_components,
    kronecker_delta,
    scalar_field,
    zero_tensor,
)


def rf(space, c):
    return space.const(c)


def test_symmetrize_kills_antisymmetric(flat2):
    t = from_components(flat2, ("d", "d"), {(0, 1): 1, (1, 0): -1})
    assert t.symmetrize().is_zero()


def test_symmetrize_fixed_point(flat2):
    t = from_components(flat2, ("d", "d"), {(0, 1): 2, (1, 0): 2, (0, 0): 5})
    assert t.symmetrize() == t


def test_symmetrize_normalization(flat2):
    # delta_a^x delta_b^y over R^2: symmetrized value 1/2 at both orders
    t = from_components(flat2, ("d", "d"), {(0, 1): 1})
    s = t.symmetrize()
    assert s.component((0, 1)) == rf(flat2, Fraction(1, 2))
    assert s.component((1, 0)) == rf(flat2, Fraction(1, 2))


def test_antisymmetrize_kills_symmetric(flat2):
    t = from_components(flat2, ("d", "d"), {(0, 1): 3, (1, 0): 3})
    assert t.antisymmetrize().is_zero()


def test_no_three_forms_in_two_dimensions(flat2):
    t = from_components(flat2, ("d", "d", "d"),
                        {(i, j, k): 1 + i + 2 * j + 4 * k
                         for i in range(2) for j in range(2) for k in range(2)})
    assert t.antisymmetrize().is_zero()


def test_metric_antisymmetrization_component(flat2):
    # g_c[a g_b]d on flat R^2 at (a,b,c,d) = (0,1,0,1): expansion gives 1/2
    g = flat2.g
    gg = g.tensor_product(g)  # slots (c, a, b, d)
    anti = gg.antisymmetrize((1, 2))
    assert anti.component((0, 0, 1, 1)) == rf(flat2, Fraction(1, 2))


def test_contract_delta_trace():
    m3 = next(m for m in fleet() if m.n == 3 and m.J == 0 and m.signature == (3, 0))
    d = kronecker_delta(m3)
    assert d.contract(0, 1).component(()) == rf(m3, 3)


def test_raise_then_lower_roundtrip(sphere2):
    t = from_components(sphere2, ("d", "d"),
                        {(0, 0): sphere2.coord(0), (0, 1): 1,
                         (1, 1): sphere2.coord(1) * sphere2.coord(0)})
    up = t.raise_index(0)
    back = up.lower_index(0)
    assert back == t


def test_metric_inverse_on_sphere_chart(sphere2):
    gg = sphere2.g_inv.tensor_product(sphere2.g).contract(1, 2)
    assert gg == kronecker_delta(sphere2)


def test_mixed_variance_symmetrize_rejected(flat2):
    t = from_components(flat2, ("u", "d"), {(0, 1): 1})
    with pytest.raises(ValueError):
        t.symmetrize()
    with pytest.raises(ValueError):
        t.antisymmetrize((0, 1))


def test_contract_same_variance_rejected(flat2):
    t = from_components(flat2, ("u", "u"), {(0, 1): 1})
    with pytest.raises(ValueError):
        t.contract(0, 1)


def test_projection_properties(flat2):
    random.seed(3)
    t = from_components(flat2, ("d", "d", "d"),
                        {(i, j, k): random.randint(-4, 4)
                         for i in range(2) for j in range(2) for k in range(2)})
    s = t.symmetrize()
    a = t.antisymmetrize((0, 1))
    assert s.symmetrize() == s
    assert a.antisymmetrize((0, 1)) == a
    # mutually annihilating on the same slot set
    assert t.symmetrize((0, 1)).antisymmetrize((0, 1)).is_zero()
    assert t.antisymmetrize((0, 1)).symmetrize((0, 1)).is_zero()


def test_contraction_against_bruteforce(sphere2):
    random.seed(11)
    x = sphere2.coord(0)
    t = from_components(sphere2, ("u", "d", "d"),
                        {(i, j, k): random.randint(-3, 3) * x + random.randint(-2, 2)
                         for i in range(2) for j in range(2) for k in range(2)})
    c = t.contract(0, 2)
    for j in range(2):
        total = sphere2.zero_rf()
        for e in range(2):
            total = total + t.component((e, j, e))
        assert c.component((j,)) == total


def test_tensor_product_and_declared_symmetry_storage(flat2):
    g = flat2.g
    assert g.sym == (("s", (0, 1)),)
    t = g.tensor_product(g)
    assert t.sym == (("s", (0, 1)), ("s", (2, 3)))
    # canonical storage really holds only slot-ordered representatives
    anti = from_components(flat2, ("d", "d"), {(0, 1): 1, (1, 0): -1}).antisymmetrize()
    assert list(anti.comp) == [(0, 1)]
    assert anti.get((1, 0)) == -rf(flat2, Fraction(1))


def test_permute_roundtrip(flat2):
    t = from_components(flat2, ("u", "d", "u"),
                        {(0, 1, 1): 2, (1, 0, 0): 3})
    p = t.permute((2, 0, 1))
    assert p.variance == ("u", "u", "d")
    assert p.component((1, 0, 1)) == rf(flat2, 2)
    assert p.permute((1, 2, 0)) == t


def test_json_round_trip(sphere2):
    t = from_components(sphere2, ("u", "u"),
                        {(0, 1): sphere2.coord(0) / (sphere2.const(1) + sphere2.coord(1)),
                         (1, 0): sphere2.coord(0) / (sphere2.const(1) + sphere2.coord(1))},
                        sym=(("s", (0, 1)),))
    assert TensorField.from_json(sphere2, t.to_json()) == t


def test_raise_lower_inverse_on_fleet(all_models):
    for m in all_models:
        t = from_components(m, ("d", "d"),
                            {(0, 0): m.coord(0), (0, 1): 1, (1, 1): m.coord(m.n - 1)})
        assert t.raise_index(1).lower_index(1) == t
        assert t.raise_index(0).lower_index(0) == t, m.label()
