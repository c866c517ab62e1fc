"""Space-form construction and exact curvature identity checks."""

import random
from fractions import Fraction

import pytest

from tractorlab.exactfield import Poly, RatFun
from tractorlab.spaceforms import (
    ModelSpace,
    fleet,
    make_model,
    verify_space_form,
)
from tractorlab.tensorfield import TensorField, from_components, scalar_field


def test_flat_model_metric_is_signature_diagonal():
    m = make_model(2, (2, 0), 0, "cartesian")
    assert m.g.component((0, 0)) == m.const(1)
    assert m.g.component((1, 1)) == m.const(1)
    assert m.g.component((0, 1)).is_zero()
    lor = make_model(2, (1, 1), 0, "cartesian")
    assert lor.g.component((1, 1)) == lor.const(-1)


def test_sphere_chart_conformal_factor():
    m = make_model(2, (2, 0), 1, "stereographic")
    x, y = (Poly.variable(m.vars, i) for i in range(2))
    quarter = Fraction(1, 4)
    assert m.sigma == Poly.const(m.vars, 1) + quarter * (x * x + y * y)
    s = m.sigma_rf()
    assert m.g.component((0, 0)) == m.const(1) / (s * s)


def test_lorentzian_hyperbolic_chart_conformal_factor():
    m = make_model(3, (2, 1), Fraction(-3, 2), "stereographic")
    # c = 2J/n = -1, eta-norm carries the signature sign on the last slot
    x, y, z = (Poly.variable(m.vars, i) for i in range(3))
    quarter = Fraction(1, 4)
    assert m.sigma == Poly.const(m.vars, 1) - quarter * (x * x + y * y - z * z)


def test_make_model_validates_signature():
    with pytest.raises(ValueError):
        make_model(3, (2, 2), 0, "cartesian")
    with pytest.raises(ValueError):
        make_model(2, (2, 0), 1, "cartesian")


def test_flat_christoffel_vanishes():
    m = make_model(3, (3, 0), 0, "cartesian")
    assert m.christoffel.is_zero()


def test_sphere_christoffel_symmetric(sphere2):
    gamma = sphere2.christoffel
    for c in range(2):
        for a in range(2):
            for b in range(2):
                assert gamma.component((c, a, b)) == gamma.component((c, b, a))


def test_metricity_on_fleet(all_models):
    for m in all_models:
        assert m.covariant_derivative(m.g).is_zero(), m.label()


def test_flat_scalar_laplacian():
    m = make_model(2, (2, 0), 0, "cartesian")
    f = m.coord(0) ** 2 + m.coord(1) ** 2
    assert m.laplacian(scalar_field(m, f)).component(()) == m.const(4)


def test_sphere_scalar_laplacian_conformal(sphere2):
    # oracle: in 2d the Laplacian is sigma^2 times the flat one
    f = sphere2.coord(0) ** 2 + sphere2.coord(1) ** 2
    s = sphere2.sigma_rf()
    assert sphere2.laplacian(scalar_field(sphere2, f)).component(()) == 4 * s * s


def test_verify_space_form_fleet(all_models):
    for m in all_models:
        rep = verify_space_form(m)
        assert rep.ok, (m.label(), rep.first())


def test_verify_space_form_rejects_corrupted_metric(sphere2):
    # g + diag(x, 0) on the sphere chart is no longer a space form
    bad = TensorField(sphere2, ("d", "d"), {
        (0, 0): sphere2.g.component((0, 0)) + sphere2.coord(0),
        (1, 1): sphere2.g.component((1, 1)),
    }, (("s", (0, 1)),))
    corrupted = ModelSpace(2, (2, 0), 1, "stereographic", g=bad)
    rep = verify_space_form(corrupted)
    assert not rep.ok
    identity, idx, value = rep.first()
    assert identity.startswith(("space form", "Schouten", "Weyl", "metricity",
                                "parallel curvature"))


def test_ricci_identity_randomized(sphere2):
    random.seed(5)
    x, y = sphere2.coord(0), sphere2.coord(1)
    v = from_components(sphere2, ("u",), {
        (0,): x * y + random.randint(-3, 3),
        (1,): y * y + random.randint(-3, 3) * x,
    })
    dd = sphere2.covariant_derivative(sphere2.covariant_derivative(v))
    R = sphere2.curvature.riemann
    for a in range(2):
        for b in range(2):
            for c in range(2):
                lhs = dd.component((a, b, c)) - dd.component((b, a, c))
                rhs = sphere2.zero_rf()
                for d in range(2):
                    rv = R.get((a, b, c, d))
                    if rv is not None:
                        rhs = rhs + rv * v.component((d,))
                assert lhs == rhs


def test_parallel_curvature(all_models):
    for m in all_models:
        if m.n == 2:
            nr = m.covariant_derivative(m.curvature.riemann_lower)
            assert nr.is_zero(), m.label()


def test_schouten_trace_is_j(all_models):
    for m in all_models:
        assert m.curvature.j_check == m.const(m.J), m.label()


def test_fleet_size_and_coverage():
    models = fleet()
    assert len(models) == 12
    assert {m.n for m in models} == {2, 3}
    assert any(m.signature[1] == 1 for m in models)
    assert any(m.J < 0 for m in models)
