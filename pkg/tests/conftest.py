"""Shared fixtures: model spaces are session-scoped so curvature data,
operator tables and Killing bases are computed once per run."""

import pytest

from tractorlab.spaceforms import fleet, make_model


@pytest.fixture(scope="session")
def flat2():
    return fleet()[0]


@pytest.fixture(scope="session")
def sphere2():
    return next(m for m in fleet() if m.n == 2 and m.J == 1 and m.signature == (2, 0))


@pytest.fixture(scope="session")
def all_models():
    return fleet()


@pytest.fixture(scope="session")
def models_n2():
    return [m for m in fleet() if m.n == 2]
