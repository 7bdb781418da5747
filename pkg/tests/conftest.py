import numpy as np
import pytest

from volflux.homology import standard_curves
from volflux.isotopy import Letter, TwistProfile, TwistWord, standard_cylinders
from volflux.surface import build_genus2_l, build_torus


@pytest.fixture(scope="session")
def L():
    return build_genus2_l()


@pytest.fixture(scope="session")
def torus():
    return build_torus()


@pytest.fixture(scope="session")
def system(L):
    return standard_curves(L)


@pytest.fixture(scope="session")
def torus_system(torus):
    return standard_curves(torus)


@pytest.fixture(scope="session")
def cyl(L):
    return standard_cylinders(L)


@pytest.fixture(scope="session")
def lemma_word(cyl):
    """Tent on the bottom cylinder with integral 0.5."""
    prof = TwistProfile.tent(cyl["h1"], 0.5, 0.25, 2.0)
    return TwistWord((Letter(prof, 1.0),), id="lemma")


def unit_word(cylinder):
    mid = (cylinder.z0 + cylinder.z1) / 2
    prof = TwistProfile.tent(cylinder, mid, cylinder.height / 4, 1.0)
    prof = prof.scaled(1.0 / prof.integral())
    return TwistWord((Letter(prof, 1.0),), id=f"unit-{cylinder.id}")


def midpoint_integral(f, a, b, n=200_000):
    """Composite midpoint rule, independent of the profile's own integral."""
    z = a + (np.arange(n) + 0.5) * (b - a) / n
    return float(np.sum(f(z)) * (b - a) / n)
