import math

import numpy as np
import pytest

from qlm.quasilocal import SurfaceFamily
from qlm.spacetime import minkowski, schwarzschild_isotropic

BETA = 0.6
GAMMA = 1.25


@pytest.fixture(scope="session")
def boosted_family():
    return SurfaceFamily(schwarzschild_isotropic(1.0), BETA, order=64, nphi=4)


@pytest.fixture(scope="session")
def static_family():
    return SurfaceFamily(schwarzschild_isotropic(1.0), 0.0, order=64, nphi=4)


@pytest.fixture(scope="session")
def flat_family():
    return SurfaceFamily(minkowski(), 0.0, order=64, nphi=4)


@pytest.fixture(scope="session")
def boosted_500(boosted_family):
    return boosted_family.at(500.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_exterior_points(rng, n, M=1.0, rmin=None, rmax=50.0):
    """Points with ``M/2 < ρ``; time coordinate arbitrary."""
    rmin = rmin if rmin is not None else 0.6 * M + 0.1
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = rng.uniform(rmin, rmax, size=(n, 1))
    t = rng.uniform(-10, 10, size=(n, 1))
    return np.hstack([t, r * d])


def halving_ratio(values):
    """Ratios of successive differences from the limit estimate, for
    sequences at doubling radii."""
    v = np.asarray(values, dtype=float)
    d = np.diff(v)
    return d[:-1] / d[1:]


def gamma_of(beta):
    return 1.0 / math.sqrt(1.0 - beta ** 2)
