import numpy as np
import pytest

from mppgeo import presets
from mppgeo.geometry import CovarianceSchedule, DriftModel
from mppgeo.odeint import uniform_grid


@pytest.fixture(scope="session")
def sphere():
    return presets.sphere_model()


@pytest.fixture(scope="session")
def flat2():
    return presets.flat_model(2)


@pytest.fixture(scope="session")
def martinet():
    return presets.martinet_model()


@pytest.fixture
def grid1000():
    return uniform_grid(1.0, 1000)


@pytest.fixture
def zero_drift2():
    return DriftModel.zero(2)


@pytest.fixture
def sigma_iso2():
    return CovarianceSchedule.isotropic(2)


def smooth_sphere_path(seed: int = 0):
    """Random smooth chart path starting at the origin (trig polynomial)."""
    rng = np.random.default_rng(seed)
    a = 0.5 * rng.standard_normal((3, 2))
    freq = np.array([1.0, 1.7, 2.3])

    def point(t):
        return sum(a[m] * (1.0 - np.cos(freq[m] * t)) for m in range(3)) \
            + 0.2 * t * np.array([1.0, -0.5])

    def velocity(t):
        return sum(a[m] * freq[m] * np.sin(freq[m] * t) for m in range(3)) \
            + 0.2 * np.array([1.0, -0.5])

    return point, velocity
