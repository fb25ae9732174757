import numpy as np
import pytest

from rrgivens.schedule import build_circle_schedule


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def sched6():
    return build_circle_schedule(6)


def random_draw(s, rng, complex_gamma=False):
    """Uniform angles in (-pi, pi) and a standard normal upstream gradient."""
    theta = rng.uniform(-np.pi, np.pi, s.n_params)
    gamma = rng.standard_normal((s.n, s.n))
    if complex_gamma:
        gamma = gamma + 1j * rng.standard_normal((s.n, s.n))
    return theta, gamma


def rel_err(got, ref, floor=1e-8):
    got, ref = np.asarray(got), np.asarray(ref)
    mask = np.abs(ref) >= floor
    return float(np.max(np.abs(got[mask] - ref[mask]) / np.abs(ref[mask])))
