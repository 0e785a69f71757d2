import numpy as np
import pytest
from scipy.stats import special_ortho_group

from isoalloc.market_model import CovarianceTriple


def random_triple(rng, n, m, coupling=0.5):
    """Consistent triple: blocks of a random SPD joint covariance of (r, s).

    ``coupling`` shrinks the cross block so that the canonical spectrum stays
    well inside (0, 1).
    """
    k = n + m
    a = rng.standard_normal((k, 2 * k))
    joint = a @ a.T / (2 * k) + 0.1 * np.eye(k)
    omega, xi = joint[:n, :n], joint[n:, n:]
    pi = coupling * joint[:n, n:]
    return CovarianceTriple(omega, xi, pi)


def random_rotation(rng, n):
    if n == 1:
        return np.eye(1)
    return special_ortho_group.rvs(n, random_state=rng)


def random_spd(rng, n, floor=0.1):
    a = rng.standard_normal((n, n))
    return a @ a.T + floor * np.eye(n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
