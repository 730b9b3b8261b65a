import numpy as np
import pytest

from clusterbeam.model import Cluster, NetworkModel, random_channels, toeplitz_obs_cov
from clusterbeam.harness.scenarios import scalar_model


def random_model(seed, L=3, K=(1, 2, 2), N=(2, 2, 3), M=2, fc_noise=0.3, obs_var=0.5):
    """Desk-scale heterogeneous instance with Toeplitz observation noise."""
    rng = np.random.default_rng(seed)
    clusters = [Cluster(toeplitz_obs_cov(k, obs_var, 0.5), float(rng.uniform(1.0, 3.0))) for k in K[:L]]
    return NetworkModel(clusters, random_channels(M, N[:L], rng_seed=seed), fc_noise)


def random_dims(seed, max_L=4, max_K=3, max_N=4, max_M=4):
    rng = np.random.default_rng(10_000 + seed)
    L = int(rng.integers(1, max_L + 1))
    K = tuple(int(k) for k in rng.integers(1, max_K + 1, L))
    N = tuple(int(n) for n in rng.integers(1, max_N + 1, L))
    M = int(rng.integers(1, max_M + 1))
    return dict(L=L, K=K, N=N, M=M)


def random_hermitian(rng, n, psd=False):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return x @ x.conj().T if psd else 0.5 * (x + x.conj().T)


@pytest.fixture
def s1():
    return scalar_model(1)


@pytest.fixture
def s2():
    return scalar_model(2)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
