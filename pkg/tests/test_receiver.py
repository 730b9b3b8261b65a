import numpy as np
import pytest

from clusterbeam.linalg import herm_eig, inv_sqrt_psd
from clusterbeam.model import (BeamformerState, Cluster, DegenerateIterateError, NetworkModel, evaluate_snr,
                               random_feasible_init, received_noise_cov, received_signal)
from clusterbeam.receiver import optimal_postcoder, receiver_snr
from conftest import random_model


def test_hand_examples(s1):
    m = NetworkModel([Cluster(np.eye(1), 5.0)], [np.eye(2)], 1.0)
    f = [np.array([[1.0], [0.0]])]
    g = optimal_postcoder(m, f)
    assert np.allclose(g / g[0], [1, 0])            # (1/2, 0) up to the unit-norm scaling
    assert receiver_snr(m, f) == pytest.approx(0.5)
    one = [np.ones((1, 1))]
    assert receiver_snr(s1, one) == pytest.approx(0.5)
    assert evaluate_snr(s1, BeamformerState(one, optimal_postcoder(s1, one))) == pytest.approx(0.5)


def test_matched_filter_without_observation_noise():
    m = NetworkModel([Cluster(np.zeros((1, 1)), 1.0)], [np.array([[1.0], [2j]])], 0.5, check_pd=False)
    g = optimal_postcoder(m, [np.ones((1, 1))])
    h = np.array([1.0, 2j])
    assert np.allclose(g, h / np.linalg.norm(h))


def test_zero_signal(s1):
    assert receiver_snr(s1, [np.zeros((1, 1))]) == 0.0
    with pytest.raises(DegenerateIterateError):
        optimal_postcoder(s1, [np.zeros((1, 1))])


def test_consistency_and_rayleigh():
    for seed in range(20):
        m = random_model(seed)
        pre = random_feasible_init(m, seed).precoders
        g = optimal_postcoder(m, pre)
        val = receiver_snr(m, pre)
        assert val == pytest.approx(evaluate_snr(m, BeamformerState(pre, g)), rel=1e-10)
        r = inv_sqrt_psd(received_noise_cov(m, pre))
        u = r @ received_signal(m, pre)
        assert val == pytest.approx(herm_eig(np.outer(u, u.conj())).values[0], rel=1e-9)
