"""Closed-form optimal fusion postcoder and the SNR it attains."""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .model import DegenerateIterateError, NetworkModel, check_precoders, received_noise_cov, received_signal


def _signal_and_factor(model: NetworkModel, precoders):
    check_precoders(model, precoders)
    h = received_signal(model, precoders)
    if not np.any(np.abs(h) > 0):
        return h, None
    return h, sla.cho_factor(received_noise_cov(model, precoders), lower=True)


def optimal_postcoder(model: NetworkModel, precoders) -> np.ndarray:
    """Unit-norm g proportional to M^{-1} h, where M is the received noise covariance."""
    h, factor = _signal_and_factor(model, precoders)
    if factor is None:
        raise DegenerateIterateError("received signal sum_i H_i F_i 1 is zero")
    g = sla.cho_solve(factor, h)
    norm = np.linalg.norm(g)
    if norm == 0 or not np.isfinite(norm):
        raise DegenerateIterateError("postcoder solve returned a zero or non-finite vector")
    return g / norm


def receiver_snr(model: NetworkModel, precoders) -> float:
    """sigma_s^2 * ||M^{-1/2} h||^2; zero when no signal reaches the fusion center."""
    h, factor = _signal_and_factor(model, precoders)
    if factor is None:
        return 0.0
    w = sla.solve_triangular(factor[0], h, lower=True)
    return float(model.source_power * np.vdot(w, w).real)
