"""Small scalar instances with known optima, plus a brute-force grid verifier."""
from __future__ import annotations

import itertools

import numpy as np

from ..model import BeamformerState, Cluster, NetworkModel


def scalar_model(L: int, power: float = 2.0, obs_var: float = 1.0, fc_noise: float = 1.0) -> NetworkModel:
    """L single-sensor, single-antenna clusters with unit channels and one FC antenna."""
    return NetworkModel([Cluster(np.eye(1) * obs_var, power) for _ in range(L)],
                        [np.ones((1, 1))] * L, fc_noise)


def scenario_s1() -> NetworkModel:
    return scalar_model(1)


def scenario_s2() -> NetworkModel:
    return scalar_model(2)


def scalar_init(model: NetworkModel, value: float = 0.5) -> BeamformerState:
    return BeamformerState([np.full((1, 1), value, dtype=complex) for _ in range(model.L)], np.ones(1))


SCENARIOS = {"s1": (scenario_s1, 0.5), "s2": (scenario_s2, 4.0 / 3.0)}


def _scalar_snr(model, mags, phases):
    """SNR of f_i = mags_i exp(j phases_i); arrays broadcast over leading axes."""
    h = np.array([c[0, 0] for c in model.channels])
    s2 = np.array([c.obs_noise_cov[0, 0].real for c in model.clusters])
    hf = h * mags * np.exp(1j * phases)
    num = model.source_power * np.abs(hf.sum(axis=-1)) ** 2
    den = (s2 * np.abs(hf) ** 2).sum(axis=-1) + model.fc_noise_power
    return num / den


def grid_oracle(model: NetworkModel, grid_steps: int = 10_000, zoom_rounds: int = 6,
                max_points: int = 2_000_000) -> float:
    """Brute-force max SNR for an all-scalar model (K_i = N_i = M = 1, L <= 3).

    Stage one is an exhaustive grid over the magnitudes |f_i| in
    [0, sqrt(P_i / (sigma_i^2 + sigma_s^2))] and the phases of f_2..f_L relative to
    f_1.  A full grid at ``grid_steps`` points per axis is only affordable for
    L = 1, so for larger L each axis gets as many points as ``max_points`` allows
    and the box around the incumbent is then shrunk and re-gridded
    ``zoom_rounds`` times.
    """
    if model.L > 3 or model.M != 1 or any(k != 1 for k in model.K) or any(n != 1 for n in model.N):
        raise ValueError("grid_oracle needs an all-scalar model with L <= 3")
    L = model.L
    s2 = np.array([c.obs_noise_cov[0, 0].real for c in model.clusters])
    rmax = np.sqrt(np.asarray(model.P) / (s2 + model.source_power))
    if not np.any(rmax > 0):
        return 0.0
    dims = 2 * L - 1
    per_axis = grid_steps if dims == 1 else max(8, int(max_points ** (1.0 / dims)))
    lo = np.concatenate([np.zeros(L), np.full(L - 1, -np.pi)])
    hi = np.concatenate([rmax, np.full(L - 1, np.pi)])
    best, best_x = -np.inf, None
    for rnd in range(zoom_rounds + 1 if dims > 1 else 1):
        axes = [np.linspace(a, b, per_axis) for a, b in zip(lo, hi)]
        pts = np.array(list(itertools.product(*axes))) if dims > 1 else axes[0][:, None]
        mags = pts[:, :L]
        phases = np.concatenate([np.zeros((pts.shape[0], 1)), pts[:, L:]], axis=1)
        vals = _scalar_snr(model, mags, phases)
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, best_x = float(vals[k]), pts[k]
        width = (hi - lo) / (per_axis - 1) * 2.0
        lo = np.maximum(best_x - width, np.concatenate([np.zeros(L), np.full(L - 1, -np.pi)]))
        hi = np.minimum(best_x + width, np.concatenate([rmax, np.full(L - 1, np.pi)]))
    return best
