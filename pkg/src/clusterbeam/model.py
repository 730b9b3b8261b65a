"""Clustered sensor network instance, SNR objective and power bookkeeping."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import herm_eig, hermitian_part

FEASIBILITY_SLACK = 1e-9


class DimensionError(ValueError):
    pass


class DegenerateIterateError(ArithmeticError):
    """The postcoder (or the received signal direction) collapsed to zero."""


@dataclass(frozen=True)
class Cluster:
    obs_noise_cov: np.ndarray
    power_limit: float

    def __post_init__(self):
        cov = hermitian_part(np.atleast_2d(np.asarray(self.obs_noise_cov, dtype=complex)))
        object.__setattr__(self, "obs_noise_cov", cov)
        if self.power_limit < 0:
            raise ValueError("power limit must be nonnegative")

    @property
    def sensor_count(self) -> int:
        return self.obs_noise_cov.shape[0]


@dataclass(frozen=True)
class NetworkModel:
    clusters: tuple
    channels: tuple
    fc_noise_power: float
    source_power: float = 1.0
    check_pd: bool = field(default=True, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "clusters", tuple(self.clusters))
        chans = tuple(np.atleast_2d(np.asarray(h, dtype=complex)) for h in self.channels)
        object.__setattr__(self, "channels", chans)
        if len(chans) != len(self.clusters) or not chans:
            raise DimensionError("need one channel matrix per cluster and at least one cluster")
        m = chans[0].shape[0]
        if any(h.shape[0] != m for h in chans):
            raise DimensionError("every channel must have fc_antennas rows")
        if self.fc_noise_power <= 0:
            raise ValueError("fc_noise_power must be positive")
        if self.source_power <= 0:
            raise ValueError("source_power must be positive")
        if self.check_pd:
            for i, c in enumerate(self.clusters):
                if herm_eig(c.obs_noise_cov).values[-1] <= 0:
                    raise ValueError(f"observation noise covariance of cluster {i} is not positive definite")

    @property
    def L(self) -> int:
        return len(self.clusters)

    @property
    def M(self) -> int:
        return self.channels[0].shape[0]

    @property
    def fc_antennas(self) -> int:
        return self.M

    @property
    def K(self) -> list[int]:
        return [c.sensor_count for c in self.clusters]

    @property
    def N(self) -> list[int]:
        return [h.shape[1] for h in self.channels]

    @property
    def P(self) -> np.ndarray:
        return np.array([c.power_limit for c in self.clusters], dtype=float)

    @property
    def block_dims(self) -> list[int]:
        return [k * n for k, n in zip(self.K, self.N)]

    def power_weight(self, i: int) -> np.ndarray:
        """sigma_s^2 * 1 1^T + Sigma_i, the matrix inside the power trace."""
        k = self.K[i]
        return self.source_power * np.ones((k, k)) + self.clusters[i].obs_noise_cov

    def with_power_limits(self, limits) -> "NetworkModel":
        clusters = [Cluster(c.obs_noise_cov, float(p)) for c, p in zip(self.clusters, limits)]
        return NetworkModel(clusters, self.channels, self.fc_noise_power,
                            self.source_power, self.check_pd)

    def with_fc_noise(self, noise_power: float) -> "NetworkModel":
        return NetworkModel(self.clusters, self.channels, noise_power,
                            self.source_power, self.check_pd)


@dataclass
class BeamformerState:
    precoders: list
    g: np.ndarray

    def __post_init__(self):
        self.precoders = [np.atleast_2d(np.asarray(f, dtype=complex)) for f in self.precoders]
        self.g = np.asarray(self.g, dtype=complex).reshape(-1)

    def copy(self) -> "BeamformerState":
        return BeamformerState([f.copy() for f in self.precoders], self.g.copy())


def check_precoders(model: NetworkModel, precoders: Sequence[np.ndarray]) -> None:
    if len(precoders) != model.L:
        raise DimensionError(f"expected {model.L} precoders, got {len(precoders)}")
    for i, f in enumerate(precoders):
        if np.shape(f) != (model.N[i], model.K[i]):
            raise DimensionError(
                f"precoder {i} has shape {np.shape(f)}, expected {(model.N[i], model.K[i])}")


def received_signal(model: NetworkModel, precoders) -> np.ndarray:
    """h = sum_i H_i F_i 1."""
    return sum(h @ f.sum(axis=1) for h, f in zip(model.channels, precoders))


def received_noise_cov(model: NetworkModel, precoders) -> np.ndarray:
    """sigma_0^2 I + sum_i H_i F_i Sigma_i F_i^H H_i^H."""
    m = model.fc_noise_power * np.eye(model.M, dtype=complex)
    for h, f, c in zip(model.channels, precoders, model.clusters):
        hf = h @ f
        m = m + hf @ c.obs_noise_cov @ hf.conj().T
    return hermitian_part(m)


def evaluate_snr(model: NetworkModel, state: BeamformerState) -> float:
    check_precoders(model, state.precoders)
    g = state.g
    if g.shape != (model.M,):
        raise DimensionError(f"postcoder has shape {g.shape}, expected {(model.M,)}")
    if not np.any(g):
        raise DegenerateIterateError("postcoder is zero")
    signal = model.source_power * abs(np.vdot(g, received_signal(model, state.precoders))) ** 2
    noise = np.vdot(g, received_noise_cov(model, state.precoders) @ g).real
    return float(signal / noise)


def transmit_power(model: NetworkModel, f, i: int) -> float:
    f = np.atleast_2d(np.asarray(f, dtype=complex))
    if f.shape != (model.N[i], model.K[i]):
        raise DimensionError(f"precoder {i} has shape {f.shape}, expected {(model.N[i], model.K[i])}")
    return float(np.trace(f @ model.power_weight(i) @ f.conj().T).real)


def is_feasible(model: NetworkModel, precoders, slack: float = FEASIBILITY_SLACK) -> bool:
    return all(transmit_power(model, f, i) <= p * (1 + slack)
               for i, (f, p) in enumerate(zip(precoders, model.P)))


def toeplitz_obs_cov(k: int, sigma2: float, rho: float) -> np.ndarray:
    if k < 1:
        raise ValueError("need at least one sensor")
    if abs(rho) >= 1:
        raise ValueError("correlation coefficient must satisfy |rho| < 1")
    idx = np.arange(k)
    return sigma2 * rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)


def cscg(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly symmetric complex Gaussian samples with E|x|^2 = variance."""
    s = np.sqrt(variance / 2.0)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def random_channels(m: int, n_list, entry_variance: float = 2.0, rng_seed=None) -> list[np.ndarray]:
    if entry_variance <= 0:
        raise ValueError("entry_variance must be positive")
    rng = np.random.default_rng(rng_seed)
    return [cscg(rng, (m, n), entry_variance) for n in n_list]


def random_feasible_init(model: NetworkModel, rng_seed=None, fill_fraction: float = 0.9,
                         max_tries: int = 20) -> BeamformerState:
    """Random precoders at ``fill_fraction`` of each power budget plus the matching postcoder."""
    from .receiver import optimal_postcoder

    if not 0 < fill_fraction <= 1:
        raise ValueError("fill_fraction must lie in (0, 1]")
    rng = np.random.default_rng(rng_seed)
    for _ in range(max_tries):
        precoders = []
        for i in range(model.L):
            f = cscg(rng, (model.N[i], model.K[i]))
            p = transmit_power(model, f, i)
            target = fill_fraction * model.P[i]
            precoders.append(f * np.sqrt(target / p) if p > 0 else f * 0)
        try:
            g = optimal_postcoder(model, precoders)
        except DegenerateIterateError:
            continue
        return BeamformerState(precoders, g)
    raise DegenerateIterateError(f"no nonzero postcoder after {max_tries} random draws")


def _list_to_cplx(x) -> np.ndarray:
    if isinstance(x, dict):
        return np.asarray(x["re"], dtype=float) + 1j * np.asarray(x.get("im", 0.0), dtype=float)
    if isinstance(x, (list, tuple)) and len(x) == 2 and np.ndim(x[0]) >= 1:
        return np.asarray(x[0], dtype=float) + 1j * np.asarray(x[1], dtype=float)
    return np.asarray(x, dtype=complex)


def model_to_dict(model: NetworkModel) -> dict:
    return {
        "fc_noise_power": float(model.fc_noise_power),
        "source_power": float(model.source_power),
        "clusters": [{"power_limit": float(c.power_limit),
                      "obs_noise_cov": {"re": c.obs_noise_cov.real.tolist(),
                                        "im": c.obs_noise_cov.imag.tolist()},
                      "channel": {"re": h.real.tolist(), "im": h.imag.tolist()}}
                     for c, h in zip(model.clusters, model.channels)],
    }


def model_from_dict(d: dict) -> NetworkModel:
    clusters, channels = [], []
    for c in d["clusters"]:
        clusters.append(Cluster(_list_to_cplx(c["obs_noise_cov"]), float(c["power_limit"])))
        channels.append(_list_to_cplx(c["channel"]))
    return NetworkModel(clusters, channels, float(d["fc_noise_power"]),
                        float(d.get("source_power", 1.0)))
