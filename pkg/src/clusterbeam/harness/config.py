"""YAML experiment configuration."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np
import yaml

from ..bca import AlgorithmOptions
from ..model import Cluster, NetworkModel, random_channels, toeplitz_obs_cov

ALGORITHMS = ("sdr", "socp", "blockwise")

DEFAULTS = {
    "model": {
        "L": 3,
        "K": [1, 2, 2],
        "N": [2, 2, 3],
        "P": [2.0, 2.0, 2.0],
        "obs_var": 0.5,          # sigma_i^2, scalar or one per cluster
        "rho": 0.5,
        "M": 2,
        "fc_noise_power": 1.0,
        "source_power": 1.0,
        "channel_variance": 2.0,
    },
    "sweep": {"channel_snr_db": [-5.0, 0.0, 5.0, 10.0], "trials": 10},
    "itinerary": {"inits": 10, "channel_snr_db": 2.0},
    "bench": {
        "cells": [{"L": 2, "K": 1, "N": 2, "M": 2}, {"L": 4, "K": 1, "N": 2, "M": 2}],
        "outer_iters": 3,
        "timeout_s": 120.0,
    },
    "algorithms": list(ALGORITHMS),
    "seed": 0,
    "record_timing": True,
    "options": {},
    "out": "results",
}


@dataclass
class ExperimentConfig:
    model: dict
    sweep: dict
    itinerary: dict
    bench: dict
    algorithms: list
    seed: int
    record_timing: bool
    options: AlgorithmOptions = field(default_factory=AlgorithmOptions)
    out: str = "results"

    @property
    def L(self) -> int:
        return self.model["L"]


def _per_cluster(value, L: int, name: str) -> list:
    if np.isscalar(value):
        return [value] * L
    value = list(value)
    if len(value) != L:
        raise ValueError(f"model.{name} has {len(value)} entries, expected L = {L}")
    return value


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def config_from_dict(raw: dict | None) -> ExperimentConfig:
    d = _merge(DEFAULTS, raw or {})
    unknown = set(d) - set(DEFAULTS)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    m = d["model"]
    L = int(m["L"])
    if L < 1:
        raise ValueError("model.L must be at least 1")
    for name in ("K", "N", "P", "obs_var"):
        m[name] = _per_cluster(m[name], L, name)
    m["K"] = [int(k) for k in m["K"]]
    m["N"] = [int(n) for n in m["N"]]
    if int(d["sweep"]["trials"]) < 1:
        raise ValueError("sweep.trials must be at least 1")
    algos = list(d["algorithms"])
    bad = [a for a in algos if a not in ALGORITHMS]
    if bad:
        raise ValueError(f"unknown algorithms {bad}; choose from {ALGORITHMS}")
    opts = AlgorithmOptions(**d["options"])
    return ExperimentConfig(m, d["sweep"], d["itinerary"], d["bench"], algos, int(d["seed"]),
                            bool(d["record_timing"]), opts, str(d["out"]))


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(yaml.safe_load(fh))


def build_model(spec: dict, channel_snr_db: float | None = None, rng_seed=None) -> NetworkModel:
    """Random-channel instance; channel SNR (dB) overrides fc_noise_power as 1 / sigma_0^2."""
    noise = spec["fc_noise_power"] if channel_snr_db is None else 10.0 ** (-channel_snr_db / 10.0)
    clusters = [Cluster(toeplitz_obs_cov(k, s2, spec["rho"]), float(p))
                for k, s2, p in zip(spec["K"], spec["obs_var"], spec["P"])]
    chans = random_channels(spec["M"], spec["N"], spec["channel_variance"], rng_seed)
    return NetworkModel(clusters, chans, noise, spec["source_power"])
