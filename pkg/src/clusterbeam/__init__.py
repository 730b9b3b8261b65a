"""Joint transceiver design for clustered sensor networks by block coordinate ascent."""
from .bca import AlgorithmOptions, RunTrace
from .blockwise import run_algorithm3
from .model import (BeamformerState, Cluster, NetworkModel, evaluate_snr, random_channels,
                    random_feasible_init, toeplitz_obs_cov, transmit_power)
from .receiver import optimal_postcoder, receiver_snr
from .sdr import run_algorithm1
from .socp import run_algorithm2

__version__ = "0.1.0"

__all__ = [
    "AlgorithmOptions", "RunTrace", "BeamformerState", "Cluster", "NetworkModel",
    "evaluate_snr", "random_channels", "random_feasible_init", "toeplitz_obs_cov",
    "transmit_power", "optimal_postcoder", "receiver_snr",
    "run_algorithm1", "run_algorithm2", "run_algorithm3",
]
