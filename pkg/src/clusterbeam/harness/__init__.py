"""Experiment configuration, scenarios, sweeps and the command-line tool."""
from .config import ALGORITHMS, ExperimentConfig, build_model, config_from_dict, load_config
from .experiments import RUNNERS, bench, run_experiment, run_itinerary, run_trial
from .plots import emit_plots
from .scenarios import grid_oracle, scalar_init, scalar_model, scenario_s1, scenario_s2

__all__ = [
    "ALGORITHMS", "ExperimentConfig", "build_model", "config_from_dict", "load_config",
    "RUNNERS", "bench", "run_experiment", "run_itinerary", "run_trial", "emit_plots",
    "grid_oracle", "scalar_init", "scalar_model", "scenario_s1", "scenario_s2",
]
