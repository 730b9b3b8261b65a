import csv
import os

import numpy as np
import pytest

from clusterbeam.harness import cli
from clusterbeam.harness.config import build_model, config_from_dict, load_config
from clusterbeam.harness.experiments import TRIAL_COLUMNS, bench, run_experiment, run_itinerary, trial_seed
from clusterbeam.harness.plots import emit_plots
from clusterbeam.harness.scenarios import grid_oracle, scalar_model, scenario_s1, scenario_s2

SMALL = {
    "model": {"L": 2, "K": [1, 2], "N": [2, 2], "P": [2.0, 2.0], "M": 2},
    "sweep": {"channel_snr_db": [0.0], "trials": 1},
    "itinerary": {"inits": 2},
    "bench": {"cells": [{"L": 2, "K": 1, "N": 2, "M": 2}], "outer_iters": 1, "timeout_s": 60},
    "record_timing": False,
}


def read(path):
    with open(path, encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_config_validation(tmp_path):
    cfg = config_from_dict(None)
    assert cfg.L == 3 and cfg.model["obs_var"] == [0.5] * 3
    with pytest.raises(ValueError):
        config_from_dict({"model": {"L": 2, "K": [1, 2, 3]}})
    with pytest.raises(ValueError):
        config_from_dict({"sweep": {"trials": 0}})
    with pytest.raises(ValueError):
        config_from_dict({"algorithms": ["nope"]})
    with pytest.raises(ValueError):
        config_from_dict({"bogus": 1})
    p = tmp_path / "c.yaml"
    p.write_text("model:\n  L: 1\n  K: 2\n  N: 3\n  P: 1.5\noptions:\n  eps_bis: 1.0e-3\n")
    cfg = load_config(p)
    assert cfg.model["K"] == [2] and cfg.options.eps_bis == 1e-3


def test_channel_snr_sets_fc_noise():
    cfg = config_from_dict(None)
    m = build_model(cfg.model, 10.0, 1)
    assert m.fc_noise_power == pytest.approx(0.1)
    assert m.clusters[1].obs_noise_cov[0, 1] == pytest.approx(0.25)


def test_grid_oracle():
    assert grid_oracle(scenario_s1(), 10_000) == pytest.approx(0.5, abs=1e-3)
    assert grid_oracle(scenario_s2(), 10_000) == pytest.approx(4 / 3, abs=1e-3)
    assert grid_oracle(scalar_model(2, power=0.0)) == 0.0
    assert grid_oracle(scalar_model(3)) == pytest.approx(2.25, abs=1e-3)   # aligned full power: 9 / (3 + 1)
    with pytest.raises(ValueError):
        grid_oracle(scalar_model(4))


def test_sweep_smoke_and_determinism(tmp_path):
    cfg = config_from_dict(SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    run_experiment(cfg, a)
    run_experiment(cfg, b)
    rows = read(a / "trials.csv")
    assert list(rows[0]) == TRIAL_COLUMNS
    assert {r["algorithm"] for r in rows} == {"init", "sdr", "socp", "blockwise"}
    assert len(os.listdir(a / "traces")) == 3
    agg = read(a / "aggregate.csv")
    assert len([r for r in agg if r["algorithm"] != "init"]) == 3
    for name in ("trials.csv", "aggregate.csv", "failures.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    for name in os.listdir(a / "traces"):
        assert (a / "traces" / name).read_bytes() == (b / "traces" / name).read_bytes()


def test_sweep_threads_match_serial(tmp_path):
    cfg = config_from_dict(dict(SMALL, sweep={"channel_snr_db": [0.0, 5.0], "trials": 2}, algorithms=["sdr"]))
    run_experiment(cfg, tmp_path / "s")
    run_experiment(cfg, tmp_path / "p", threads=2)
    assert (tmp_path / "s" / "trials.csv").read_bytes() == (tmp_path / "p" / "trials.csv").read_bytes()


def test_final_snr_below_bound(tmp_path):
    from clusterbeam.model import random_feasible_init
    from clusterbeam.sdr import run_algorithm1
    from clusterbeam.socp import snr_upper_bound
    cfg = config_from_dict(SMALL)
    for t in range(3):
        m = build_model(cfg.model, 0.0, trial_seed(cfg.seed, t))
        st, tr = run_algorithm1(m, random_feasible_init(m, trial_seed(cfg.seed, t)))
        assert tr.final_snr <= snr_upper_bound(m, st.g) * (1 + 1e-9)


def test_failure_is_marked(tmp_path, monkeypatch):
    from clusterbeam.harness import experiments

    def boom(*a, **k):
        raise RuntimeError("synthetic")
    monkeypatch.setitem(experiments.RUNNERS, "socp", boom)
    cfg = config_from_dict(SMALL)
    run_experiment(cfg, tmp_path)
    fails = read(tmp_path / "failures.csv")
    assert len(fails) == 1 and fails[0]["algorithm"] == "socp"
    agg = {r["algorithm"]: r for r in read(tmp_path / "aggregate.csv")}
    assert agg["socp"]["trials_failed"] == "1" and agg["socp"]["trials_ok"] == "0"
    assert agg["sdr"]["trials_failed"] == "0"


def test_itinerary_and_plots(tmp_path):
    cfg = config_from_dict(SMALL)
    rows = run_itinerary(cfg, tmp_path)
    assert {r[0] for r in rows} == {0, 1}
    scripts = emit_plots(tmp_path)
    text = open(scripts[0]).read()
    assert "itinerary.csv" in text and text.count("'sdr'") == 2   # one curve per initial point


def test_plots_errors(tmp_path):
    with pytest.raises(ValueError):
        emit_plots(tmp_path)
    (tmp_path / "aggregate.csv").write_text("algorithm,channel_snr_db,mean_final_snr\n")
    with pytest.raises(ValueError):
        emit_plots(tmp_path)
    (tmp_path / "aggregate.csv").write_text("algorithm,x\nsdr,1\n")
    with pytest.raises(ValueError):
        emit_plots(tmp_path)


def test_sweep_plot_has_one_curve_per_algorithm(tmp_path):
    cfg = config_from_dict(SMALL)
    run_experiment(cfg, tmp_path)
    text = open(emit_plots(tmp_path)[0]).read()
    assert "['blockwise', 'init', 'sdr', 'socp']" in text


def test_bench_smoke_and_timeout(tmp_path):
    cfg = config_from_dict(dict(SMALL, algorithms=["blockwise"]))
    rows = bench(cfg, tmp_path)
    assert len(rows) == 1 and float(rows[0][3]) > 0
    cfg = config_from_dict(dict(SMALL, algorithms=["socp"],
                                bench={"cells": [{"L": 6, "K": 2, "N": 3, "M": 3}], "outer_iters": 5,
                                       "timeout_s": 0.5}))
    assert bench(cfg, tmp_path)[0][3] == "---"


def test_cli(tmp_path, capsys):
    cfgp = tmp_path / "c.yaml"
    import yaml
    cfgp.write_text(yaml.safe_dump(SMALL))
    assert cli.main(["oracle", "--scenario", "s1", "--algos", "blockwise", "--steps", "2000"]) == 0
    assert "s1: grid oracle 0.5" in capsys.readouterr().out
    assert cli.main(["optimize", "--config", str(cfgp), "--out", str(tmp_path / "o"), "--algos", "sdr,blockwise"]) == 0
    out = capsys.readouterr().out
    assert "sdr" in out and "blockwise" in out and (tmp_path / "o" / "optimize_sdr.csv").exists()
    assert cli.main(["sweep", "--config", str(cfgp), "--out", str(tmp_path / "s"), "--algos", "sdr",
                     "--seed", "3"]) == 0
    assert (tmp_path / "s" / "plot_aggregate.py").exists()
    with pytest.raises(SystemExit):
        cli.main(["sweep", "--algos", "bogus"])
