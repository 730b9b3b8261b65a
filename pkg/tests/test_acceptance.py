"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``;
the lines are collected in an "acceptance criteria" section of the terminal summary.
"""
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from clusterbeam import conic
from clusterbeam.bca import AlgorithmOptions
from clusterbeam.blockwise import (closed_form_inputs, oneshot_sdr, run_algorithm3, solve_p8_closed,
                                   solve_p8_sdr, subproblem_data, subproblem_upper_bound)
from clusterbeam.conic import ConicProblem, smat, svec
from clusterbeam.harness.config import config_from_dict
from clusterbeam.harness.experiments import run_experiment
from clusterbeam.harness.scenarios import grid_oracle, scalar_init, scenario_s1, scenario_s2
from clusterbeam.linalg import herm_eig
from clusterbeam.model import BeamformerState, evaluate_snr, random_feasible_init
from clusterbeam.receiver import optimal_postcoder, receiver_snr
from clusterbeam.sdr import (assemble_forms, dual_feasible_point, randomize_and_rescale, rank_one_vector,
                             rank_reduce, run_algorithm1, solve_p4)
from clusterbeam.socp import run_algorithm2, snr_upper_bound
from conftest import ACCEPTANCE_LINES, random_dims, random_model

RUNNERS = {"sdr": run_algorithm1, "socp": run_algorithm2, "blockwise": run_algorithm3}
DESK = dict(L=3, K=(1, 2, 2), N=(2, 2, 3), M=2)


def report(n, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d}: {title} :: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def relative_drops(trace):
    s = np.asarray(trace.raw_snr)
    return (s[:-1] - s[1:]) / np.abs(s[:-1])


def test_01_monotone_ascent():
    t0 = time.perf_counter()
    worst = {k: -np.inf for k in RUNNERS}
    bad = []
    for seed in range(20):
        m = random_model(seed, **random_dims(seed))
        init = random_feasible_init(m, seed)
        for name, run in RUNNERS.items():
            _, tr = run(m, init)
            s = np.asarray(tr.raw_snr)
            drop = np.max(s[:-1] - s[1:], initial=-np.inf)
            worst[name] = max(worst[name], np.max(relative_drops(tr), initial=-np.inf))
            allowed = 1e-8 * np.abs(s[:-1]) + (1e-4 if name != "sdr" else 0.0)
            if np.any(s[:-1] - s[1:] > allowed):
                bad.append((seed, name, float(drop)))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 300
    detail = ", ".join(f"{k} worst rel drop {v:.1e}" for k, v in worst.items())
    assert report(1, "monotone SNR ascent (20 instances x 3 algorithms)", ok,
                  f"{detail}; violations {bad}; {elapsed:.0f}s")


def test_02_cross_algorithm_agreement():
    t0 = time.perf_counter()
    # limit points are compared, so run past slow plateaus where a 1e-4 stop would cut a 2-block run short
    opts = AlgorithmOptions(tol=1e-6, max_outer=500)
    worst, bad = 0.0, []
    for seed in range(10):
        m = random_model(100 + seed, **DESK)
        init = random_feasible_init(m, seed)
        finals = {name: run(m, init, opts)[1].final_snr for name, run in RUNNERS.items()}
        v = np.array(list(finals.values()))
        spread = (v.max() - v.min()) / v.max()
        worst = max(worst, spread)
        if spread > 1e-2:
            bad.append((seed, finals))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 600
    assert report(2, "final SNRs of the three algorithms agree within 1e-2", ok,
                  f"worst relative spread {worst:.2e}; outliers {bad}; {elapsed:.0f}s")


def test_03_oracle_optimality():
    rows, ok = [], True
    for key, make, exact in (("S1", scenario_s1, 0.5), ("S2", scenario_s2, 4 / 3)):
        m = make()
        oracle = grid_oracle(m, 10_000)
        ok &= abs(oracle - exact) <= 1e-3
        for name, run in RUNNERS.items():
            val = run(m, scalar_init(m))[1].final_snr
            ok &= abs(val - oracle) <= 2e-3 and val <= oracle + 2e-3
            rows.append(f"{key}/{name}={val:.6f}")
        rows.append(f"{key}/oracle={oracle:.6f}")
    assert report(3, "S1/S2 reach the grid-oracle optimum within 2e-3", ok, " ".join(rows))


def _constraints(forms, limits, Y, nu):
    return np.array([np.trace(forms.A @ Y).real, np.trace(forms.B @ Y).real + forms.c0 * nu]
                    + [np.trace(d @ Y).real - p * nu for d, p in zip(forms.D, limits)])


def test_04_rank_reduction_tightness():
    worst_ratio, worst_drift, reduced, bad = 0.0, 0.0, 0, []
    seed = 0
    count = 0
    while count < 20:
        dims = random_dims(seed, max_L=3)
        seed += 1
        if dims["L"] < 2:
            continue
        m = random_model(seed, **dims)
        forms = assemble_forms(m, optimal_postcoder(m, random_feasible_init(m, seed).precoders))
        res = solve_p4(forms, m.P)
        w0 = herm_eig(res.Y).values
        reduced += int(w0[1] > 1e-6 * w0[0])
        Y, nu = rank_reduce(res.Y, res.nu, forms, m.P)
        w = herm_eig(Y).values
        before, after = _constraints(forms, m.P, res.Y, res.nu), _constraints(forms, m.P, Y, nu)
        drift = np.max(np.abs(after - before) / np.maximum(1.0, np.abs(before)))
        ratio = w[1] / w[0]
        worst_ratio, worst_drift = max(worst_ratio, ratio), max(worst_drift, drift)
        if ratio >= 1e-6 or drift > 1e-8:
            bad.append(seed)
        count += 1
    assert report(4, "rank reduction gives rank one with constraints preserved", not bad,
                  f"20 instances ({reduced} started above rank one); worst lambda2/lambda1 {worst_ratio:.1e}; "
                  f"worst drift {worst_drift:.1e}; failures {bad}")


def test_05_randomization_tightness():
    gaps, hits = [], 0
    for seed in range(20):
        m = random_model(200 + seed, L=4, K=(1, 2, 2, 1), N=(2, 2, 3, 2), M=2)
        forms = assemble_forms(m, optimal_postcoder(m, random_feasible_init(m, seed).precoders))
        res = solve_p4(forms, m.P)
        f = randomize_and_rescale(res.Y, res.nu, forms, m.P, samples=5000, rng_seed=seed)
        gap = (res.objective - forms.ratio(f)) / res.objective
        gaps.append(gap)
        hits += gap <= 1e-3
    assert report(5, "best of 5000 rescaled samples within 1e-3 of the SDP optimum (L=4)", hits >= 18,
                  f"{hits}/20 seeds within 1e-3; median gap {np.median(gaps):.1e}; worst {max(gaps):.1e}")


def test_06_bound_dominance():
    viol_joint = viol_block = 0
    worst = -np.inf
    for seed in range(100):
        m = random_model(300 + seed, **random_dims(seed))
        st = random_feasible_init(m, seed)
        bound = snr_upper_bound(m, st.g)
        val = evaluate_snr(m, st)
        worst = max(worst, val / bound - 1)
        viol_joint += val > bound * (1 + 1e-9)
        # optimum of a single-cluster subproblem against its own bound
        d = subproblem_data(m, st.g, st.precoders, seed % m.L)
        if np.any(d.h_g):
            best = d.value(oneshot_sdr(d))
            worst = max(worst, best / subproblem_upper_bound(d) - 1)
            viol_block += best > subproblem_upper_bound(d) * (1 + 1e-9)
    ok = viol_joint == 0 and viol_block == 0
    assert report(6, "SNR never exceeds the joint and per-cluster upper bounds", ok,
                  f"100 states + 100 cluster optima; violations {viol_joint}+{viol_block}; "
                  f"max value/bound - 1 = {worst:.2e}")


def _k1_subproblem(seed):
    from clusterbeam.model import Cluster, NetworkModel
    rng = np.random.default_rng(400 + seed)
    L, N, M = 3, int(rng.integers(1, 4)), int(rng.integers(1, 4))
    clusters = [Cluster(np.eye(1) * rng.uniform(0.2, 2.0), rng.uniform(0.5, 3.0)) for _ in range(L)]
    chans = [rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N)) for _ in range(L)]
    m = NetworkModel(clusters, chans, rng.uniform(0.1, 1.0), source_power=rng.uniform(0.5, 2.0))
    st = random_feasible_init(m, seed)
    d = subproblem_data(m, st.g, st.precoders, seed % L)
    return d, rng.uniform(0.2, 1.5) * subproblem_upper_bound(d)


def test_07_closed_form_correctness():
    worst_sdr, worst_grid, bad = 0.0, 0.0, []
    n = 100
    for seed in range(50):
        d, alpha = _k1_subproblem(seed)
        inp = closed_form_inputs(d, alpha)
        _, opt = solve_p8_closed(inp, d)
        _, opt_sdr = solve_p8_sdr(d, alpha)
        scale = 1 + abs(opt)
        e_sdr = abs(opt_sdr - opt) / scale
        # polar grid of n x n points over the disk |tau| <= sqrt(Pbar)
        rp = np.sqrt(inp.pbar)
        r = np.linspace(0, rp, n)[:, None]
        th = np.linspace(0, 2 * np.pi, n, endpoint=False)[None, :]
        tau = r * np.exp(1j * th)
        hn = np.linalg.norm(d.h_g)
        kappa = alpha * d.obs_var - d.source_power
        g = kappa * hn ** 2 * np.abs(tau) ** 2 - 2 * d.source_power * hn * (d.beta * tau).real + alpha * d.d - d.c
        lip = 2 * abs(kappa) * hn ** 2 * rp + 2 * d.source_power * hn * abs(d.beta)
        resolution = lip * (rp / (n - 1) / 2 + rp * np.pi / n)
        e_grid = g.min() - opt
        worst_sdr = max(worst_sdr, e_sdr)
        worst_grid = max(worst_grid, e_grid / max(resolution, 1e-300))
        if e_sdr > 1e-6 or e_grid < -1e-9 * scale or e_grid > resolution + 1e-12:
            bad.append(seed)
    assert report(7, "closed form matches the SDR route and a 10^4-point grid", not bad,
                  f"50 subproblems; worst |closed - sdr|/(1+|opt|) {worst_sdr:.1e}; "
                  f"worst grid gap / resolution {worst_grid:.2f}; failures {bad}")


def test_08_receiver_optimality():
    rng = np.random.default_rng(8)
    beaten, worst_cons = 0, 0.0
    for seed in range(100):
        m = random_model(500 + seed, **random_dims(seed))
        pre = random_feasible_init(m, seed).precoders
        g = optimal_postcoder(m, pre)
        best = evaluate_snr(m, BeamformerState(pre, g))
        worst_cons = max(worst_cons, abs(receiver_snr(m, pre) - best) / best)
        gs = rng.standard_normal((100, m.M)) + 1j * rng.standard_normal((100, m.M))
        vals = [evaluate_snr(m, BeamformerState(pre, x)) for x in gs]
        beaten += sum(v > best * (1 + 1e-9) for v in vals)
    ok = beaten == 0 and worst_cons <= 1e-10
    assert report(8, "optimal postcoder beats random postcoders; closed-form SNR consistent", ok,
                  f"10^4 random postcoders, {beaten} better than g*; worst consistency error {worst_cons:.1e}")


def test_09_convergence_speed():
    t0 = time.perf_counter()
    opts = AlgorithmOptions(max_outer=50)
    counts = {}
    for name, run in RUNNERS.items():
        hit = 0
        for seed in range(50):
            m = random_model(600 + seed, **DESK)
            _, tr = run(m, random_feasible_init(m, seed), opts)
            hit += tr.converged and tr.outer_iters <= 50
        counts[name] = hit
    ok = all(v >= 45 for v in counts.values())
    assert report(9, "converged within 50 outer iterations on >= 90% of 50 seeds", ok,
                  ", ".join(f"{k} {v}/50" for k, v in counts.items()) + f"; {time.perf_counter() - t0:.0f}s")


def test_10_sweep_shape(tmp_path):
    cfg = config_from_dict({"model": dict(DESK, P=[2.0, 2.0, 2.0]),
                            "sweep": {"channel_snr_db": [-10.0, -5.0, 0.0, 5.0, 10.0], "trials": 10},
                            "record_timing": False})
    res = run_experiment(cfg, tmp_path)
    agg = {}
    for name, snr_db, mean, _, _ in res["aggregate"]:
        agg.setdefault(name, []).append(float(mean))
    init = np.array(agg.pop("init"))
    ok = not res["failures"]
    parts = [f"init {np.round(init, 3).tolist()}"]
    for name, curve in agg.items():
        curve = np.array(curve)
        ok &= bool(np.all(curve > init)) and bool(np.all(np.diff(curve) >= 0))
        parts.append(f"{name} {np.round(curve, 3).tolist()}")
    assert report(10, "optimized mean SNR above random initials and nondecreasing in channel SNR", ok,
                  "; ".join(parts))


def test_11_conic_sanity():
    prob = ConicProblem("max")
    X = prob.psd_variable(2)
    c = np.zeros(prob.n)
    c[X] = svec(np.diag([1.0, 2.0]))
    prob.set_objective(c)
    row = prob.zeros()
    row[X] = svec(np.eye(2))
    prob.add_equality(row, 1.0)
    sol = prob.solve()
    lam_err = max(abs(sol.objective - 2.0), np.abs(smat(sol.x[X], 2) - np.diag([0.0, 1.0])).max())
    dual_bad = weak_bad = 0
    worst_gap = -np.inf
    for seed in range(50):
        m = random_model(700 + seed, **random_dims(seed))
        forms = assemble_forms(m, optimal_postcoder(m, random_feasible_init(m, seed).precoders))
        res = solve_p4(forms, m.P)
        lam, _ = dual_feasible_point(forms, m.P)
        dual_bad += lam < res.objective - 1e-9 * (1 + res.objective)
        gap = (res.objective - res.extra["dual_bound"]) / (1 + abs(res.objective))
        worst_gap = max(worst_gap, gap)
        weak_bad += gap > 1e-8
    ok = sol.status == conic.OPTIMAL and lam_err <= 1e-7 and dual_bad == 0 and weak_bad == 0
    assert report(11, "conic core: lambda_max SDP, explicit dual bound, weak duality", ok,
                  f"lambda_max error {lam_err:.1e}; dual point below optimum {dual_bad}/50; "
                  f"max (primal - dual)/(1+|primal|) {worst_gap:.1e}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
