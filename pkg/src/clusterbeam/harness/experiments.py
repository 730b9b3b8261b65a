"""Sweeps, itineraries and timing tables written as CSV."""
from __future__ import annotations

import csv
import logging
import multiprocessing as mp
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from ..blockwise import run_algorithm3
from ..model import evaluate_snr, random_feasible_init
from ..sdr import run_algorithm1
from ..socp import run_algorithm2
from .config import ExperimentConfig, build_model

log = logging.getLogger(__name__)

RUNNERS = {"sdr": run_algorithm1, "socp": run_algorithm2, "blockwise": run_algorithm3}
TRIAL_COLUMNS = ["trial_id", "channel_snr_db", "algorithm", "outer_iters", "final_snr", "wall_ms", "probe_count"]
AGG_COLUMNS = ["algorithm", "channel_snr_db", "mean_final_snr", "trials_ok", "trials_failed"]
TRACE_COLUMNS = ["iteration", "snr", "raw_snr", "wall_ms", "probe_count", "conic_iters"]


def trial_seed(base: int, trial: int) -> int:
    """Per-trial seed; the same channels and initial point are reused at every sweep point."""
    return int(np.random.SeedSequence([base, trial]).generate_state(1)[0])


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        w.writerows(rows)


def _trace_rows(trace, timing: bool):
    rows = []
    for k, (s, r) in enumerate(zip(trace.snr, trace.raw_snr)):
        wall = trace.wall_ms[k - 1] if k and timing else 0.0
        probes = trace.probe_counts[k - 1] if k else 0
        iters = trace.conic_iters[k - 1] if k else 0
        rows.append([k, _fmt(s), _fmt(r), f"{wall:.3f}", probes, iters])
    return rows


def run_trial(cfg: ExperimentConfig, snr_db: float, trial: int):
    """One channel realization at one channel SNR: every selected algorithm from a shared start."""
    seed = trial_seed(cfg.seed, trial)
    model = build_model(cfg.model, snr_db, seed)
    init = random_feasible_init(model, seed)
    out = {"init": evaluate_snr(model, init), "runs": {}}
    for name in cfg.algorithms:
        t0 = time.perf_counter()
        try:
            _, trace = RUNNERS[name](model, init, cfg.options)
            out["runs"][name] = (trace, 1e3 * (time.perf_counter() - t0), None)
        except Exception as exc:  # noqa: BLE001 - logged and marked per trial
            log.warning("trial %d at %.1f dB: %s failed: %s", trial, snr_db, name, exc)
            out["runs"][name] = (None, 1e3 * (time.perf_counter() - t0), f"{type(exc).__name__}: {exc}")
    return out


def _job(args):
    cfg, pidx, snr_db, trial = args
    return pidx, trial, run_trial(cfg, snr_db, trial)


def run_experiment(cfg: ExperimentConfig, out_dir, threads: int = 1) -> dict:
    """Channel-SNR sweep; writes trials.csv, aggregate.csv, failures.csv and traces/."""
    os.makedirs(os.path.join(out_dir, "traces"), exist_ok=True)
    points = [float(x) for x in cfg.sweep["channel_snr_db"]]
    trials = int(cfg.sweep["trials"])
    jobs = [(cfg, p, s, t) for p, s in enumerate(points) for t in range(trials)]
    if threads > 1:
        with ProcessPoolExecutor(threads, mp_context=mp.get_context("fork")) as ex:
            results = list(ex.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    results.sort(key=lambda r: (r[0], r[1]))

    rows, failures, agg = [], [], {}
    for pidx, trial, res in results:
        snr_db = points[pidx]
        tid = pidx * trials + trial
        rows.append([tid, _fmt(snr_db), "init", 0, _fmt(res["init"]), "0.000", 0])
        agg.setdefault(("init", pidx), []).append(res["init"])
        for name in cfg.algorithms:
            trace, wall, err = res["runs"][name]
            wall = wall if cfg.record_timing else 0.0
            if err is not None:
                rows.append([tid, _fmt(snr_db), name, -1, "nan", f"{wall:.3f}", 0])
                failures.append([tid, _fmt(snr_db), name, err])
                agg.setdefault((name, pidx), []).append(None)
                continue
            rows.append([tid, _fmt(snr_db), name, trace.outer_iters, _fmt(trace.final_snr),
                         f"{wall:.3f}", sum(trace.probe_counts)])
            agg.setdefault((name, pidx), []).append(trace.final_snr)
            _write_csv(os.path.join(out_dir, "traces", f"{name}_t{tid:04d}.csv"), TRACE_COLUMNS,
                       _trace_rows(trace, cfg.record_timing))

    agg_rows = []
    for name in ["init"] + list(cfg.algorithms):
        for pidx, snr_db in enumerate(points):
            vals = agg.get((name, pidx), [])
            ok = [v for v in vals if v is not None]
            mean = float(np.mean(ok)) if ok else float("nan")
            agg_rows.append([name, _fmt(snr_db), _fmt(mean), len(ok), len(vals) - len(ok)])
    _write_csv(os.path.join(out_dir, "trials.csv"), TRIAL_COLUMNS, rows)
    _write_csv(os.path.join(out_dir, "aggregate.csv"), AGG_COLUMNS, agg_rows)
    _write_csv(os.path.join(out_dir, "failures.csv"), ["trial_id", "channel_snr_db", "algorithm", "error"], failures)
    return {"points": points, "aggregate": agg_rows, "failures": failures}


def run_itinerary(cfg: ExperimentConfig, out_dir) -> list:
    """One fixed channel realization, several random initial points, SNR per outer iteration."""
    os.makedirs(out_dir, exist_ok=True)
    model = build_model(cfg.model, float(cfg.itinerary["channel_snr_db"]), trial_seed(cfg.seed, 0))
    rows = []
    for k in range(int(cfg.itinerary["inits"])):
        init = random_feasible_init(model, trial_seed(cfg.seed + 1, k))
        for name in cfg.algorithms:
            _, trace = RUNNERS[name](model, init, cfg.options)
            rows.extend([k, name, it, _fmt(s)] for it, s in enumerate(trace.snr))
    _write_csv(os.path.join(out_dir, "itinerary.csv"), ["init_id", "algorithm", "iteration", "snr"], rows)
    return rows


def _bench_cell(cfg, cell, name, queue):
    spec = dict(cfg.model)
    L = int(cell["L"])
    spec.update(L=L, K=[int(cell["K"])] * L, N=[int(cell["N"])] * L, M=int(cell["M"]),
                P=[float(cell.get("P", 2.0))] * L, obs_var=[float(cell.get("obs_var", 0.5))] * L)
    seed = trial_seed(cfg.seed, L)
    model = build_model(spec, None, seed)
    init = random_feasible_init(model, seed)
    opts = replace(cfg.options, max_outer=int(cfg.bench["outer_iters"]), tol=0.0)
    _, trace = RUNNERS[name](model, init, opts)
    queue.put(float(np.mean(trace.wall_ms)) if trace.wall_ms else float("nan"))


def bench(cfg: ExperimentConfig, out_dir) -> list:
    """Mean wall time per outer iteration over the configured (L, K, N, M) cells.

    Each cell runs in a child process; one that exceeds ``bench.timeout_s`` is
    killed and reported as "---".
    """
    os.makedirs(out_dir, exist_ok=True)
    ctx = mp.get_context("fork")
    rows = []
    for cell in cfg.bench["cells"]:
        block = f"K={cell['K']},N={cell['N']},M={cell['M']}"
        for name in cfg.algorithms:
            q = ctx.Queue()
            proc = ctx.Process(target=_bench_cell, args=(cfg, cell, name, q))
            proc.start()
            proc.join(float(cfg.bench["timeout_s"]))
            if proc.is_alive():
                proc.terminate()
                proc.join()
                value = "---"
            else:
                value = f"{q.get():.3f}" if not q.empty() else "---"
            rows.append([block, name, int(cell["L"]), value])
    _write_csv(os.path.join(out_dir, "bench.csv"), ["block", "algorithm", "L", "ms_per_iter"], rows)
    return rows
