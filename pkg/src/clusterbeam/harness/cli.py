"""Command-line entry point: clusterbeam {optimize,sweep,itinerary,bench,oracle}."""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ALGORITHMS, build_model, config_from_dict, load_config
from .experiments import (RUNNERS, TRACE_COLUMNS, _trace_rows, _write_csv, bench, run_experiment,
                          run_itinerary, trial_seed)
from .plots import emit_plots
from .scenarios import SCENARIOS, grid_oracle, scalar_init
from ..model import random_feasible_init


def _config(args):
    cfg = load_config(args.config) if args.config else config_from_dict(None)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.algos:
        algos = [a.strip() for a in args.algos.split(",") if a.strip()]
        bad = [a for a in algos if a not in ALGORITHMS]
        if bad:
            raise SystemExit(f"unknown algorithms {bad}; choose from {', '.join(ALGORITHMS)}")
        cfg.algorithms = algos
    if args.out:
        cfg.out = args.out
    return cfg


def cmd_optimize(cfg, args):
    seed = trial_seed(cfg.seed, 0)
    model = build_model(cfg.model, None, seed)
    init = random_feasible_init(model, seed)
    os.makedirs(cfg.out, exist_ok=True)
    for name in cfg.algorithms:
        _, trace = RUNNERS[name](model, init, cfg.options)
        _write_csv(os.path.join(cfg.out, f"optimize_{name}.csv"), TRACE_COLUMNS,
                   _trace_rows(trace, cfg.record_timing))
        print(f"{name:10s} init {trace.snr[0]:.6g} -> {trace.final_snr:.8g} "
              f"in {trace.outer_iters} iterations ({trace.status})")


def cmd_sweep(cfg, args):
    res = run_experiment(cfg, cfg.out, threads=args.threads)
    for row in res["aggregate"]:
        print("  ".join(str(x) for x in row))
    if res["failures"]:
        print(f"{len(res['failures'])} failed runs, see failures.csv", file=sys.stderr)
    emit_plots(cfg.out)


def cmd_itinerary(cfg, args):
    rows = run_itinerary(cfg, cfg.out)
    print(f"wrote {len(rows)} itinerary rows to {os.path.join(cfg.out, 'itinerary.csv')}")
    emit_plots(cfg.out)


def cmd_bench(cfg, args):
    for row in bench(cfg, cfg.out):
        print("  ".join(str(x) for x in row))
    emit_plots(cfg.out)


def cmd_oracle(cfg, args):
    names = [args.scenario] if args.scenario else sorted(SCENARIOS)
    ok = True
    for key in names:
        make, expected = SCENARIOS[key]
        model = make()
        best = grid_oracle(model, args.steps)
        print(f"{key}: grid oracle {best:.6f} (analytic {expected:.6f})")
        for name in cfg.algorithms:
            _, trace = RUNNERS[name](model, scalar_init(model), cfg.options)
            good = abs(trace.final_snr - best) <= 2e-3
            ok &= good
            print(f"  {name:10s} {trace.final_snr:.6f} {'ok' if good else 'MISMATCH'}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clusterbeam", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in [("optimize", "run the algorithms on one random instance"),
                           ("sweep", "channel-SNR sweep with per-trial and aggregate CSVs"),
                           ("itinerary", "SNR per outer iteration from several random initial points"),
                           ("bench", "wall time per outer iteration over a dimension grid"),
                           ("oracle", "compare the algorithms with the grid oracle on S1/S2")]:
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", help="YAML experiment file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--algos", help="comma list from: " + ",".join(ALGORITHMS))
        sp.add_argument("--threads", type=int, default=1, help="worker processes for sweep trials")
        if name == "oracle":
            sp.add_argument("--scenario", choices=sorted(SCENARIOS))
            sp.add_argument("--steps", type=int, default=10_000)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = _config(args)
    handler = {"optimize": cmd_optimize, "sweep": cmd_sweep, "itinerary": cmd_itinerary,
               "bench": cmd_bench, "oracle": cmd_oracle}[args.command]
    return handler(cfg, args) or 0


if __name__ == "__main__":
    sys.exit(main())
