"""Shared outer loop for the block-coordinate-ascent algorithms."""
from __future__ import annotations

import hashlib
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .model import BeamformerState, DegenerateIterateError, NetworkModel, evaluate_snr, transmit_power
from .receiver import optimal_postcoder

log = logging.getLogger(__name__)


@dataclass
class AlgorithmOptions:
    tol: float = 1e-4            # relative SNR change that ends the outer loop
    max_outer: int = 100
    eps_bis: float = 1e-4
    conic_tol: float = 1e-8
    samples: int = 5000
    rng_seed: int = 0
    rank_tol: float = 1e-6
    feasibility_slack: float = 1e-7   # accepted slack on "opt <= 1" in bisection probes
    randomize_above: int = 3          # use randomization when L exceeds this
    keep_incumbent: bool = True


@dataclass
class RunTrace:
    algorithm: str
    snr: list = field(default_factory=list)        # accepted SNR per outer iteration (index 0 = init)
    raw_snr: list = field(default_factory=list)    # SNR produced by each step before the incumbent check
    wall_ms: list = field(default_factory=list)
    probe_counts: list = field(default_factory=list)
    conic_iters: list = field(default_factory=list)
    converged: bool = False
    status: str = "running"
    message: str = ""
    digest: str = ""

    @property
    def outer_iters(self) -> int:
        return max(len(self.snr) - 1, 0)

    @property
    def final_snr(self) -> float:
        return self.snr[-1] if self.snr else float("nan")


def state_digest(state: BeamformerState) -> str:
    h = hashlib.sha256()
    for f in state.precoders:
        h.update(np.round(f, 10).tobytes())
    h.update(np.round(state.g, 10).tobytes())
    return h.hexdigest()[:16]


def clip_power(model: NetworkModel, precoders):
    """Scale each precoder down onto its power budget if solver round-off pushed it over."""
    out = []
    for i, f in enumerate(precoders):
        p = transmit_power(model, f, i)
        lim = model.P[i]
        out.append(f * np.sqrt(lim / p) if p > lim else f)
    return out


class StepInfo:
    """Per-step diagnostics filled in by a precoder update."""

    def __init__(self):
        self.probes = 0
        self.conic_iters = 0


def run_bca(name: str, model: NetworkModel, init: BeamformerState, opts: AlgorithmOptions,
            step) -> tuple[BeamformerState, RunTrace]:
    """Alternate ``step`` (precoder block) with the optimal postcoder until the SNR settles.

    ``step(model, state, opts, info)`` returns a new BeamformerState; its postcoder
    is recomputed here.
    """
    trace = RunTrace(name)
    state = init.copy()
    snr = evaluate_snr(model, state)
    trace.snr.append(snr)
    trace.raw_snr.append(snr)
    for it in range(1, opts.max_outer + 1):
        t0 = time.perf_counter()
        info = StepInfo()
        try:
            cand = step(model, state, opts, info)
            cand = BeamformerState(clip_power(model, cand.precoders), cand.g)
            cand.g = optimal_postcoder(model, cand.precoders)
        except DegenerateIterateError as exc:
            trace.status, trace.message = "degenerate", str(exc)
            break
        new = evaluate_snr(model, cand)
        trace.raw_snr.append(new)
        trace.wall_ms.append(1e3 * (time.perf_counter() - t0))
        trace.probe_counts.append(info.probes)
        trace.conic_iters.append(info.conic_iters)
        if new < snr and opts.keep_incumbent:
            log.debug("%s: step %d lowered SNR %.12g -> %.12g, keeping incumbent", name, it, snr, new)
            trace.snr.append(snr)
            trace.converged = True
            break
        rel = (new - snr) / max(abs(snr), 1e-300)
        state, snr = cand, new
        trace.snr.append(snr)
        if rel < opts.tol:
            trace.converged = True
            break
    if trace.status == "running":
        trace.status = "converged" if trace.converged else "max_outer"
    trace.digest = state_digest(state)
    return state, trace
