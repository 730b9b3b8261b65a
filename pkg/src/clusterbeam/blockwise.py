"""Per-cluster precoder updates (multi-block BCA).

With every other precoder and the postcoder fixed, the SNR as a function of one
cluster's f_i = vec(F_i) is

    (f^H A_ii f + 2 Re{q^H f} + c) / (f^H B_i f + d),   f^H C_i f <= P_i.

Clusters with several sensors go through a one-shot relaxation plus rank-one
extraction; single-sensor clusters use bisection on the level alpha where each
probe has a closed-form answer.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import conic
from .bca import AlgorithmOptions, clip_power, run_bca
from .linalg import (LinAlgFailure, herm_eig, hermitian_part, numerical_rank,
                     real_embedding_to_hermitian, unvec, vec)
from .model import BeamformerState, DegenerateIterateError, NetworkModel
from .receiver import optimal_postcoder
from .sdr import _half_embed, assemble_forms, reduce_step
from .socp import build_a


class DeadClusterError(DegenerateIterateError):
    """H_i^H g vanishes, so cluster i cannot influence the SNR."""


@dataclass
class SubproblemData:
    A_ii: np.ndarray
    B_i: np.ndarray
    C_i: np.ndarray
    q: np.ndarray
    c: float
    d: float
    P: float
    h_g: np.ndarray        # H_i^H g
    beta: complex          # sum_{j != i} f_j^H (1 kron H_j^H g)
    obs_var: float         # sigma_i^2 (meaningful when K_i = 1)
    source_power: float
    shape: tuple           # (N_i, K_i)

    def value(self, f) -> float:
        f = np.asarray(f, dtype=complex).reshape(-1)
        num = np.vdot(f, self.A_ii @ f).real + 2 * np.vdot(self.q, f).real + self.c
        den = np.vdot(f, self.B_i @ f).real + self.d
        return float(num / den)

    def power(self, f) -> float:
        f = np.asarray(f, dtype=complex).reshape(-1)
        return float(np.vdot(f, self.C_i @ f).real)

    @property
    def dead(self) -> bool:
        return not np.any(np.abs(self.h_g) > 1e-14 * (1.0 + np.abs(self.A_ii).max()))


@dataclass
class ClosedFormInputs:
    beta: complex
    pbar: float
    h_g: np.ndarray
    alpha: float


def subproblem_data(model: NetworkModel, g, precoders, i: int) -> SubproblemData:
    forms = assemble_forms(model, g)
    f0 = forms.stack(precoders)
    off = forms.offsets()
    blk = slice(off[i], off[i + 1])
    f0[blk] = 0.0
    q = (forms.A @ f0)[blk]
    c = float(np.vdot(f0, forms.A @ f0).real)
    d = float(np.vdot(f0, forms.B @ f0).real + forms.c0)
    a = build_a(model, g) / np.sqrt(model.source_power)
    h_g = model.channels[i].conj().T @ np.asarray(g, dtype=complex)
    sig = model.clusters[i].obs_noise_cov
    return SubproblemData(forms.A[blk, blk], forms.B[blk, blk], forms.C[i], q, c, d,
                          float(model.P[i]), h_g, complex(np.vdot(f0, a)),
                          float(sig[0, 0].real) if sig.shape == (1, 1) else float("nan"),
                          model.source_power, (model.N[i], model.K[i]))


def closed_form_inputs(data: SubproblemData, alpha: float) -> ClosedFormInputs:
    return ClosedFormInputs(data.beta, data.P / (data.obs_var + data.source_power), data.h_g, alpha)


def _reduce_to_rank_one(Z, mats, rank_tol=1e-6, max_steps=None):
    """Drive Z to numerical rank one keeping Tr(M Z) for the given (at most three) M."""
    Z = hermitian_part(Z)
    max_steps = max_steps or Z.shape[0] + 2
    for _ in range(max_steps):
        w, u = herm_eig(Z)
        r = numerical_rank(w, rank_tol)
        if r <= 1:
            return Z
        V = u[:, :r] * np.sqrt(w[:r])
        rest = (u[:, r:] * w[r:]) @ u[:, r:].conj().T
        Z, _ = reduce_step(V, mats)
        Z = hermitian_part(Z + rest)
    raise LinAlgFailure("rank-one extraction did not terminate")


def _leading_vector(Z):
    w, u = herm_eig(Z)
    return u[:, 0] * np.sqrt(max(w[0], 0.0))


def oneshot_sdr(data: SubproblemData, tol: float = 1e-8, rank_tol: float = 1e-6) -> np.ndarray:
    """Charnes-Cooper relaxation of the cluster subproblem, then an exact rank-one extraction.

    The relaxation max Tr(Q1 Z) s.t. Tr(Q2 Z) = 1, Tr(Q3 Z) <= P Tr(Q4 Z) is solved via
    its dual min y1 s.t. y1 Q2 + y2 (Q3 - P Q4) - Q1 >= 0, y2 >= 0.
    """
    n = data.A_ii.shape[0]
    if data.dead and not np.any(data.q):
        return np.zeros(n, dtype=complex)
    Q1 = np.block([[data.A_ii, data.q[:, None]], [data.q.conj()[None, :], np.array([[data.c]])]])
    Q2 = np.zeros((n + 1, n + 1), dtype=complex)
    Q2[:n, :n] = data.B_i
    Q2[n, n] = data.d
    Q3 = np.zeros_like(Q2)
    Q3[:n, :n] = data.C_i
    Q4 = np.zeros_like(Q2)
    Q4[n, n] = 1.0
    prob = conic.ConicProblem("min")
    prob.variable(2)
    obj = prob.zeros()
    obj[0] = 1.0
    prob.set_objective(obj)
    prob.add_lmi([(0, _half_embed(Q2)), (1, _half_embed(Q3 - data.P * Q4))], -_half_embed(Q1))
    prob.add_inequality(np.array([[0.0, -1.0]]), np.zeros(1))
    sol = prob.solve(tol=tol)
    if sol.status != conic.OPTIMAL:
        raise conic.NumericalFailure(f"cluster relaxation ended with status {sol.status}", sol)
    Z = real_embedding_to_hermitian(sol.cone_duals[0])
    opt = float(np.trace(Q1 @ Z).real)
    Z = _reduce_to_rank_one(Z, [Q1 - opt * Q2, Q3, Q4], rank_tol)
    z = _leading_vector(Z)
    if abs(z[n]) <= 1e-12 * max(np.linalg.norm(z), 1e-300):
        raise DegenerateIterateError("homogenizing coordinate of the rank-one factor vanished")
    return z[:n] / z[n]


def _g_value(kappa, hn, s, beta, tau, offset):
    return kappa * hn ** 2 * abs(tau) ** 2 - 2 * s * hn * (beta * tau).real + offset


def solve_p8_closed(inputs: ClosedFormInputs, data: SubproblemData):
    """Minimize f^H(alpha B - A)f - 2 Re{q^H f} + (alpha d - c) over ||f||^2 <= P / (sigma_i^2 + sigma_s^2).

    Only the component along H_i^H g matters, f = tau H_i^H g / ||H_i^H g||, which
    leaves a scalar quadratic in tau; the three sign cases of its leading
    coefficient are handled directly.
    """
    hn = float(np.linalg.norm(inputs.h_g))
    if hn == 0.0:
        raise DeadClusterError("H_i^H g is zero")
    s = data.source_power
    alpha, beta, pbar = inputs.alpha, inputs.beta, inputs.pbar
    kappa = alpha * data.obs_var - s
    offset = alpha * data.d - data.c
    rp = np.sqrt(pbar)
    if abs(beta) == 0.0:
        tau = 0.0 if kappa >= 0 else rp
    else:
        along = np.conj(beta) / abs(beta)
        if abs(kappa) <= 1e-12 * max(alpha * data.obs_var, s):
            tau = rp * along
        elif kappa > 0:
            tau0 = s * np.conj(beta) / (hn * kappa)
            tau = tau0 if abs(tau0) <= rp else rp * along
        else:
            tau = rp * along
    tau = complex(tau)
    f = tau * inputs.h_g / hn
    return f, float(_g_value(kappa, hn, s, beta, tau, offset))


def solve_p8_sdr(data: SubproblemData, alpha: float, tol: float = 1e-8, rank_tol: float = 1e-6):
    """Relaxation min Tr(P1 X) s.t. Tr(P2 X) <= P, Tr(P3 X) = 1, X >= 0, with a rank-one extraction.

    Solved through the dual max y3 - P y2 s.t. P1 + y2 P2 - y3 P3 >= 0, y2 >= 0.
    """
    n = data.A_ii.shape[0]
    P1 = np.block([[alpha * data.B_i - data.A_ii, -data.q[:, None]],
                   [-data.q.conj()[None, :], np.array([[alpha * data.d - data.c]])]])
    P2 = np.zeros((n + 1, n + 1), dtype=complex)
    P2[:n, :n] = data.C_i
    P3 = np.zeros_like(P2)
    P3[n, n] = 1.0
    prob = conic.ConicProblem("max")
    y = prob.variable(2)
    obj = prob.zeros()
    obj[y] = [-data.P, 1.0]
    prob.set_objective(obj)
    prob.add_lmi([(0, _half_embed(P2)), (1, -_half_embed(P3))], _half_embed(P1))
    prob.add_inequality(np.array([[-1.0, 0.0]]), np.zeros(1))
    sol = prob.solve(tol=tol)
    if sol.status != conic.OPTIMAL:
        raise conic.NumericalFailure(f"level relaxation ended with status {sol.status}", sol)
    X = real_embedding_to_hermitian(sol.cone_duals[0])
    opt = float(np.trace(P1 @ X).real)
    X = _reduce_to_rank_one(X, [P1, P2, P3], rank_tol)
    x = _leading_vector(X)
    if abs(x[n]) <= 1e-12 * max(np.linalg.norm(x), 1e-300):
        raise DegenerateIterateError("homogenizing coordinate of the rank-one factor vanished")
    return x[:n] / x[n], opt


def subproblem_upper_bound(data: SubproblemData) -> float:
    """(lambda_max(A_ii) P / lambda_min(C_i) + 2 ||q|| sqrt(P / lambda_min(C_i)) + c) / d."""
    lmin = herm_eig(data.C_i).values[-1]
    lmax_a = max(herm_eig(data.A_ii).values[0], 0.0)
    return float((lmax_a * data.P / lmin + 2 * np.linalg.norm(data.q) * np.sqrt(data.P / lmin) + data.c) / data.d)


def bisect_cluster(data: SubproblemData, current_snr: float, eps_bis: float = 1e-4, info=None):
    """Bisection on alpha with the closed-form probe; opt <= 0 means level alpha is reachable."""
    if data.shape[1] != 1:
        raise ValueError("closed-form probes need a single-sensor cluster")
    if data.dead:
        return np.zeros(data.A_ii.shape[0], dtype=complex)
    bd_l = current_snr
    bd_u = max(subproblem_upper_bound(data), bd_l)
    probes = 0
    while bd_u - bd_l >= eps_bis:
        alpha = 0.5 * (bd_l + bd_u)
        _, opt = solve_p8_closed(closed_form_inputs(data, alpha), data)
        probes += 1
        if opt <= 0:
            bd_l = alpha
        else:
            bd_u = alpha
    f, opt = solve_p8_closed(closed_form_inputs(data, bd_l), data)
    if info is not None:
        info.probes += probes
    if opt > 1e-9 * max(1.0, abs(bd_l * data.d)):
        from .socp import BisectionError
        raise BisectionError(f"level {bd_l:.6g} is not reachable (opt {opt:.3e})")
    return f


def _step(model, state, opts: AlgorithmOptions, info):
    precoders = [f.copy() for f in state.precoders]
    g = state.g
    for i in range(model.L):
        data = subproblem_data(model, g, precoders, i)
        current = data.value(vec(precoders[i]))
        if model.K[i] == 1:
            f = bisect_cluster(data, current, opts.eps_bis, info)
        else:
            f = oneshot_sdr(data, opts.conic_tol, opts.rank_tol)
            info.conic_iters += 1
        precoders[i] = unvec(f, *data.shape)
        precoders = clip_power(model, precoders)
        g = optimal_postcoder(model, precoders)
    return BeamformerState(precoders, g)


def run_algorithm3(model: NetworkModel, init: BeamformerState, opts: AlgorithmOptions | None = None):
    return run_bca("blockwise", model, init, opts or AlgorithmOptions(), _step)
