"""Joint precoder update by bisection on the SNR level with second-order cone probes."""
from __future__ import annotations

import numpy as np

from . import conic
from .bca import AlgorithmOptions, run_bca
from .linalg import herm_eig, hermitian_to_real_embedding, sqrt_psd
from .model import BeamformerState, DegenerateIterateError, NetworkModel
from .sdr import QuadraticForms, assemble_forms


class BisectionError(RuntimeError):
    pass


def build_a(model: NetworkModel, g) -> np.ndarray:
    """Vector a with A = a a^H: sigma_s * stack_i (1_{K_i} kron H_i^H g)."""
    g = np.asarray(g, dtype=complex).reshape(-1)
    if not np.any(g):
        raise DegenerateIterateError("postcoder is zero")
    parts = [np.kron(np.ones(k), h.conj().T @ g) for k, h in zip(model.K, model.channels)]
    return np.sqrt(model.source_power) * np.concatenate(parts)


def snr_upper_bound(model: NetworkModel, g) -> float:
    """sigma_s^2 / c0 * (sum_i K_i sqrt(P_i / lambda_min(C_i)) ||H_i^H g||)^2."""
    g = np.asarray(g, dtype=complex).reshape(-1)
    c0 = model.fc_noise_power * float(np.vdot(g, g).real)
    total = 0.0
    for i, (k, h, p) in enumerate(zip(model.K, model.channels, model.P)):
        lmin = herm_eig(model.power_weight(i)).values[-1]
        total += k * np.sqrt(p / lmin) * np.linalg.norm(h.conj().T @ g)
    return float(model.source_power * total ** 2 / c0)


def _real_map(s) -> np.ndarray:
    """Real matrix mapping [Re f; Im f] to [Re(S f); Im(S f)]."""
    return hermitian_to_real_embedding(s)


def solve_p7gamma(forms: QuadraticForms, a, limits, gamma: float, tol: float = 1e-8,
                  u_cap: float | None = 2.0):
    """min u s.t. sqrt(gamma) ||[B^{1/2} f; sqrt(c0)]|| <= Re(a^H f), Im(a^H f) = 0,
    ||C_i^{1/2} f_i|| / sqrt(P_i) <= u.

    Returns (f, u_opt, conic_iterations); u_opt is inf when no f reaches the level
    with u <= u_cap.  The cap leaves the question "u_opt <= 1?" unchanged but turns
    levels at the asymptotic supremum of the ratio (reachable only as ||f|| grows
    without bound) into strictly infeasible programs that the solver can certify.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    n = forms.n
    a = np.asarray(a, dtype=complex)
    prob = conic.ConicProblem("min")
    x = prob.variable(2 * n)
    u = prob.variable(1)
    v = prob.variable(1)
    obj = prob.zeros()
    obj[u] = 1.0
    prob.set_objective(obj)

    sb = sqrt_psd(forms.B, 1e-12)
    rb = _real_map(sb)
    F = np.zeros((2 + rb.shape[0], prob.n))
    F[0, v] = 1.0
    F[1:1 + rb.shape[0], x] = np.sqrt(gamma) * rb
    g = np.zeros(F.shape[0])
    g[-1] = np.sqrt(gamma * forms.c0)
    prob.add_soc(F, g)

    re_row = np.concatenate([a.real, a.imag])
    im_row = np.concatenate([-a.imag, a.real])
    eq = np.zeros((2, prob.n))
    eq[0, x] = re_row
    eq[0, v] = -1.0
    eq[1, x] = im_row
    prob.add_equality(eq, np.zeros(2))

    off = forms.offsets()
    for i, (c, p) in enumerate(zip(forms.C, limits)):
        if p <= 0:
            # zero budget: pin the block to zero
            sel = np.zeros((2 * (off[i + 1] - off[i]), prob.n))
            idx = x.start + np.r_[off[i]:off[i + 1], n + off[i]:n + off[i + 1]]
            sel[np.arange(idx.size), idx] = 1.0
            prob.add_equality(sel, np.zeros(idx.size))
            continue
        rc = _real_map(sqrt_psd(c)) / np.sqrt(p)
        F = np.zeros((1 + rc.shape[0], prob.n))
        F[0, u] = 1.0
        F[1:, x.start + np.r_[off[i]:off[i + 1], n + off[i]:n + off[i + 1]]] = rc
        prob.add_soc(F, np.zeros(F.shape[0]))

    if u_cap is not None:
        row = prob.zeros()
        row[u] = 1.0
        prob.add_inequality(row, u_cap)
    sol = prob.solve(tol=tol)
    if sol.status == conic.INFEASIBLE:
        return None, np.inf, sol.iterations
    if sol.status != conic.OPTIMAL:
        raise conic.NumericalFailure(f"cone probe ended with status {sol.status}", sol)
    f = sol.x[x][:n] + 1j * sol.x[x][n:]
    return f, float(sol.x[u][0]), sol.iterations


def bisect_precoders(forms: QuadraticForms, a, limits, bd_l: float, bd_u: float,
                     eps_bis: float = 1e-4, slack: float = 1e-7, tol: float = 1e-8,
                     info=None) -> np.ndarray:
    """Largest achievable level on [bd_l, bd_u] to within eps_bis; returns a full-power f for it."""
    probes = 0
    iters = 0
    bd_u = max(bd_u, bd_l)
    while bd_u - bd_l >= eps_bis:
        gamma = 0.5 * (bd_l + bd_u)
        _, u_opt, it = solve_p7gamma(forms, a, limits, gamma, tol)
        probes += 1
        iters += it
        if u_opt <= 1.0 + slack:
            bd_l = gamma
        else:
            bd_u = gamma
    f, u_opt, it = solve_p7gamma(forms, a, limits, bd_l, tol)
    iters += it
    if info is not None:
        info.probes += probes
        info.conic_iters += iters
    if f is None or u_opt > 1.0 + slack:
        raise BisectionError(f"lower end {bd_l:.6g} is not achievable (u = {u_opt:.6g})")
    if u_opt > 0:
        f = f / u_opt   # every budget-tight constraint lands exactly on its limit
    return f


def _step(model, state, opts: AlgorithmOptions, info):
    forms = assemble_forms(model, state.g)
    a = build_a(model, state.g)
    bd_l = forms.ratio(forms.stack(state.precoders))
    bd_u = snr_upper_bound(model, state.g)
    f = bisect_precoders(forms, a, model.P, bd_l, bd_u, opts.eps_bis,
                         opts.feasibility_slack, opts.conic_tol, info)
    shapes = list(zip(model.N, model.K))
    return BeamformerState(forms.unstack(f, shapes), state.g)


def run_algorithm2(model: NetworkModel, init: BeamformerState, opts: AlgorithmOptions | None = None):
    return run_bca("socp", model, init, opts or AlgorithmOptions(), _step)
