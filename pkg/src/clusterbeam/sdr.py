"""Joint precoder update by semidefinite relaxation (2-block BCA, first variant).

The precoders of all clusters are stacked into f = [vec(F_1); ...; vec(F_L)] and
the SNR for a fixed postcoder becomes the ratio f^H A f / (f^H B f + c0) under
per-cluster quadratic power constraints f^H D_i f <= P_i.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import conic
from .bca import AlgorithmOptions, run_bca
from .linalg import (LinAlgFailure, herm_eig, hermitian_part, hermitian_to_real_embedding, kron,
                     numerical_rank, real_embedding_to_hermitian, real_nullspace_sample, unvec, vec)
from .model import BeamformerState, DegenerateIterateError, NetworkModel


class SdrDegenerate(DegenerateIterateError):
    """The relaxation returned a zero signal (for instance all budgets are zero)."""


@dataclass
class QuadraticForms:
    A: np.ndarray
    B: np.ndarray
    D: list
    C: list
    c0: float
    block_dims: list

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def offsets(self):
        return np.cumsum([0] + list(self.block_dims))

    def stack(self, precoders) -> np.ndarray:
        return np.concatenate([vec(f) for f in precoders])

    def unstack(self, f, shapes) -> list:
        off = self.offsets()
        return [unvec(f[a:b], *s) for a, b, s in zip(off[:-1], off[1:], shapes)]

    def ratio(self, f) -> float:
        num = np.vdot(f, self.A @ f).real
        den = np.vdot(f, self.B @ f).real + self.c0
        return float(num / den)

    def powers(self, f) -> np.ndarray:
        off = self.offsets()
        return np.array([np.vdot(f[a:b], c @ f[a:b]).real
                         for a, b, c in zip(off[:-1], off[1:], self.C)])


@dataclass
class SdrResult:
    Y: np.ndarray
    nu: float
    objective: float
    recovered_f: np.ndarray | None = None
    tightness_gap: float = float("nan")
    conic_iters: int = 0
    extra: dict = field(default_factory=dict)


def assemble_forms(model: NetworkModel, g) -> QuadraticForms:
    g = np.asarray(g, dtype=complex).reshape(-1)
    if not np.any(g):
        raise DegenerateIterateError("postcoder is zero")
    s2 = model.source_power
    hg = [h.conj().T @ g for h in model.channels]
    dims = model.block_dims
    off = np.cumsum([0] + dims)
    n = off[-1]
    A = np.zeros((n, n), dtype=complex)
    B = np.zeros((n, n), dtype=complex)
    D, C = [], []
    for i, (ki, ni) in enumerate(zip(model.K, model.N)):
        for j, kj in enumerate(model.K):
            A[off[i]:off[i + 1], off[j]:off[j + 1]] = s2 * kron(np.ones((ki, kj)), np.outer(hg[i], hg[j].conj()))
        sig = model.clusters[i].obs_noise_cov
        B[off[i]:off[i + 1], off[i]:off[i + 1]] = kron(sig.conj(), np.outer(hg[i], hg[i].conj()))
        ci = kron(s2 * np.ones((ki, ki)) + sig.conj(), np.eye(ni))
        C.append(hermitian_part(ci))
        di = np.zeros((n, n), dtype=complex)
        di[off[i]:off[i + 1], off[i]:off[i + 1]] = ci
        D.append(di)
    c0 = model.fc_noise_power * float(np.vdot(g, g).real)
    return QuadraticForms(hermitian_part(A), hermitian_part(B), D, C, c0, dims)


def dual_feasible_point(forms: QuadraticForms, limits):
    """Explicit dual point: mu_i = lambda_max(A)/lambda_min(C_i), lambda = sum mu_i P_i / c0."""
    lam_a = herm_eig(forms.A).values[0]
    mu = np.array([lam_a / herm_eig(c).values[-1] for c in forms.C])
    lam = float(mu @ np.asarray(limits, dtype=float) / forms.c0)
    return lam, mu


def _half_embed(m) -> np.ndarray:
    """Real symmetric stand-in for a Hermitian matrix, halved so Tr(m Y) == Tr(half_embed(m) Z)."""
    return 0.5 * hermitian_to_real_embedding(m)


def solve_p4(forms: QuadraticForms, limits, tol: float = 1e-8) -> SdrResult:
    """Relaxed Charnes-Cooper program max Tr(AY) s.t. Tr(BY) + c0 nu <= 1, Tr(D_i Y) <= P_i nu.

    Posed through its dual, min lambda s.t. lambda B + sum mu_i D_i - A >= 0,
    c0 lambda >= sum mu_i P_i, mu >= 0, which has only L + 1 scalar unknowns;
    (Y, nu) are read off the multipliers of the matrix and scalar inequalities.
    """
    n = forms.n
    L = len(forms.D)
    limits = np.asarray(limits, dtype=float)
    prob = conic.ConicProblem("min")
    lam = prob.variable(1)
    mu = prob.variable(L)
    obj = prob.zeros()
    obj[lam] = 1.0
    prob.set_objective(obj)
    terms = [(lam.start, _half_embed(forms.B))]
    terms += [(mu.start + i, _half_embed(d)) for i, d in enumerate(forms.D)]
    prob.add_lmi(terms, -_half_embed(forms.A))
    row = prob.zeros()
    row[lam] = -forms.c0
    row[mu] = limits
    prob.add_inequality(row, 0.0)
    prob.add_inequality(-np.eye(1 + L)[1:], np.zeros(L))
    sol = prob.solve(tol=tol)
    if sol.status != conic.OPTIMAL:
        raise conic.NumericalFailure(f"relaxation solve ended with status {sol.status}", sol)
    Y = real_embedding_to_hermitian(sol.cone_duals[0])
    nu_val = float(sol.ineq_dual[0])
    objective = float(np.trace(forms.A @ Y).real)
    scale = 1.0 + np.abs(forms.A).max()
    if objective <= 10 * tol * scale or nu_val <= 1e-12:   # below solver accuracy
        raise SdrDegenerate(f"relaxation returned objective {objective:.3e}, nu {nu_val:.3e}")
    return SdrResult(Y, nu_val, objective, conic_iters=sol.iterations,
                     extra={"solution": sol, "dual_bound": sol.objective, "mu": sol.x[mu]})


def _hermitian_trace_row(m) -> np.ndarray:
    """Coefficients of Tr(m Delta) in the real parameters of a Hermitian Delta."""
    r = m.shape[0]
    iu = np.triu_indices(r, 1)
    return np.concatenate([m.diagonal().real, 2 * m[iu].real, 2 * m[iu].imag])


def _hermitian_from_params(x, r) -> np.ndarray:
    iu = np.triu_indices(r, 1)
    k = len(iu[0])
    d = np.diag(x[:r]).astype(complex)
    d[iu] = x[r:r + k] + 1j * x[r + k:r + 2 * k]
    d[(iu[1], iu[0])] = x[r:r + k] - 1j * x[r + k:r + 2 * k]
    return d


def reduce_step(V, mats, scalars=None):
    """One rank-reduction move on Y = V V^H.

    Finds a Hermitian Delta (and real delta, when ``scalars`` is given) with
    Tr(V^H M V Delta) + s * delta = 0 for every (M, s), then returns
    V (I - Delta/kappa) V^H together with the factor (1 - delta/kappa).
    """
    r = V.shape[1]
    rows = [_hermitian_trace_row(hermitian_part(V.conj().T @ m @ V)) for m in mats]
    a = np.array(rows)
    if scalars is not None:
        a = np.column_stack([a, np.asarray(scalars, dtype=float)])
    x = real_nullspace_sample(a)
    delta_m = _hermitian_from_params(x, r)
    delta = float(x[-1]) if scalars is not None else 0.0
    w = np.linalg.eigvalsh(delta_m)
    if -w[0] > w[-1]:
        delta_m, delta, w = -delta_m, -delta, -w[::-1]
    kappa = max(abs(w[0]), abs(w[-1]), abs(delta))
    if kappa == 0:
        raise LinAlgFailure("rank-reduction direction is zero")
    y = V @ (np.eye(r) - delta_m / kappa) @ V.conj().T
    return hermitian_part(y), 1.0 - delta / kappa


def _factor(Y, rank_tol):
    """Split Y = V V^H + R, with V spanning the numerically nonzero eigenvalues."""
    w, u = herm_eig(Y)
    r = numerical_rank(w, rank_tol)
    rest = (u[:, r:] * w[r:]) @ u[:, r:].conj().T
    return u[:, :r] * np.sqrt(w[:r]), r, rest


def rank_reduce(Y, nu: float, forms: QuadraticForms, limits, rank_tol: float = 1e-6,
                max_steps: int | None = None):
    """Lower the rank of an optimal (Y, nu) while keeping every constraint value fixed.

    Eigenvalues below ``rank_tol`` times the largest are carried along untouched,
    so the constraint values are preserved exactly rather than up to truncation.
    """
    L = len(forms.D)
    limits = np.asarray(limits, dtype=float)
    Y = hermitian_part(np.asarray(Y, dtype=complex))
    max_steps = max_steps or forms.n + 2
    for _ in range(max_steps):
        V, r, rest = _factor(Y, rank_tol)
        if r * r <= L:   # rank(nu) = 1 since nu > 0
            return Y, nu
        mats = [forms.B] + list(forms.D)
        scal = [forms.c0] + list(-limits)
        if r * r > L + 1:   # enough freedom to pin the objective as well
            mats.append(forms.A)
            scal.append(0.0)
        Y, factor = reduce_step(V, mats, scal)
        Y = hermitian_part(Y + rest)
        nu = nu * factor
        if nu <= 0:
            raise LinAlgFailure("rank reduction drove nu to zero")
    raise LinAlgFailure(f"rank reduction did not reach rank^2 <= {L} in {max_steps} steps")


def rank_one_vector(Y, nu: float = 1.0) -> np.ndarray:
    """f with f f^H = Y / nu, taken from the leading eigenpair."""
    w, u = herm_eig(Y)
    return u[:, 0] * np.sqrt(max(w[0], 0.0) / nu)


def _quad_cols(m, x) -> np.ndarray:
    return np.einsum("ij,ij->j", x.conj(), m @ x).real


def rescale_factor(ft, forms: QuadraticForms, nu: float, limits) -> np.ndarray:
    """min{1, sqrt((1 - c0 nu)/f^H B f), sqrt(P_i nu / f^H D_i f)} per column of ``ft``."""
    ft = ft.reshape(forms.n, -1)
    with np.errstate(divide="ignore"):
        beta = np.minimum(1.0, np.sqrt(max(1.0 - forms.c0 * nu, 0.0) / _quad_cols(forms.B, ft)))
        off = forms.offsets()
        for a, b, c, p in zip(off[:-1], off[1:], forms.C, limits):
            beta = np.minimum(beta, np.sqrt(p * nu / _quad_cols(c, ft[a:b])))
    return beta


def randomize_and_rescale(Y, nu: float, forms: QuadraticForms, limits, samples: int = 5000,
                          rng_seed=None, chunk: int = 1000) -> np.ndarray:
    """Best of ``samples`` Gaussian draws with covariance Y, each rescaled into the feasible set."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    w, u = herm_eig(Y)
    keep = w > 1e-12 * max(w[0], 0.0)   # rounding-level eigenvalues would leak sqrt(eps) noise
    fac = u[:, keep] * np.sqrt(w[keep])
    rng = np.random.default_rng(rng_seed)
    best_val, best_f = -np.inf, None
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        xi = (rng.standard_normal((fac.shape[1], m)) + 1j * rng.standard_normal((fac.shape[1], m))) / np.sqrt(2)
        ft = fac @ xi
        fb = ft * (rescale_factor(ft, forms, nu, limits) / np.sqrt(nu))
        num = _quad_cols(forms.A, fb)
        den = _quad_cols(forms.B, fb) + forms.c0
        vals = num / den
        k = int(np.argmax(vals))      # first index wins ties
        if vals[k] > best_val:
            best_val, best_f = vals[k], fb[:, k].copy()
        done += m
    if best_f is None or best_val <= 0:
        raise SdrDegenerate("every randomized sample has zero objective")
    return best_f


def sdr_precoders(forms: QuadraticForms, limits, opts: AlgorithmOptions, L: int):
    res = solve_p4(forms, limits, tol=opts.conic_tol)
    if L <= opts.randomize_above:
        Y, nu = rank_reduce(res.Y, res.nu, forms, limits, opts.rank_tol)
        f = rank_one_vector(Y, nu)
    else:
        f = randomize_and_rescale(res.Y, res.nu, forms, limits, opts.samples, opts.rng_seed)
    res.recovered_f = f
    res.tightness_gap = res.objective - forms.ratio(f)
    return res


def _step(model, state, opts, info):
    forms = assemble_forms(model, state.g)
    res = sdr_precoders(forms, model.P, opts, model.L)
    info.conic_iters += res.conic_iters
    shapes = list(zip(model.N, model.K))
    return BeamformerState(forms.unstack(res.recovered_f, shapes), state.g)


def run_algorithm1(model: NetworkModel, init: BeamformerState, opts: AlgorithmOptions | None = None):
    return run_bca("sdr", model, init, opts or AlgorithmOptions(), _step)


__all__ = [
    "QuadraticForms", "SdrResult", "SdrDegenerate", "assemble_forms", "dual_feasible_point",
    "solve_p4", "rank_reduce", "reduce_step", "rank_one_vector", "randomize_and_rescale",
    "rescale_factor", "run_algorithm1",
]
