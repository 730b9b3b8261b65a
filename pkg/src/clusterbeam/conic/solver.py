"""Primal-dual interior-point method for linear cone programs.

Solves

    minimize    c^T x
    subject to  G x + s = h,  A x = b,  s in K

over products of nonnegative orthants, second-order cones and PSD cones, with a
homogeneous self-dual embedding, Nesterov-Todd scaling and a Mehrotra
predictor-corrector.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .cones import ConeProduct, ScalingFailure

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
FAILED = "numerical_failure"


class NumericalFailure(ArithmeticError):
    """The iteration stalled or the KKT system became singular."""

    def __init__(self, msg, iterate=None):
        super().__init__(msg)
        self.iterate = iterate


@dataclass
class StandardResult:
    status: str
    x: np.ndarray
    s: np.ndarray
    y: np.ndarray
    z: np.ndarray
    iterations: int
    primal_residual: float
    dual_residual: float
    gap: float
    info: dict = field(default_factory=dict)


class _Kkt:
    """Solve [0 A^T G^T; A 0 0; G 0 -W^T W] [x; y; z] = [bx; by; bz].

    With Gs = W^{-T} G and z~ = W z the system becomes [0 A^T Gs^T; A 0 0; Gs 0 -I].
    When there are many more cone rows than variables, z~ is eliminated and the
    small system [Gs^T Gs  A^T; A 0] is factored instead.
    """

    def __init__(self, G, A, scaling):
        self.G, self.A, self.scaling = G, A, scaling
        gs = scaling.apply(G, "Winvt")
        m, n = gs.shape
        p = A.shape[0]
        self.n, self.p, self.gs = n, p, gs
        self.reduced = m > 2 * (n + p)
        if self.reduced:
            mat = np.zeros((n + p, n + p))
            mat[:n, :n] = gs.T @ gs
        else:
            mat = np.zeros((n + p + m, n + p + m))
            mat[:n, n + p:] = gs.T
            mat[n + p:, :n] = gs
            mat[n + p:, n + p:] = -np.eye(m)
        mat[:n, n:n + p] = A.T
        mat[n:n + p, :n] = A
        self.mat = mat
        with np.errstate(all="ignore"):
            self.lu = sla.lu_factor(mat, check_finite=False)
        diag = np.abs(np.diag(self.lu[0]))
        if not np.all(np.isfinite(self.lu[0])) or diag.min() == 0.0:
            raise NumericalFailure("singular KKT system")

    def _refined(self, rhs, refine):
        sol = sla.lu_solve(self.lu, rhs, check_finite=False)
        for _ in range(refine):
            sol = sol + sla.lu_solve(self.lu, rhs - self.mat @ sol, check_finite=False)
        return sol

    def solve(self, bx, by, bz, refine: int = 2):
        sc = self.scaling
        n, p = self.n, self.p
        bzs = sc.apply(bz, "Winvt")
        if self.reduced:
            sol = self._refined(np.concatenate([bx + self.gs.T @ bzs, by]), refine)
            x, y = sol[:n], sol[n:]
            return x, y, sc.apply(self.gs @ x - bzs, "Winv")
        sol = self._refined(np.concatenate([bx, by, bzs]), refine)
        return sol[:n], sol[n:n + p], sc.apply(sol[n + p:], "Winv")


def solve_standard(c, G, h, cones, A=None, b=None, tol: float = 1e-8,
                   max_iters: int = 100, raise_on_failure: bool = True) -> StandardResult:
    c = np.asarray(c, dtype=float)
    G = np.atleast_2d(np.asarray(G, dtype=float))
    h = np.asarray(h, dtype=float)
    n = c.size
    if A is None:
        A, b = np.zeros((0, n)), np.zeros(0)
    A = np.asarray(A, dtype=float).reshape(-1, n)
    b = np.asarray(b, dtype=float).reshape(-1)
    K = ConeProduct(cones)
    if G.shape != (K.dim, n) or h.shape != (K.dim,):
        raise ValueError(f"G must be {(K.dim, n)} and h must have {K.dim} entries")
    if A.shape[0] != b.size:
        raise ValueError("A and b disagree in row count")
    e = K.identity()
    deg = K.degree

    resx0 = max(1.0, np.linalg.norm(c))
    resy0 = max(1.0, np.linalg.norm(b))
    resz0 = max(1.0, np.linalg.norm(h))

    # initial point from the identity-scaled KKT system
    ident = K.scaling(e, e)
    kkt = _Kkt(G, A, ident)
    x, _, zt = kkt.solve(np.zeros(n), b, h)
    s = -zt
    _, y, z = kkt.solve(-c, np.zeros(A.shape[0]), np.zeros(K.dim))
    for v in (s, z):
        shift = K.min_eig(v)
        if shift < 1e-8 * max(np.linalg.norm(v), 1.0):
            v += (1.0 - shift) * e
    tau, kappa = 1.0, 1.0

    def pack(status, it, pres, dres, gap, extra=None):
        return StandardResult(status, x / tau, s / tau, y / tau, z / tau, it,
                              pres, dres, gap, extra or {})

    pres = dres = gap = np.inf
    for it in range(max_iters + 1):
        cx, by_, hz = c @ x, b @ y, h @ z
        rx = A.T @ y + G.T @ z + c * tau
        ry = b * tau - A @ x
        rz = s + G @ x - h * tau
        rt = kappa + cx + by_ + hz
        mu = (s @ z + tau * kappa) / (deg + 1)
        pcost, dcost = cx / tau, -(by_ + hz) / tau
        pres = max(np.linalg.norm(ry) / resy0, np.linalg.norm(rz) / resz0) / tau
        dres = np.linalg.norm(rx) / resx0 / tau
        gap = (s @ z) / tau ** 2
        relgap = max(gap, abs(pcost - dcost)) / max(1.0, min(abs(pcost), abs(dcost)))
        log.debug("it %2d pcost %.6e dcost %.6e pres %.1e dres %.1e gap %.1e",
                  it, pcost, dcost, pres, dres, relgap)
        if pres <= tol and dres <= tol and relgap <= tol:
            return pack(OPTIMAL, it, pres, dres, relgap)
        if hz + by_ < 0:
            pinf = np.linalg.norm(A.T @ y + G.T @ z) / resx0 / -(hz + by_)
            if pinf <= tol:
                cert = -(hz + by_)
                return StandardResult(INFEASIBLE, x / tau, s / tau, y / cert, z / cert, it,
                                      pres, dres, relgap, {"certificate_residual": pinf})
        if cx < 0:
            dinf = max(np.linalg.norm(A @ x) / resy0, np.linalg.norm(s + G @ x) / resz0) / -cx
            if dinf <= tol:
                return StandardResult(UNBOUNDED, x / -cx, s / -cx, y / tau, z / tau, it,
                                      pres, dres, relgap, {"certificate_residual": dinf})
        if it == max_iters:
            break

        try:
            scal = K.scaling(s, z)
            kkt = _Kkt(G, A, scal)
        except (ScalingFailure, NumericalFailure) as exc:
            if raise_on_failure:
                raise NumericalFailure(str(exc), pack(FAILED, it, pres, dres, relgap)) from exc
            return pack(FAILED, it, pres, dres, relgap)
        lam = scal.lam
        x1, y1, z1 = kkt.solve(-c, b, h)
        denom = c @ x1 + b @ y1 + h @ z1 - kappa / tau

        def direction(sigma, corr_s, corr_t):
            eta = 1.0 - sigma
            u = scal.divide(-K.product(lam, lam) + sigma * mu * e - corr_s)
            x2, y2, z2 = kkt.solve(-eta * rx, eta * ry, -eta * rz - scal.apply(u, "Wt"))
            rhs_t = -eta * rt - (sigma * mu - tau * kappa - corr_t) / tau
            dtau = (rhs_t - (c @ x2 + b @ y2 + h @ z2)) / denom
            dx, dy, dz = x2 + dtau * x1, y2 + dtau * y1, z2 + dtau * z1
            dz_s = scal.apply(dz, "W")
            # ds from the linearized primal equation keeps G x + s - h tau consistent
            ds = -eta * rz - G @ dx + h * dtau
            ds_s = scal.apply(ds, "Winvt")
            dkappa = (sigma * mu - tau * kappa - corr_t - kappa * dtau) / tau
            return dx, dy, dz, ds_s, dz_s, dtau, dkappa

        def step_limit(ds_s, dz_s, dtau, dkappa):
            amax = min(scal.max_step(ds_s), scal.max_step(dz_s))
            if dtau < 0:
                amax = min(amax, -tau / dtau)
            if dkappa < 0:
                amax = min(amax, -kappa / dkappa)
            return amax

        aff = direction(0.0, np.zeros_like(lam), 0.0)
        alpha_aff = min(1.0, step_limit(*aff[3:]))
        sigma = (1.0 - alpha_aff) ** 3
        corr_s = K.product(aff[3], aff[4])
        corr_t = aff[5] * aff[6]
        dx, dy, dz, ds_s, dz_s, dtau, dkappa = direction(sigma, corr_s, corr_t)
        alpha = min(1.0, 0.99 * step_limit(ds_s, dz_s, dtau, dkappa))
        if not np.isfinite(alpha) or alpha <= 0:
            break
        x = x + alpha * dx
        y = y + alpha * dy
        z = z + alpha * dz
        s = s + alpha * scal.apply(ds_s, "Wt")
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkappa

    result = pack(FAILED, it, pres, dres, gap)
    if raise_on_failure:
        raise NumericalFailure(f"no convergence after {it} iterations", result)
    return result
