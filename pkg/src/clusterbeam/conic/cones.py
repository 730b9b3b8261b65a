"""Symmetric cones, Jordan algebra helpers and Nesterov-Todd scalings.

Vectors for the PSD cone use the scaled lower-triangular storage ``svec``
(off-diagonal entries multiplied by sqrt(2)) so that the ordinary dot product
equals the trace inner product.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.linalg as sla

SQRT2 = np.sqrt(2.0)


class ScalingFailure(ArithmeticError):
    pass


@lru_cache(maxsize=64)
def _tril(order: int):
    rows, cols = np.tril_indices(order)
    weight = np.where(rows == cols, 1.0, SQRT2)
    return rows, cols, weight


def svec(m) -> np.ndarray:
    """Scaled lower-triangular vectorization; accepts a stack (..., d, d)."""
    m = np.asarray(m, dtype=float)
    rows, cols, w = _tril(m.shape[-1])
    return m[..., rows, cols] * w


def smat(v, order: int | None = None) -> np.ndarray:
    """Inverse of svec; ``v`` may be (p,) or (p, k) with columns stacked as k matrices."""
    v = np.asarray(v, dtype=float)
    p = v.shape[0]
    if order is None:
        order = int(round((np.sqrt(8 * p + 1) - 1) / 2))
    rows, cols, w = _tril(order)
    if v.ndim == 1:
        out = np.zeros((order, order))
        out[rows, cols] = v / w
        out[cols, rows] = v / w
        return out
    k = v.shape[1]
    out = np.zeros((k, order, order))
    vals = (v / w[:, None]).T
    out[:, rows, cols] = vals
    out[:, cols, rows] = vals
    return out


def svec_dim(order: int) -> int:
    return order * (order + 1) // 2


class Cone:
    kind = ""
    dim = 0

    @property
    def degree(self) -> int:
        raise NotImplementedError


class NonnegCone(Cone):
    kind = "nonneg"

    def __init__(self, dim: int):
        self.dim = int(dim)

    @property
    def degree(self):
        return self.dim

    def identity(self):
        return np.ones(self.dim)

    def min_eig(self, x):
        return float(x.min()) if self.dim else np.inf

    def product(self, u, v):
        return u * v

    def scaling(self, s, z):
        return _NonnegScaling(s, z)

    def __repr__(self):
        return f"NonnegCone({self.dim})"


class SecondOrderCone(Cone):
    kind = "soc"

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("second-order cone needs dimension >= 1")
        self.dim = int(dim)

    @property
    def degree(self):
        return 1

    def identity(self):
        e = np.zeros(self.dim)
        e[0] = 1.0
        return e

    def min_eig(self, x):
        return float(x[0] - np.linalg.norm(x[1:]))

    def product(self, u, v):
        return np.concatenate([[u @ v], u[0] * v[1:] + v[0] * u[1:]])

    def scaling(self, s, z):
        return _SocScaling(s, z)

    def __repr__(self):
        return f"SecondOrderCone({self.dim})"


class PSDCone(Cone):
    kind = "psd"

    def __init__(self, order: int):
        self.order = int(order)
        self.dim = svec_dim(self.order)

    @property
    def degree(self):
        return self.order

    def identity(self):
        return svec(np.eye(self.order))

    def min_eig(self, x):
        return float(np.linalg.eigvalsh(smat(x, self.order))[0])

    def product(self, u, v):
        a, b = smat(u, self.order), smat(v, self.order)
        return svec(0.5 * (a @ b + b @ a))

    def scaling(self, s, z):
        return _PsdScaling(smat(s, self.order), smat(z, self.order))

    def __repr__(self):
        return f"PSDCone({self.order})"


def _soc_step(x, d):
    """Largest t >= 0 with x + t d in the second-order cone (x interior)."""
    c = x[0] ** 2 - x[1:] @ x[1:]
    a = d[0] ** 2 - d[1:] @ d[1:]
    b = 2.0 * (x[0] * d[0] - x[1:] @ d[1:])
    disc = b * b - 4 * a * c
    if disc < 0:
        return np.inf
    q = -0.5 * (b + np.copysign(np.sqrt(disc), b))
    roots = []
    if a != 0:
        roots.append(q / a)
    if q != 0:
        roots.append(c / q)
    pos = [r for r in roots if r > 0]
    return min(pos) if pos else np.inf


class _NonnegScaling:
    def __init__(self, s, z):
        if np.any(s <= 0) or np.any(z <= 0):
            raise ScalingFailure("nonnegative iterate left the cone interior")
        self.w = np.sqrt(s / z)
        self.lam = np.sqrt(s * z)

    def apply(self, m, kind):
        w = self.w if kind in ("W", "Wt") else 1.0 / self.w
        return w * m if m.ndim == 1 else w[:, None] * m

    def divide(self, v):
        return v / self.lam

    def max_step(self, d):
        neg = d < 0
        return float(np.min(-self.lam[neg] / d[neg])) if np.any(neg) else np.inf


class _SocScaling:
    def __init__(self, s, z):
        j = np.ones(s.size)
        j[0] = -1.0
        sj = s[0] ** 2 - s[1:] @ s[1:]
        zj = z[0] ** 2 - z[1:] @ z[1:]
        if sj <= 0 or zj <= 0 or s[0] <= 0 or z[0] <= 0:
            raise ScalingFailure("second-order cone iterate left the cone interior")
        sbar = s / np.sqrt(sj)
        zbar = z / np.sqrt(zj)
        gamma = np.sqrt(0.5 * (1.0 + sbar @ zbar))
        wbar = (sbar - j * zbar) / (2.0 * gamma)
        wbar[0] = (sbar[0] + zbar[0]) / (2.0 * gamma)
        v = wbar.copy()
        v[0] += 1.0
        v /= np.sqrt(2.0 * (wbar[0] + 1.0))
        jmat = -np.diag(j)  # J = diag(1, -1, ..., -1)
        self.beta = (sj / zj) ** 0.25
        self.W = self.beta * (2.0 * np.outer(v, v) - jmat)
        jv = jmat @ v
        self.Winv = (2.0 * np.outer(jv, jv) - jmat) / self.beta
        self.lam = self.W @ z

    def apply(self, m, kind):
        return (self.W if kind in ("W", "Wt") else self.Winv) @ m

    def divide(self, v):
        lam = self.lam
        det = lam[0] ** 2 - lam[1:] @ lam[1:]
        u0 = (lam[0] * v[0] - lam[1:] @ v[1:]) / det
        return np.concatenate([[u0], (v[1:] - u0 * lam[1:]) / lam[0]])

    def max_step(self, d):
        return _soc_step(self.lam, d)


class _PsdScaling:
    def __init__(self, s, z):
        try:
            ls = np.linalg.cholesky(s)
            lz = np.linalg.cholesky(z)
        except np.linalg.LinAlgError as exc:
            raise ScalingFailure("PSD iterate left the cone interior") from exc
        _, lam, vt = np.linalg.svd(lz.T @ ls)
        if lam[-1] <= 0:
            raise ScalingFailure("singular PSD scaling")
        self.order = s.shape[0]
        self.eigs = lam
        self.R = (ls @ vt.T) / np.sqrt(lam)
        ls_inv = sla.solve_triangular(ls, np.eye(self.order), lower=True)
        self.Rinv = np.sqrt(lam)[:, None] * (vt @ ls_inv)
        self.lam = svec(np.diag(lam))

    def _congruence(self, m, left, right):
        x = smat(m, self.order)
        return svec(left @ x @ right).T if m.ndim == 2 else svec(left @ x @ right)

    def apply(self, m, kind):
        r, ri = self.R, self.Rinv
        if kind == "W":        # R^T X R
            return self._congruence(m, r.T, r)
        if kind == "Wt":       # R X R^T
            return self._congruence(m, r, r.T)
        if kind == "Winv":     # R^{-T} X R^{-1}
            return self._congruence(m, ri.T, ri)
        if kind == "Winvt":    # R^{-1} X R^{-T}
            return self._congruence(m, ri, ri.T)
        raise ValueError(kind)

    def divide(self, v):
        lam = self.eigs
        return svec(smat(v, self.order) * (2.0 / (lam[:, None] + lam[None, :])))

    def max_step(self, d):
        isq = 1.0 / np.sqrt(self.eigs)
        m = smat(d, self.order) * isq[:, None] * isq[None, :]
        lmin = np.linalg.eigvalsh(m)[0]
        return -1.0 / lmin if lmin < 0 else np.inf


class ConeProduct:
    """Cartesian product of cones acting on a stacked vector."""

    def __init__(self, cones):
        self.cones = list(cones)
        self.offsets = np.cumsum([0] + [c.dim for c in self.cones])
        self.dim = int(self.offsets[-1])
        self.degree = sum(c.degree for c in self.cones)

    def blocks(self, v):
        for c, a, b in zip(self.cones, self.offsets[:-1], self.offsets[1:]):
            yield c, v[a:b]

    def identity(self):
        return np.concatenate([c.identity() for c in self.cones]) if self.cones else np.zeros(0)

    def min_eig(self, x):
        return min((c.min_eig(xb) for c, xb in self.blocks(x) if c.dim), default=np.inf)

    def product(self, u, v):
        return np.concatenate([c.product(ub, v[a:b]) for (c, ub), a, b in
                               zip(self.blocks(u), self.offsets[:-1], self.offsets[1:])])

    def scaling(self, s, z):
        return ProductScaling(self, [c.scaling(sb, z[a:b]) for (c, sb), a, b in
                                     zip(self.blocks(s), self.offsets[:-1], self.offsets[1:])])


class ProductScaling:
    def __init__(self, product: ConeProduct, parts):
        self.product = product
        self.parts = parts
        self.lam = np.concatenate([p.lam for p in parts]) if parts else np.zeros(0)

    def _split(self):
        return zip(self.parts, self.product.offsets[:-1], self.product.offsets[1:])

    def apply(self, m, kind):
        m = np.asarray(m, dtype=float)
        out = np.empty_like(m)
        for p, a, b in self._split():
            out[a:b] = p.apply(m[a:b], kind)
        return out

    def divide(self, v):
        return np.concatenate([p.divide(v[a:b]) for p, a, b in self._split()])

    def max_step(self, d):
        return min((p.max_step(d[a:b]) for p, a, b in self._split()), default=np.inf)
