"""Small modelling layer on top of the standard-form solver.

Constraints are written as affine maps of a single stacked real variable ``x``.
Variables can be appended at any time; coefficient matrices built earlier are
zero-padded on the right when the problem is assembled.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cones import NonnegCone, PSDCone, SecondOrderCone, smat, svec, svec_dim
from .solver import FAILED, OPTIMAL, NumericalFailure, solve_standard


@dataclass
class ConeBlock:
    kind: str          # "nonneg", "soc" or "psd"
    F: np.ndarray      # F x + g must lie in the cone
    g: np.ndarray
    order: int = 0     # matrix order for PSD blocks

    def cone(self):
        if self.kind == "nonneg":
            return NonnegCone(self.g.size)
        if self.kind == "soc":
            return SecondOrderCone(self.g.size)
        return PSDCone(self.order)


@dataclass
class ConicSolution:
    status: str
    x: np.ndarray
    objective: float
    eq_dual: np.ndarray
    ineq_dual: np.ndarray
    cone_duals: list
    iterations: int
    residuals: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


def _pad(m: np.ndarray, n: int) -> np.ndarray:
    m = np.atleast_2d(m)
    if m.shape[1] == n:
        return m
    out = np.zeros((m.shape[0], n))
    out[:, :m.shape[1]] = m
    return out


class ConicProblem:
    def __init__(self, sense: str = "min"):
        if sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        self.sense = sense
        self.n = 0
        self.c = np.zeros(0)
        self.eqs: list[tuple[np.ndarray, np.ndarray]] = []
        self.ineqs: list[tuple[np.ndarray, np.ndarray]] = []
        self.blocks: list[ConeBlock] = []

    def variable(self, size: int = 1) -> slice:
        sl = slice(self.n, self.n + size)
        self.n += size
        self.c = np.concatenate([self.c, np.zeros(size)])
        return sl

    def psd_variable(self, order: int) -> slice:
        """svec coordinates of a symmetric matrix constrained to be PSD."""
        sl = self.variable(svec_dim(order))
        F = np.zeros((sl.stop - sl.start, self.n))
        F[:, sl] = np.eye(sl.stop - sl.start)
        self.blocks.append(ConeBlock("psd", F, np.zeros(F.shape[0]), order))
        return sl

    def zeros(self, rows: int | None = None) -> np.ndarray:
        return np.zeros(self.n) if rows is None else np.zeros((rows, self.n))

    def set_objective(self, coeffs) -> None:
        coeffs = np.asarray(coeffs, dtype=float)
        self.c = np.zeros(self.n)
        self.c[:coeffs.size] = coeffs

    def add_equality(self, a, b) -> None:
        self.eqs.append((np.atleast_2d(np.asarray(a, dtype=float)), np.atleast_1d(np.asarray(b, dtype=float))))

    def add_inequality(self, a, b) -> None:
        """a x <= b."""
        self.ineqs.append((np.atleast_2d(np.asarray(a, dtype=float)), np.atleast_1d(np.asarray(b, dtype=float))))

    def add_soc(self, F, g) -> None:
        """(F x + g)[0] >= ||(F x + g)[1:]||."""
        self.blocks.append(ConeBlock("soc", np.atleast_2d(np.asarray(F, dtype=float)),
                                     np.asarray(g, dtype=float).reshape(-1)))

    def add_lmi(self, terms, const) -> None:
        """sum_k x[idx_k] * M_k + const is PSD; ``terms`` is a list of (idx, M_k) with symmetric M_k."""
        const = np.asarray(const, dtype=float)
        F = np.zeros((svec_dim(const.shape[0]), self.n))
        for idx, mat in terms:
            F[:, idx] += svec(mat)
        self.blocks.append(ConeBlock("psd", F, svec(const), const.shape[0]))

    def _assembled(self):
        n = self.n
        A = np.vstack([_pad(a, n) for a, _ in self.eqs]) if self.eqs else np.zeros((0, n))
        b = np.concatenate([v for _, v in self.eqs]) if self.eqs else np.zeros(0)
        cones, Gs, hs = [], [], []
        if self.ineqs:
            ai = np.vstack([_pad(a, n) for a, _ in self.ineqs])
            bi = np.concatenate([v for _, v in self.ineqs])
            cones.append(NonnegCone(bi.size))
            Gs.append(ai)
            hs.append(bi)
        for blk in self.blocks:
            cones.append(blk.cone())
            Gs.append(-_pad(blk.F, n))
            hs.append(blk.g)
        G = np.vstack(Gs) if Gs else np.zeros((0, n))
        h = np.concatenate(hs) if hs else np.zeros(0)
        c = self.c if self.sense == "min" else -self.c
        return c, G, h, cones, A, b

    def solve(self, tol: float = 1e-8, max_iters: int = 100) -> ConicSolution:
        c, G, h, cones, A, b = self._assembled()
        try:
            res = solve_standard(c, G, h, cones, A, b, tol=tol, max_iters=max_iters)
        except NumericalFailure as exc:
            res = exc.iterate
            if res is None:
                raise
        n_ineq = sum(a.shape[0] for a, _ in self.ineqs)
        duals, off = [], n_ineq
        for blk in self.blocks:
            d = res.z[off:off + blk.g.size]
            duals.append(smat(d, blk.order) if blk.kind == "psd" else d)
            off += blk.g.size
        sol = ConicSolution(res.status, res.x, float(self.c @ res.x), res.y, res.z[:n_ineq], duals,
                            res.iterations, {"primal": res.primal_residual,
                                             "dual": res.dual_residual, "gap": res.gap})
        if res.status == FAILED:
            raise NumericalFailure(f"conic solve failed after {res.iterations} iterations", sol)
        return sol

    def dump_triplets(self, path) -> None:
        """Write c, A, b, G, h as 'name row col value' lines for offline inspection."""
        c, G, h, cones, A, b = self._assembled()
        with open(path, "w") as fh:
            fh.write("# cones " + " ".join(repr(k) for k in cones) + "\n")
            for name, mat in (("c", c[None, :]), ("A", A), ("b", b[:, None]), ("G", G), ("h", h[:, None])):
                for r, col in zip(*np.nonzero(mat)):
                    fh.write(f"{name} {r} {col} {mat[r, col]:.17g}\n")
