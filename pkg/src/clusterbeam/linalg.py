"""Dense complex linear-algebra kernel.

All matrices are plain numpy arrays.  ``vec`` uses column-major stacking so that
``vec(a @ b.T) == kron(b, a)`` for column vectors ``a`` and ``b``.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np


class LinAlgFailure(ArithmeticError):
    """Raised when a decomposition cannot deliver the requested accuracy."""


class SingularMatrixError(LinAlgFailure):
    pass


class EigDecomposition(NamedTuple):
    values: np.ndarray   # real, descending
    vectors: np.ndarray  # orthonormal columns


def kron(a, b) -> np.ndarray:
    return np.kron(np.atleast_2d(a), np.atleast_2d(b))


def vec(m) -> np.ndarray:
    return np.asarray(m).reshape(-1, order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    v = np.asarray(v)
    if v.size != rows * cols:
        raise ValueError(f"cannot reshape {v.size} entries into {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def hermitian_part(m) -> np.ndarray:
    m = np.asarray(m)
    h = 0.5 * (m + m.conj().T)
    if np.iscomplexobj(h):
        h[np.diag_indices_from(h)] = h.diagonal().real
    return h


def herm_eig(m) -> EigDecomposition:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order."""
    h = hermitian_part(m)
    if not np.all(np.isfinite(h)):
        raise LinAlgFailure("non-finite entries in Hermitian matrix")
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise LinAlgFailure(f"eigen iteration did not converge: {exc}") from exc
    return EigDecomposition(w[::-1].copy(), v[:, ::-1].copy())


def default_floor(m) -> float:
    return 1e-12 * (1.0 + abs(np.trace(m).real))


def inv_sqrt_psd(m, floor: float | None = None) -> np.ndarray:
    """Hermitian R with R @ m @ R == I for positive definite ``m``."""
    if floor is None:
        floor = default_floor(m)
    w, v = herm_eig(m)
    if w[-1] <= floor:
        raise SingularMatrixError(
            f"smallest eigenvalue {w[-1]:.3e} is not above floor {floor:.3e}")
    r = (v / np.sqrt(w)) @ v.conj().T
    return hermitian_part(r)


def sqrt_psd(m, rank_tol: float = 0.0) -> np.ndarray:
    """Factor ``S`` with ``S^H S == m`` (rows only for eigenvalues above ``rank_tol*max``)."""
    w, v = herm_eig(m)
    if w.size == 0 or w[0] <= 0:
        return np.zeros((0, np.shape(m)[0]), dtype=np.result_type(m, float))
    keep = w > rank_tol * w[0]
    return np.sqrt(w[keep])[:, None] * v[:, keep].conj().T


def real_nullspace_sample(a) -> np.ndarray:
    """Unit-norm ``x`` with ``a @ x ~ 0`` for an underdetermined real system."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    e, u = a.shape
    if u <= e:
        raise ValueError(f"system with {e} equations and {u} unknowns is not underdetermined")
    scale = np.linalg.norm(a)
    if scale == 0.0:
        x = np.zeros(u)
        x[0] = 1.0
        return x
    _, _, vt = np.linalg.svd(a)
    x = vt[-1]
    if np.linalg.norm(a @ x) > 1e-10 * scale:
        raise LinAlgFailure("no null vector meets the residual tolerance")
    return x / np.linalg.norm(x)


def hermitian_to_real_embedding(m) -> np.ndarray:
    """[[Re m, -Im m], [Im m, Re m]]."""
    m = np.asarray(m)
    return np.block([[m.real, -m.imag], [m.imag, m.real]])


def real_embedding_to_hermitian(z) -> np.ndarray:
    """Complex Hermitian matrix represented by an arbitrary real symmetric 2n x 2n matrix.

    Averages the two diagonal blocks and the two off-diagonal blocks, so that
    ``Tr(C Y) == Tr(embed(C) Z) / 2`` for every Hermitian ``C``.
    """
    z = np.asarray(z, dtype=float)
    n = z.shape[0] // 2
    re = 0.5 * (z[:n, :n] + z[n:, n:])
    im = 0.5 * (z[n:, :n] - z[:n, n:])
    return hermitian_part(re + 1j * im)


def numerical_rank(values, rel_tol: float = 1e-6) -> int:
    values = np.asarray(values)
    if values.size == 0 or values.max() <= 0:
        return 0
    return int(np.count_nonzero(values > rel_tol * values.max()))
