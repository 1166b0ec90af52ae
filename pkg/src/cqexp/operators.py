"""Hermitian spectral calculus on finite-dimensional Hilbert spaces.

All matrix functions act on the support only: for a PSD matrix
``A = sum_i a_i P_i`` we use ``A^p = sum_{a_i > cutoff} a_i^p P_i`` for every
real ``p``, including ``p = 0`` (support projector) and negative powers.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import InvalidOperator, InvalidParameter

__all__ = [
    "DensityOperator",
    "spectral_decompose",
    "psd_eig",
    "mat_power",
    "support_projector",
    "mat_log_on_support",
    "mat_exp",
    "mat_fn",
    "delta_regularize",
    "tensor",
    "is_orthogonal",
    "is_projector",
    "dagger",
]


def dagger(A):
    return np.conj(np.swapaxes(A, -1, -2))


def _as_matrix(A) -> np.ndarray:
    if isinstance(A, DensityOperator):
        return A.matrix
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise InvalidOperator(f"expected a non-empty square matrix, got shape {M.shape}")
    return M


def _hermitian_part(A, tol: Tolerances) -> np.ndarray:
    M = _as_matrix(A)
    scale = max(1.0, float(np.max(np.abs(M))))
    dev = float(np.max(np.abs(M - dagger(M))))
    if not np.isfinite(dev) or dev > tol.herm * scale:
        raise InvalidOperator(f"matrix is not Hermitian (deviation {dev:.3e})")
    return 0.5 * (M + dagger(M))


def spectral_decompose(A, tol: Tolerances | None = None):
    """Eigen-decomposition of a Hermitian matrix.

    Args:
        A: Hermitian matrix (array-like or :class:`DensityOperator`).
        tol: tolerance record.

    Returns:
        Tuple ``(w, V)`` with eigenvalues sorted in descending order and the
        matching orthonormal eigenvectors as columns of ``V``.

    Raises:
        InvalidOperator: if ``A`` is not Hermitian within ``tol.herm``.
    """
    if isinstance(A, DensityOperator):
        return A.eigvals.copy(), A.eigvecs.copy()
    tol = tol or DEFAULT
    H = _hermitian_part(A, tol)
    w, V = np.linalg.eigh(H)
    return w[::-1].copy(), V[:, ::-1].copy()


def psd_eig(A, tol: Tolerances | None = None):
    """Eigen-decomposition of a PSD matrix with small negative values clamped."""
    if isinstance(A, DensityOperator):
        return A.eigvals, A.eigvecs
    tol = tol or DEFAULT
    w, V = spectral_decompose(A, tol)
    scale = max(1.0, float(np.max(np.abs(w))))
    if w[-1] < -tol.psd * scale:
        raise InvalidOperator(f"matrix is not PSD (eigenvalue {w[-1]:.3e})")
    return np.clip(w, 0.0, None), V


def _support_mask(w, tol: Tolerances):
    top = float(w.max()) if w.size else 0.0
    if top <= 0.0:
        return np.zeros(w.shape, dtype=bool)
    return w > tol.rank_rel * top


def _assemble(vals, V):
    return (V * vals) @ dagger(V)


def mat_fn(A, f, tol: Tolerances | None = None, on_support: bool = True):
    """Apply a scalar function to a PSD matrix through its spectrum.

    With ``on_support`` (default) only eigenvalues above the rank cutoff are
    mapped; the kernel is sent to zero.
    """
    tol = tol or DEFAULT
    w, V = psd_eig(A, tol)
    if not on_support:
        return _assemble(f(w), V)
    mask = _support_mask(w, tol)
    return _assemble(np.asarray(f(w[mask]), dtype=float), V[:, mask])


def mat_power(A, p: float, tol: Tolerances | None = None) -> np.ndarray:
    """Support-restricted real power ``A^p`` of a PSD matrix.

    ``p = 0`` yields the support projector.  Negative powers invert on the
    support.

    Raises:
        InvalidOperator: on negative eigenvalues beyond ``tol.psd``.
    """
    p = float(p)
    if p == 0.0:
        return support_projector(A, tol)
    return mat_fn(A, lambda x: x ** p, tol)


def support_projector(A, tol: Tolerances | None = None) -> np.ndarray:
    """Projector ``A^0`` onto the support of a PSD matrix."""
    tol = tol or DEFAULT
    w, V = psd_eig(A, tol)
    mask = _support_mask(w, tol)
    Vs = V[:, mask]
    return Vs @ dagger(Vs)


def mat_log_on_support(A, tol: Tolerances | None = None) -> np.ndarray:
    """``sum_{a_i > cutoff} log(a_i) P_i``; the kernel is mapped to zero."""
    return mat_fn(A, np.log, tol)


def mat_exp(H, tol: Tolerances | None = None) -> np.ndarray:
    """Exponential of a Hermitian matrix via its spectral decomposition."""
    w, V = spectral_decompose(H, tol)
    return _assemble(np.exp(w), V)


def delta_regularize(rho, delta: float) -> np.ndarray:
    """Return ``rho + delta * I`` (not renormalised)."""
    if not delta > 0:
        raise InvalidParameter(f"delta must be positive, got {delta}")
    M = _as_matrix(rho)
    return M + delta * np.eye(M.shape[0])


def tensor(*ops) -> np.ndarray:
    """Kronecker product of any number of matrices, left to right."""
    if not ops:
        raise InvalidParameter("tensor needs at least one factor")
    mats = [_as_matrix(A) for A in ops]
    return reduce(np.kron, mats)


def is_orthogonal(A, B, tol: Tolerances | None = None) -> bool:
    """True when the supports of two PSD matrices are orthogonal."""
    tol = tol or DEFAULT
    PA = support_projector(A, tol)
    PB = support_projector(B, tol)
    return bool(np.linalg.norm(PA @ PB, 2) <= tol.orth)


def is_projector(P, tol: Tolerances | None = None) -> bool:
    tol = tol or DEFAULT
    M = _as_matrix(P)
    if np.max(np.abs(M - dagger(M))) > tol.herm:
        return False
    return bool(np.max(np.abs(M @ M - M)) <= tol.recon * max(1, M.shape[0]))


class DensityOperator:
    """Validated density operator with a cached spectral decomposition.

    Instances are read-only; the stored arrays have their write flag cleared so
    they can be shared freely across threads.

    Args:
        matrix: Hermitian PSD matrix with unit trace.
        tol: tolerance record used for validation and later support cutoffs.
        normalize: rescale to unit trace instead of checking it.

    Raises:
        InvalidOperator: if the matrix is not Hermitian, has an eigenvalue below
            ``-tol.psd``, or its trace differs from one by more than ``tol.tr``.
    """

    __slots__ = ("matrix", "eigvals", "eigvecs", "rank", "tol")

    def __init__(self, matrix, tol: Tolerances | None = None, normalize: bool = False):
        tol = tol or DEFAULT
        if isinstance(matrix, DensityOperator):
            matrix = matrix.matrix
        H = _hermitian_part(matrix, tol)
        tr = float(np.real(np.trace(H)))
        if normalize:
            if tr <= 0:
                raise InvalidOperator("cannot normalise a matrix with non-positive trace")
            H = H / tr
        elif abs(tr - 1.0) > tol.tr:
            raise InvalidOperator(f"trace {tr!r} differs from 1")
        w, V = psd_eig(H, tol)
        gram = dagger(V) @ V
        if np.max(np.abs(gram - np.eye(len(w)))) > max(tol.orth, 1e-12 * len(w)) * 10:
            raise InvalidOperator("eigenvectors failed orthonormality check")
        M = _assemble(w, V)
        for arr in (M, w, V):
            arr.setflags(write=False)
        self.matrix = M
        self.eigvals = w
        self.eigvecs = V
        self.rank = int(np.count_nonzero(_support_mask(w, tol)))
        self.tol = tol

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def support_mask(self) -> np.ndarray:
        return _support_mask(self.eigvals, self.tol)

    def support(self) -> np.ndarray:
        return support_projector(self, self.tol)

    def power(self, p: float) -> np.ndarray:
        return mat_power(self, p, self.tol)

    def log(self) -> np.ndarray:
        return mat_log_on_support(self, self.tol)

    def is_full_rank(self) -> bool:
        return self.rank == self.dim

    def __array__(self, dtype=None, copy=None):
        return np.array(self.matrix, dtype=dtype)

    def __repr__(self):
        return f"DensityOperator(dim={self.dim}, rank={self.rank})"

    @classmethod
    def from_diagonal(cls, probs, tol: Tolerances | None = None) -> "DensityOperator":
        return cls(np.diag(np.asarray(probs, dtype=float)).astype(complex), tol)

    @classmethod
    def pure(cls, vec) -> "DensityOperator":
        v = np.asarray(vec, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))


def as_density(rho, tol: Tolerances | None = None) -> DensityOperator:
    """Coerce array-likes to :class:`DensityOperator`, passing instances through."""
    if isinstance(rho, DensityOperator):
        return rho
    return DensityOperator(rho, tol)
