"""Dense spectral toolkit shared by every other module.

Eigenvalues are reported ascending, singular values descending.  All
routines take and return plain ``numpy`` arrays; complex dtype is used
throughout so that real inputs need no special casing downstream.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .errors import (
    DimensionMismatch,
    KOutOfRange,
    NonSquare,
    NotHermitian,
    NumericalFailure,
)

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-9


@dataclass(frozen=True)
class Interval:
    """Closed real interval ``[lo, hi]``."""

    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def __contains__(self, value: float) -> bool:
        return self.lo <= value <= self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray  # ascending, real
    eigenvectors: np.ndarray  # columns, unitary

    def __iter__(self):
        yield self.eigenvalues
        yield self.eigenvectors


def as_matrix(A: Any) -> np.ndarray:
    """Coerce to a finite 2-d complex array."""
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NumericalFailure("matrix has non-finite entries")
    return M


def _opnorm(A: np.ndarray) -> float:
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def hermitian_part(A: Any, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``(A + A^dag)/2`` after checking ``A`` is Hermitian to ``tol`` (relative)."""
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise NonSquare(f"matrix is {A.shape[0]}x{A.shape[1]}")
    asym = np.linalg.norm(A - A.conj().T, 2) if A.size else 0.0
    if asym > tol * max(1.0, _opnorm(A)):
        raise NotHermitian(f"||A - A^dag|| = {asym:.3e} exceeds tolerance")
    return (A + A.conj().T) / 2


def hermitian_eig(A: Any, tol: float = HERMITIAN_TOL) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    H = hermitian_part(A, tol)
    try:
        w, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalFailure(str(exc)) from exc
    return SpectralDecomposition(w, V)


def eigvalsh(A: Any, tol: float = HERMITIAN_TOL) -> np.ndarray:
    return np.linalg.eigvalsh(hermitian_part(A, tol))


def singular_values(X: Any) -> np.ndarray:
    """Singular values in descending order."""
    return np.linalg.svd(as_matrix(X), compute_uv=False)


def k_numerical_range(A: Any, k: int) -> Interval:
    """k-numerical range of a Hermitian matrix.

    For Hermitian ``A`` the set of sums ``sum_j <x_j|A|x_j>`` over orthonormal
    k-frames is the interval between the sum of the k smallest and the sum of
    the k largest eigenvalues.
    """
    w = eigvalsh(A)
    n = w.size
    if not 1 <= k <= n:
        raise KOutOfRange(f"k={k} outside 1..{n}")
    return Interval(float(np.sum(w[:k])), float(np.sum(w[n - k:])))


def norm_2k(X: Any, k: int) -> float:
    """(2,k)-spectral norm: root of the sum of the k largest squared singular values."""
    s = singular_values(X)
    if not 1 <= k <= s.size:
        raise KOutOfRange(f"k={k} outside 1..{s.size}")
    return float(np.sqrt(np.sum(s[:k] ** 2)))


def default_rank_tol(A: np.ndarray) -> float:
    return 1e-12 * max(A.shape)


def pinv(A: Any, rank_tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse.

    Singular values at or below ``rank_tol * sigma_max`` are treated as zero;
    the default cutoff is ``1e-12 * max(rows, cols)``.
    """
    A = as_matrix(A)
    if rank_tol is None:
        rank_tol = default_rank_tol(A)
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    try:
        U, s, Vh = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalFailure(str(exc)) from exc
    if s.size == 0 or s[0] == 0:
        return np.zeros(A.shape[::-1], dtype=complex)
    keep = s > rank_tol * s[0]
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (Vh.conj().T * inv) @ U.conj().T


def partial_transpose_second(M: Any, dim1: int, dim2: int) -> np.ndarray:
    """Transpose the second tensor factor of a ``dim1*dim2`` square matrix.

    Block ``(i, j)`` of size ``dim2`` is replaced by its transpose.
    """
    M = as_matrix(M)
    if M.shape != (dim1 * dim2, dim1 * dim2):
        raise DimensionMismatch(f"shape {M.shape} is not ({dim1}*{dim2})^2")
    T = M.reshape(dim1, dim2, dim1, dim2).transpose(0, 3, 2, 1)
    return T.reshape(dim1 * dim2, dim1 * dim2)


def psd_check(A: Any, tol: float = PSD_TOL) -> tuple[bool, float]:
    """Tolerance-aware positive semidefiniteness.

    Returns ``(ok, lambda_min)`` where ``ok`` holds iff
    ``lambda_min >= -tol * max(1, ||A||)``.
    """
    H = hermitian_part(A)
    w = np.linalg.eigvalsh(H)
    lam = float(w[0]) if w.size else 0.0
    scale = max(1.0, float(np.max(np.abs(w))) if w.size else 0.0)
    return lam >= -tol * scale, lam


def in_range(A: Any, v: Any, tol: float = 1e-9, rank_tol: float | None = None) -> bool:
    """Whether ``v`` lies in the column space of square ``A``."""
    A = as_matrix(A)
    v = np.asarray(v, dtype=complex).reshape(-1)
    if A.shape[0] != A.shape[1]:
        raise NonSquare(f"matrix is {A.shape[0]}x{A.shape[1]}")
    if v.size != A.shape[0]:
        raise DimensionMismatch(f"vector of length {v.size} vs matrix {A.shape}")
    nv = np.linalg.norm(v)
    if nv == 0:
        return True
    r = A @ (pinv(A, rank_tol) @ v) - v
    return bool(np.linalg.norm(r) <= tol * nv)


def is_unitary(U: Any, tol: float = 1e-10) -> bool:
    U = as_matrix(U)
    return U.shape[0] == U.shape[1] and np.allclose(U.conj().T @ U, np.eye(U.shape[0]), atol=tol)


# -- JSON encoding -----------------------------------------------------------

def matrix_to_json(A: Any) -> dict:
    """``{"rows", "cols", "re", "im"}`` row-major; 1-d input becomes a column."""
    M = np.asarray(A, dtype=complex)
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    flat = M.reshape(-1)
    return {
        "rows": int(M.shape[0]),
        "cols": int(M.shape[1]),
        "re": [float(x) for x in flat.real],
        "im": [float(x) for x in flat.imag],
    }


def matrix_from_json(obj: Mapping) -> np.ndarray:
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", [0.0] * len(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise DimensionMismatch(f"malformed matrix JSON: {exc}") from exc
    if re.size != rows * cols or im.size != rows * cols:
        raise DimensionMismatch(f"matrix JSON has {re.size} entries for {rows}x{cols}")
    M = (re + 1j * im).reshape(rows, cols)
    if not np.all(np.isfinite(M)):
        raise NumericalFailure("matrix JSON has non-finite entries")
    return M
