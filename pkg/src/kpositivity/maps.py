"""Linear maps ``M_n -> M_m`` in Choi, Kraus-difference and D-type form.

Choi convention: ``C(L) = sum_ij E_ij (x) L(E_ij)``, the first tensor factor
indexing ``m x m`` blocks.  Row ``i*m + a`` of the Choi matrix therefore pairs
input basis vector ``i`` with output basis vector ``a``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, NotHermitian, WrongRepresentation
from .linalg import HERMITIAN_TOL, as_matrix, matrix_from_json, matrix_to_json


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ChoiMap:
    choi: np.ndarray
    n: int
    m: int

    def __post_init__(self):
        C = as_matrix(self.choi)
        size = self.n * self.m
        if C.shape != (size, size):
            raise DimensionMismatch(f"Choi matrix {C.shape} does not match n*m = {size}")
        if np.linalg.norm(C - C.conj().T) > HERMITIAN_TOL * max(1.0, np.linalg.norm(C)):
            raise NotHermitian("Choi matrix must be Hermitian (Hermiticity-preserving map)")
        object.__setattr__(self, "choi", _frozen((C + C.conj().T) / 2))


@dataclass(frozen=True, eq=False)
class KrausDifference:
    """``X -> sum_r C_r X C_r^dag - sum_s D_s X D_s^dag``."""

    plus: tuple
    minus: tuple = ()

    def __post_init__(self):
        plus = tuple(_frozen(as_matrix(C)) for C in self.plus)
        minus = tuple(_frozen(as_matrix(D)) for D in self.minus)
        shapes = {A.shape for A in plus + minus}
        if len(shapes) > 1:
            raise DimensionMismatch(f"Kraus operators disagree in shape: {sorted(shapes)}")
        if not shapes:
            raise DimensionMismatch("at least one Kraus operator is required")
        object.__setattr__(self, "plus", plus)
        object.__setattr__(self, "minus", minus)

    @property
    def m(self) -> int:
        return (self.plus + self.minus)[0].shape[0]

    @property
    def n(self) -> int:
        return (self.plus + self.minus)[0].shape[1]


@dataclass(frozen=True, eq=False)
class DTypeMap:
    """``A -> diag(sum_k a_kk d_k1, ..., sum_k a_kk d_kn) - A`` for nonnegative ``D``."""

    D: np.ndarray

    def __post_init__(self):
        D = np.array(self.D, dtype=float, copy=True)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise DimensionMismatch(f"D must be square, got shape {D.shape}")
        if not np.all(np.isfinite(D)) or np.any(D < 0):
            raise ValueError("D must have finite nonnegative entries")
        D.setflags(write=False)
        object.__setattr__(self, "D", D)

    @property
    def n(self) -> int:
        return self.D.shape[0]

    @property
    def m(self) -> int:
        return self.D.shape[0]


MapRep = Union[ChoiMap, KrausDifference, DTypeMap]


class OrthonormalFrame:
    """k orthonormal vectors in ``C^n``, stored as the columns of an ``n x k`` matrix."""

    def __init__(self, vectors: Any, tol: float = 1e-10):
        X = np.asarray(vectors, dtype=complex)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        gram = X.conj().T @ X
        dev = np.max(np.abs(gram - np.eye(X.shape[1]))) if X.size else 0.0
        if dev > tol:
            raise ValueError(f"frame is not orthonormal (max Gram deviation {dev:.2e})")
        self.columns = X

    @classmethod
    def from_list(cls, vectors: Sequence, tol: float = 1e-10) -> "OrthonormalFrame":
        return cls(np.column_stack([np.asarray(v, dtype=complex) for v in vectors]), tol)

    @property
    def n(self) -> int:
        return self.columns.shape[0]

    @property
    def k(self) -> int:
        return self.columns.shape[1]

    def __len__(self):
        return self.k

    def __iter__(self):
        return iter(self.columns.T)


def dims(L: MapRep) -> tuple[int, int]:
    """``(n, m)``: input and output dimension."""
    return L.n, L.m


def apply(L: MapRep, X: Any) -> np.ndarray:
    X = as_matrix(X)
    n, m = dims(L)
    if X.shape != (n, n):
        raise DimensionMismatch(f"input {X.shape} but map acts on {n}x{n}")
    if isinstance(L, DTypeMap):
        return np.diag(np.diag(X) @ L.D) - X
    if isinstance(L, KrausDifference):
        out = np.zeros((m, m), dtype=complex)
        for C in L.plus:
            out += C @ X @ C.conj().T
        for D in L.minus:
            out -= D @ X @ D.conj().T
        return out
    if isinstance(L, ChoiMap):
        C4 = L.choi.reshape(n, m, n, m)
        return np.einsum("ij,iajb->ab", X, C4)
    raise WrongRepresentation(f"unsupported map type {type(L).__name__}")


def choi(L: MapRep) -> np.ndarray:
    """Choi matrix ``sum_ij E_ij (x) L(E_ij)`` of size ``n*m``."""
    if isinstance(L, ChoiMap):
        return np.array(L.choi)
    n, m = dims(L)
    if isinstance(L, DTypeMap):
        C = np.zeros((n * n, n * n), dtype=complex)
        for i in range(n):
            C[i * n:(i + 1) * n, i * n:(i + 1) * n] = np.diag(L.D[i])
        omega = np.eye(n).reshape(-1)  # sum_i e_i (x) e_i
        return C - np.outer(omega, omega)
    if isinstance(L, KrausDifference):
        C = np.zeros((n * m, n * m), dtype=complex)
        for sign, ops in ((1.0, L.plus), (-1.0, L.minus)):
            for K in ops:
                v = K.T.reshape(-1)
                C += sign * np.outer(v, v.conj())
        return C
    raise WrongRepresentation(f"unsupported map type {type(L).__name__}")


def from_choi(C: Any, n: int, m: int) -> ChoiMap:
    return ChoiMap(C, n, m)


def ampliate(L: MapRep, k: int, X: Any) -> np.ndarray:
    """``(I_k (x) L)(X)`` for ``X`` partitioned into ``k x k`` blocks of size ``n``."""
    X = as_matrix(X)
    n, m = dims(L)
    if X.shape != (k * n, k * n):
        raise DimensionMismatch(f"input {X.shape} is not ({k}*{n})^2")
    out = np.zeros((k * m, k * m), dtype=complex)
    for i in range(k):
        for j in range(k):
            out[i * m:(i + 1) * m, j * m:(j + 1) * m] = apply(L, X[i * n:(i + 1) * n, j * n:(j + 1) * n])
    return out


def block_matrix_lx(L: MapRep, frame: OrthonormalFrame | Any) -> np.ndarray:
    """Block matrix ``(L(|x_i><x_j|))_{ij}`` over the frame vectors."""
    if not isinstance(frame, OrthonormalFrame):
        frame = OrthonormalFrame(frame)
    n, m = dims(L)
    if frame.n != n:
        raise DimensionMismatch(f"frame vectors live in C^{frame.n}, map input is C^{n}")
    X = frame.columns
    k = frame.k
    out = np.zeros((k * m, k * m), dtype=complex)
    for i in range(k):
        for j in range(k):
            out[i * m:(i + 1) * m, j * m:(j + 1) * m] = apply(L, np.outer(X[:, i], X[:, j].conj()))
    return out


def to_kraus(L: MapRep, tol: float = 0.0) -> KrausDifference:
    """Kraus-difference form read off the Choi eigendecomposition.

    Eigenvalues with ``|lambda| <= tol`` are dropped (at least one operator is
    always kept so the dimensions survive).
    """
    if isinstance(L, KrausDifference):
        return L
    n, m = dims(L)
    w, V = np.linalg.eigh(choi(L))
    plus, minus = [], []
    for lam, v in zip(w, V.T):
        if abs(lam) <= tol:
            continue
        K = np.sqrt(abs(lam)) * v.reshape(n, m).T
        (plus if lam > 0 else minus).append(K)
    if not plus and not minus:
        plus.append(np.zeros((m, n)))
    return KrausDifference(plus, minus)


# -- constructors --------------------------------------------------------------

def identity_map(n: int) -> KrausDifference:
    return KrausDifference([np.eye(n)])


def transpose_map(n: int) -> ChoiMap:
    """``X -> X^T``; its Choi matrix is the swap operator."""
    C = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            C[i * n + j, j * n + i] = 1.0
    return ChoiMap(C, n, n)


def l_gamma(n: int, gamma: float) -> DTypeMap:
    """``A -> gamma * tr(A) * I - A`` as the D-type map with constant ``D``."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return DTypeMap(np.full((n, n), float(gamma)))


# -- JSON ------------------------------------------------------------------------

def map_to_json(L: MapRep) -> dict:
    if isinstance(L, ChoiMap):
        return {"kind": "choi", "n": L.n, "m": L.m, "choi": matrix_to_json(L.choi)}
    if isinstance(L, KrausDifference):
        return {
            "kind": "kraus",
            "plus": [matrix_to_json(C) for C in L.plus],
            "minus": [matrix_to_json(D) for D in L.minus],
        }
    if isinstance(L, DTypeMap):
        return {"kind": "dtype", "n": L.n, "d": L.D.tolist()}
    raise WrongRepresentation(f"unsupported map type {type(L).__name__}")


def map_from_json(obj: Mapping) -> MapRep:
    kind = obj.get("kind")
    if kind == "choi":
        return ChoiMap(matrix_from_json(obj["choi"]), int(obj["n"]), int(obj["m"]))
    if kind == "kraus":
        return KrausDifference(
            [matrix_from_json(c) for c in obj.get("plus", [])],
            [matrix_from_json(d) for d in obj.get("minus", [])],
        )
    if kind == "dtype":
        D = np.asarray(obj["d"], dtype=float)
        if "n" in obj and D.shape != (int(obj["n"]), int(obj["n"])):
            raise DimensionMismatch(f"D has shape {D.shape}, declared n={obj['n']}")
        return DTypeMap(D)
    raise WrongRepresentation(f"unknown map kind {kind!r}")
