"""Decomposability certificates: Choi splits into a PSD part and a PPT part."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import linalg
from .dtype import PermutationSpec, as_permutation, make_phi
from .errors import DimensionMismatch, NotInvolution
from .kcriteria import Status, Verdict
from .maps import DTypeMap, MapRep, choi, dims

SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ChoiSplit:
    c1: np.ndarray
    c2: np.ndarray
    n: int

    def __post_init__(self):
        c1 = linalg.hermitian_part(self.c1)
        c2 = linalg.hermitian_part(self.c2)
        if c1.shape != c2.shape:
            raise DimensionMismatch(f"split parts have shapes {c1.shape} and {c2.shape}")
        object.__setattr__(self, "c1", c1)
        object.__setattr__(self, "c2", c2)

    def to_json(self) -> dict:
        return {"n": self.n, "c1": linalg.matrix_to_json(self.c1), "c2": linalg.matrix_to_json(self.c2)}

    @classmethod
    def from_json(cls, obj: Mapping) -> "ChoiSplit":
        c1 = linalg.matrix_from_json(obj["c1"])
        n = int(obj.get("n", round(np.sqrt(c1.shape[0]))))
        return cls(c1, linalg.matrix_from_json(obj["c2"]), n)


def verify_split(L: MapRep, split: ChoiSplit, tol: float = linalg.PSD_TOL) -> Verdict:
    """Certify decomposability when ``C1 >= 0``, ``C2^{T2} >= 0`` and ``C1 + C2 = C(L)``."""
    n, m = dims(L)
    C = choi(L)
    if split.c1.shape != C.shape:
        raise DimensionMismatch(f"split is {split.c1.shape}, Choi matrix is {C.shape}")
    sum_dev = float(np.max(np.abs(split.c1 + split.c2 - C)))
    ok1, lam1 = linalg.psd_check(split.c1, tol)
    ok2, lam2 = linalg.psd_check(linalg.partial_transpose_second(split.c2, n, m), tol)
    sum_ok = sum_dev <= max(SUM_TOL, tol) * max(1.0, float(np.max(np.abs(C))))
    details = {"lambda_min_c1": lam1, "lambda_min_c2_pt": lam2, "sum_deviation": sum_dev}
    status = Status.CERTIFIED if ok1 and ok2 and sum_ok else Status.INCONCLUSIVE
    return Verdict(status, None, min(lam1, lam2), "choi-split", claim="decomposable", details=details)


def _unit(n: int, i: int, j: int) -> np.ndarray:
    E = np.zeros((n, n))
    E[i, j] = 1.0
    return E


def involution_split(n: int, pi) -> ChoiSplit:
    """Split of the Choi matrix of ``make_phi(n, pi, 1)`` for an involution ``pi``.

    ``C1`` collects the diagonal-dominant part on the ``E_ii (x) E_jj`` span
    and ``C2`` holds one PPT block per transposed pair.
    """
    pi = as_permutation(pi)
    if pi.n != n:
        raise DimensionMismatch(f"permutation on {pi.n} points, n={n}")
    if not pi.is_involution():
        raise NotInvolution(f"{list(pi.image)} does not square to the identity")
    p = [x - 1 for x in pi.image]
    fixed = {i for i in range(n) if p[i] == i}
    N = n * n
    C1 = np.zeros((N, N))
    C2 = np.zeros((N, N))
    for i in range(n):
        C1 += (n - 1 if i in fixed else n - 2) * np.kron(_unit(n, i, i), _unit(n, i, i))
        for j in range(n):
            if i != j and p[i] != j:
                C1 -= np.kron(_unit(n, i, j), _unit(n, i, j))
        if i not in fixed:
            C2 += np.kron(_unit(n, p[i], p[i]), _unit(n, i, i))
            C2 -= np.kron(_unit(n, i, p[i]), _unit(n, i, p[i]))
    return ChoiSplit(C1, C2, n)


def phi_one(n: int, pi: PermutationSpec) -> DTypeMap:
    return DTypeMap(make_phi(n, pi, 1.0))


def involutions(n: int):
    """Every involution of ``{1..n}``, built from matchings."""

    def rec(rest):
        if not rest:
            yield {}
            return
        a, tail = rest[0], rest[1:]
        for sub in rec(tail):
            yield {a: a, **sub}
        for idx, b in enumerate(tail):
            for sub in rec(tail[:idx] + tail[idx + 1:]):
                yield {a: b, b: a, **sub}

    for mapping in rec(list(range(1, n + 1))):
        yield PermutationSpec(tuple(mapping[i] for i in range(1, n + 1)))
