"""Seeded search over Schmidt-rank-k vectors and normalized ``k x n`` matrices.

The engine only ever produces evidence: a low quadratic-form value with the
vector that achieves it.  Whether that value refutes anything is decided by
the caller.  Restarts draw from independent child generators spawned from
``SearchBudget.seed``, and results are merged by minimum value with ties
broken on restart index, so output does not depend on worker count.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping, Sequence, TypeVar

import numpy as np

from .errors import KOutOfRange

T = TypeVar("T")


@dataclass(frozen=True)
class SearchBudget:
    restarts: int = 64
    max_iters: int = 500
    seed: int = 0
    tol: float = 1e-8

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: Mapping) -> "SearchBudget":
        known = {k: obj[k] for k in ("restarts", "max_iters", "seed", "tol") if k in obj}
        return cls(**known)

    def generators(self) -> list[np.random.Generator]:
        children = np.random.SeedSequence(self.seed).spawn(self.restarts)
        return [np.random.default_rng(c) for c in children]


def run_restarts(
    task: Callable[[int, np.random.Generator], T],
    budget: SearchBudget,
    n_jobs: int = 1,
) -> list[T]:
    """Run ``task(index, rng)`` once per restart, results in restart order."""
    gens = budget.generators()
    if n_jobs <= 1:
        return [task(i, g) for i, g in enumerate(gens)]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(task, range(len(gens)), gens))


def argmin_merge(values: Sequence[float]) -> int:
    """Index of the minimum; lowest index wins ties."""
    best = 0
    for i, v in enumerate(values):
        if v < values[best]:
            best = i
    return best


# -- Schmidt vectors -------------------------------------------------------------

def schmidt_coefficients(x: np.ndarray, n: int, m: int) -> np.ndarray:
    return np.linalg.svd(np.asarray(x, dtype=complex).reshape(n, m), compute_uv=False)


def schmidt_rank(x: np.ndarray, n: int, m: int, tol: float = 1e-10) -> int:
    s = schmidt_coefficients(x, n, m)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def random_schmidt_vector(n: int, m: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Unit vector ``sum_{p<=k} y_p (x) z_p`` with complex Gaussian factors."""
    Y = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    Z = rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))
    x = (Y @ Z.T).reshape(-1)
    return x / np.linalg.norm(x)


def frame_pairing_vector(frame: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Schmidt vector whose Choi form equals ``<w| L_X |w>``.

    ``frame`` is ``n x k`` (columns ``x_p``) and ``w`` stacks ``k`` output
    vectors ``w_p``.  The returned ``sum_p conj(x_p) (x) w_p`` satisfies
    ``<x|C(L)|x> = <w|(L(|x_i><x_j|))_{ij}|w>``.
    """
    frame = np.asarray(frame, dtype=complex)
    k = frame.shape[1]
    W = np.asarray(w, dtype=complex).reshape(k, -1)
    return (frame.conj() @ W).reshape(-1)


@dataclass
class SchmidtResult:
    value: float
    vector: np.ndarray
    history: list = field(default_factory=list)
    iterations: int = 0
    restart: int = 0


def _min_in_range(C: np.ndarray, B: np.ndarray) -> tuple[float, np.ndarray]:
    H = B.conj().T @ C @ B
    H = (H + H.conj().T) / 2
    w, V = np.linalg.eigh(H)
    x = B @ V[:, 0]
    return float(w[0]), x / np.linalg.norm(x)


def refine_schmidt(
    C: np.ndarray,
    n: int,
    m: int,
    k: int,
    start: np.ndarray,
    max_iters: int = 500,
    tol: float = 1e-10,
) -> SchmidtResult:
    """Alternating descent of ``<x|C|x>`` over unit vectors of Schmidt rank <= k.

    Each half-step freezes one side's k-dimensional Schmidt subspace and
    solves the compressed eigenproblem exactly; the current iterate always lies
    in the compressed space, so the recorded values are nonincreasing.
    """
    if not 1 <= k <= min(n, m):
        raise KOutOfRange(f"k={k} outside 1..{min(n, m)}")
    C = np.asarray(C, dtype=complex)
    if k == min(n, m):
        w, V = np.linalg.eigh((C + C.conj().T) / 2)
        return SchmidtResult(float(w[0]), V[:, 0], [float(w[0])], 0)

    x = np.asarray(start, dtype=complex).reshape(-1)
    x = x / np.linalg.norm(x)
    if schmidt_rank(x, n, m, 1e-8) > k:
        raise ValueError(f"start vector has Schmidt rank above {k}")
    value = float(np.real(x.conj() @ C @ x))
    history = [value]
    In, Im = np.eye(n), np.eye(m)
    it = 0
    for it in range(1, max_iters + 1):
        prev = value
        _, _, Vh = np.linalg.svd(x.reshape(n, m), full_matrices=False)
        value, x = _min_in_range(C, np.kron(In, Vh[:k].T))
        history.append(value)
        U, _, _ = np.linalg.svd(x.reshape(n, m), full_matrices=False)
        value, x = _min_in_range(C, np.kron(U[:, :k], Im))
        history.append(value)
        if prev - value < tol:
            break
    return SchmidtResult(value, x, history, it)


# -- normalized U matrices ---------------------------------------------------------

def sample_u(k: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Complex Gaussian ``k x n`` matrix scaled to ``tr(U^dag U) = 1``."""
    G = rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))
    return G / np.linalg.norm(G)
