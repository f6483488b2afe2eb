"""D-type maps ``A -> diag(diag(A) @ D) - A``: positivity functionals and families.

For a row vector ``u`` the positivity functional is
``sum_j |u_j|^2 / f_j(u)`` with ``f_j(u) = sum_i d_ij |u_i|^2``; the map is
positive iff it never exceeds 1.  Its k-row generalization uses the
pseudoinverses of ``U diag(d_1j..d_nj) U^dag``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize

from . import linalg
from .errors import (
    BadNormalization,
    BadWeights,
    DimensionMismatch,
    IdentityPermutation,
    KOutOfRange,
    NegativeT,
    NotAPermutation,
    NotDoublyStochasticScaled,
    ZeroDiagonal,
    ZeroEntry,
)
from .falsify import SearchBudget, sample_u
from .kcriteria import Status, Verdict, Witness, refutation_scale
from .maps import DTypeMap

NORMALIZATION_TOL = 1e-10
EPS_GRID = tuple(10.0 ** -p for p in np.arange(0.5, 12.5, 0.5))


# -- permutations -------------------------------------------------------------------

@dataclass(frozen=True)
class PermutationSpec:
    """Permutation of ``{1..n}`` given by its image list (1-based)."""

    image: tuple

    def __post_init__(self):
        img = tuple(int(x) for x in self.image)
        if sorted(img) != list(range(1, len(img) + 1)):
            raise NotAPermutation(f"{list(self.image)} is not a permutation of 1..{len(img)}")
        object.__setattr__(self, "image", img)

    @classmethod
    def from_cycles(cls, n: int, cycles: Sequence[Sequence[int]]) -> "PermutationSpec":
        img = list(range(1, n + 1))
        seen = set()
        for cyc in cycles:
            for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
                if a in seen or not 1 <= a <= n:
                    raise NotAPermutation(f"bad cycle entry {a}")
                seen.add(a)
                img[a - 1] = b
        return cls(tuple(img))

    @property
    def n(self) -> int:
        return len(self.image)

    def __call__(self, i: int) -> int:
        return self.image[i - 1]

    @property
    def cycles(self) -> list[tuple[int, ...]]:
        """Disjoint cycles, each starting at its smallest element, in order of that element."""
        seen, out = set(), []
        for start in range(1, self.n + 1):
            if start in seen:
                continue
            cyc, i = [], start
            while i not in seen:
                seen.add(i)
                cyc.append(i)
                i = self(i)
            out.append(tuple(cyc))
        return out

    @property
    def ell(self) -> int:
        return max(len(c) for c in self.cycles)

    @property
    def fixed_points(self) -> list[int]:
        return [i for i in range(1, self.n + 1) if self(i) == i]

    def is_involution(self) -> bool:
        return all(self(self(i)) == i for i in range(1, self.n + 1))

    def matrix(self) -> np.ndarray:
        """``P`` with ``P[pi(j), j] = 1`` (0-based indices)."""
        P = np.zeros((self.n, self.n))
        for j, pj in enumerate(self.image):
            P[pj - 1, j] = 1.0
        return P

    def to_json(self) -> dict:
        return {"image": list(self.image)}

    @classmethod
    def from_json(cls, obj: Mapping) -> "PermutationSpec":
        return cls(tuple(obj["image"]))


def as_permutation(pi) -> PermutationSpec:
    if isinstance(pi, PermutationSpec):
        return pi
    if isinstance(pi, Mapping):
        return PermutationSpec.from_json(pi)
    return PermutationSpec(tuple(pi))


# -- constructors -------------------------------------------------------------------

def make_phi(n: int, pi, t: float) -> np.ndarray:
    """``D = (n - t) I + t P`` with ``D[pi(j), j] = t``.

    With this orientation ``f_j(u) = (n - t)|u_j|^2 + t|u_{pi(j)}|^2``.
    """
    pi = as_permutation(pi)
    if pi.n != n:
        raise DimensionMismatch(f"permutation on {pi.n} points, n={n}")
    if t < 0:
        raise NegativeT(f"t={t} must be nonnegative")
    return (n - t) * np.eye(n) + t * pi.matrix()


def phi_threshold(n: int, pi) -> float:
    """Largest ``t`` keeping ``make_phi(n, pi, t)`` positive: ``n`` over the longest cycle."""
    pi = as_permutation(pi)
    if pi.n != n:
        raise DimensionMismatch(f"permutation on {pi.n} points, n={n}")
    if pi.ell == 1:
        raise IdentityPermutation("the identity permutation has no threshold")
    return n / pi.ell


def make_circulant(s: Sequence[float], t: float, n: int) -> np.ndarray:
    """``(n - t) I + t S`` with circulant ``S[i, j] = s[(j - i) mod n]``."""
    s = np.asarray(s, dtype=float).reshape(-1)
    if s.size != n:
        raise BadWeights(f"{s.size} weights for n={n}")
    if np.any(s < 0) or abs(s.sum() - 1.0) > 1e-12:
        raise BadWeights("weights must be nonnegative and sum to 1")
    if not 0 <= t <= 1:
        raise BadWeights(f"t={t} outside [0, 1]")
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    return (n - t) * np.eye(n) + t * s[idx]


def _as_d(D) -> np.ndarray:
    if isinstance(D, DTypeMap):
        return np.asarray(D.D)
    return np.asarray(DTypeMap(D).D)


def detect_phi(D, tol: float = 1e-12):
    """``(pi, t)`` if ``D`` has the form ``(n - t) I + t P``, else ``None``."""
    D = _as_d(D)
    n = D.shape[0]
    off = D - np.diag(np.diag(D))
    image = []
    t_vals = set()
    for j in range(n):
        nz = np.where(off[:, j] > tol)[0]
        if nz.size > 1:
            return None
        image.append(int(nz[0]) + 1 if nz.size else j + 1)
        if nz.size:
            t_vals.add(float(off[nz[0], j]))
    if not t_vals or len(image) != len(set(image)):
        return None
    t = next(iter(t_vals))
    if any(abs(v - t) > tol * max(1, t) for v in t_vals):
        return None
    pi = PermutationSpec(tuple(image))
    if np.max(np.abs(make_phi(n, pi, t) - D)) > tol * max(1.0, n):
        return None
    return pi, t


# -- positivity functionals ---------------------------------------------------------

def cor52_value(D, u) -> float:
    """``sum_j |u_j|^2 / f_j(u)``; homogeneous of degree 0 in ``u``."""
    D = _as_d(D)
    u = np.asarray(u, dtype=complex).reshape(-1)
    if u.size != D.shape[0]:
        raise DimensionMismatch(f"u has {u.size} entries, D is {D.shape}")
    if np.any(u == 0):
        raise ZeroEntry("u must have no zero entries")
    if np.any(np.diag(D) <= 0):
        raise ZeroDiagonal("D has a zero diagonal entry; the map is not positive")
    w = np.abs(u) ** 2
    return float(np.sum(w / (w @ D)))


def _cor52_batch(D: np.ndarray, W: np.ndarray) -> np.ndarray:
    return np.sum(W / (W @ D), axis=1)


def prop51_condition(D, k: int, U, rank_tol: float | None = None) -> tuple[float, bool]:
    """``sum_j <u_j| (U diag(d_1j..d_nj) U^dag)^+ |u_j>`` and the range condition.

    ``U`` is ``k x n`` with ``tr(U^dag U) = 1``; a value above 1, or a column
    outside the range of its block, shows the map is not k-positive.
    """
    D = _as_d(D)
    n = D.shape[0]
    if not 1 <= k <= n:
        raise KOutOfRange(f"k={k} outside 1..{n}")
    U = np.asarray(U, dtype=complex)
    if U.ndim == 1:
        U = U.reshape(1, -1)
    if U.shape != (k, n):
        raise DimensionMismatch(f"U has shape {U.shape}, expected ({k}, {n})")
    nrm = float(np.linalg.norm(U) ** 2)
    if nrm == 0 or not np.isfinite(nrm):
        raise BadNormalization("U must be nonzero and finite")
    if abs(nrm - 1) > NORMALIZATION_TOL:
        U = U / np.sqrt(nrm)
    value, feasible = 0.0, True
    for j in range(n):
        Dj = (U * D[:, j]) @ U.conj().T
        uj = U[:, j]
        value += float(np.real(uj.conj() @ linalg.pinv(Dj, rank_tol) @ uj))
        feasible = feasible and linalg.in_range(Dj, uj, rank_tol=rank_tol)
    return value, feasible


# -- search -------------------------------------------------------------------------

def _seed_permutation(D: np.ndarray) -> PermutationSpec:
    """The permutation of ``D``'s Phi form, else a max-weight off-diagonal assignment."""
    hit = detect_phi(D)
    if hit is not None:
        return hit[0]
    n = D.shape[0]
    W = D.copy()
    np.fill_diagonal(W, -1e6 * (1 + D.max()))
    rows, cols = linear_sum_assignment(W, maximize=True)
    image = [0] * n
    for r, c in zip(rows, cols):
        image[c] = r + 1
    return PermutationSpec(tuple(image))


def cycle_seed(n: int, cycle: Sequence[int], eps: float) -> np.ndarray:
    """Weights ``|u|^2`` equal to ``eps^m`` along the cycle (in cycle order), 1 elsewhere."""
    w = np.ones(n)
    for m, c in enumerate(cycle, start=1):
        w[c - 1] = eps ** m
    return w


def structured_weights(D: np.ndarray) -> np.ndarray:
    """Geometric seeds along each cycle of the dominant permutation of ``D``."""
    n = D.shape[0]
    pi = _seed_permutation(D)
    seeds = [cycle_seed(n, cyc, e) for cyc in pi.cycles if len(cyc) > 1 for e in EPS_GRID]
    return np.array(seeds) if seeds else np.ones((1, n))


def proof_u(D) -> np.ndarray:
    """``2 x n`` matrix ``[e_i; 1 - e_i] / sqrt(n)`` for ``i`` the smallest diagonal entry."""
    D = _as_d(D)
    n = D.shape[0]
    i = int(np.argmin(np.diag(D)))
    U = np.zeros((2, n))
    U[0, i] = 1.0
    U[1] = 1.0
    U[1, i] = 0.0
    return U / np.sqrt(n)


@dataclass
class AscentResult:
    value: float
    weights: np.ndarray
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def u(self) -> np.ndarray:
        return np.sqrt(self.weights / self.weights.sum())


_S_BOUND = 60.0


def _ascend_weights(D: np.ndarray, w0: np.ndarray, max_iters: int) -> tuple[float, np.ndarray]:
    """Local maximum of the functional over log-weights, starting from ``w0``."""

    def neg(s):
        w = np.exp(s - s.max())
        f = w @ D
        g = float(np.sum(w / f))
        grad_w = 1.0 / f - D @ (w / f**2)
        return -g, -(w * grad_w)

    s0 = np.clip(np.log(w0), -_S_BOUND, _S_BOUND)
    res = minimize(neg, s0, jac=True, method="L-BFGS-B",
                   bounds=[(-_S_BOUND, _S_BOUND)] * D.shape[0],
                   options={"maxiter": max_iters, "ftol": 1e-15, "gtol": 1e-12})
    w = np.exp(res.x - res.x.max())
    return float(_cor52_batch(D, w[None, :])[0]), w


def maximize_cor52(D, budget: SearchBudget | None = None, polish: int | None = 32,
                   seeds: np.ndarray | None = None) -> AscentResult:
    """Multi-start maximization of the positivity functional over nonzero ``u``.

    ``budget.restarts`` random complex Gaussian vectors plus the cycle seeds
    are evaluated; the best ``polish`` of them (all when ``None``) and every
    structured seed are then refined by bounded L-BFGS in log-weights.
    ``values`` holds the polished optima.
    """
    D = _as_d(D)
    if np.any(np.diag(D) <= 0):
        raise ZeroDiagonal("D has a zero diagonal entry; the map is not positive")
    budget = budget or SearchBudget()
    n = D.shape[0]
    rng = np.random.default_rng(budget.seed)
    G = rng.standard_normal((budget.restarts, n)) + 1j * rng.standard_normal((budget.restarts, n))
    W = np.abs(G) ** 2
    S = structured_weights(D) if seeds is None else np.atleast_2d(seeds)
    vals = _cor52_batch(D, W)
    order = np.argsort(-vals, kind="stable")
    if polish is not None:
        order = order[:polish]
    starts = list(S) + [W[i] for i in order]
    opt = [_ascend_weights(D, w, budget.max_iters) for w in starts]
    seed_vals = _cor52_batch(D, S)
    cands = [(float(v), w) for v, w in zip(seed_vals, S)] + opt
    best = max(range(len(cands)), key=lambda i: (cands[i][0], -i))
    return AscentResult(cands[best][0], cands[best][1] / cands[best][1].sum(),
                        np.array([v for v, _ in opt]))


def _sharpen_witness(L: DTypeMap, U: np.ndarray, budget: SearchBudget) -> np.ndarray:
    """Trade a refuting ``U`` for one with a clearly negative eigenvalue.

    Runs the Schmidt-rank-k search seeded with the induced vector of ``U``
    and reads the new ``U`` back from the input factor of the best vector.
    """
    from .kcriteria import schmidt_min

    k, n = U.shape
    _, V = np.linalg.eigh(_u_block(L, U))
    # x = sum_p conj(row_p) (x) w_p pairs <x|C|x> with <w|block|w>
    x = (U.conj().T @ V[:, 0].reshape(k, n)).reshape(-1)
    sub = SearchBudget(restarts=min(budget.restarts, 64), max_iters=budget.max_iters,
                       seed=budget.seed, tol=budget.tol)
    res = schmidt_min(L, k, sub, seeds=[x / np.linalg.norm(x)])
    Y, s, _ = np.linalg.svd(res.vector.reshape(n, n), full_matrices=False)
    rows = (Y[:, :k] * s[:k]).T.conj()
    return rows / np.linalg.norm(rows)


def _u_block(L: DTypeMap, U: np.ndarray) -> np.ndarray:
    from .maps import ampliate

    z = U.reshape(-1)
    B = ampliate(L, U.shape[0], np.outer(z, z.conj()))
    return (B + B.conj().T) / 2


def _u_lambda(L: DTypeMap, U: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(_u_block(L, U))[0])


def _refutes(L, U, k, tol) -> tuple[bool, float, bool]:
    value, feasible = prop51_condition(L.D, k, U)
    return (value > 1 + tol or not feasible), value, feasible


def _ascend_u(D: np.ndarray, k: int, U0: np.ndarray, max_iters: int) -> tuple[float, np.ndarray]:
    n = D.shape[0]

    def unpack(p):
        return (p[: k * n] + 1j * p[k * n:]).reshape(k, n)

    def neg(p):
        U = unpack(p)
        if np.linalg.norm(U) == 0:
            return 0.0
        return -prop51_condition(D, k, U)[0]

    p0 = np.concatenate([U0.real.reshape(-1), U0.imag.reshape(-1)])
    res = minimize(neg, p0, method="L-BFGS-B", options={"maxiter": max_iters})
    U = unpack(res.x)
    return -float(res.fun), U / np.linalg.norm(U)


def dtype_falsify(D, k: int, budget: SearchBudget | None = None, polish: int = 32) -> Verdict:
    """Search for a ``k x n`` matrix breaking the k-row positivity functional.

    A zero diagonal entry refutes immediately.  Every refutation carries a
    ``dtype-u`` witness; the induced Schmidt vector is attached as ``aux``.
    """
    D = _as_d(D)
    L = DTypeMap(D)
    n = D.shape[0]
    if not 1 <= k <= n:
        raise KOutOfRange(f"k={k} outside 1..{n}")
    budget = budget or SearchBudget()
    tol = budget.tol

    zero = np.where(np.diag(D) <= 0)[0]
    if zero.size:
        U = np.zeros((k, n))
        U[0, zero[0]] = 1.0
        return Verdict(Status.REFUTED, k, float("inf"), "dtype-falsify", Witness("dtype-u", U),
                       details={"reason": "zero diagonal entry", "index": int(zero[0]) + 1,
                                "seed": budget.seed})

    if k == 1:
        res = maximize_cor52(D, budget, polish=polish)
        U = res.u.reshape(1, n).astype(complex)
        best = res.value
    else:
        rng = np.random.default_rng(budget.seed)
        cands = [np.vstack([proof_u(D), np.zeros((k - 2, n))])]
        cands += [sample_u(k, n, rng) for _ in range(budget.restarts)]
        scored = []
        for U in cands:
            v, feas = prop51_condition(D, k, U)
            if not feas and _u_lambda(L, U) < -tol * refutation_scale(L):
                return _refuted(L, k, U, v, budget, reason="range condition fails")
            scored.append(v)
        order = np.argsort(-np.array(scored), kind="stable")[: max(1, polish // 4)]
        best, U = scored[order[0]], cands[order[0]]
        for i in order:
            v, Ui = _ascend_u(D, k, cands[i], min(budget.max_iters, 200))
            if v > best:
                best, U = v, Ui

    if best > 1 + tol:
        return _refuted(L, k, U, best, budget)
    return Verdict(Status.INCONCLUSIVE, k, 1.0 - best, "dtype-falsify",
                   details={"best_value": best, "seed": budget.seed})


def _fill_zeros(L: DTypeMap, U: np.ndarray, value: float, lam: float, tol: float):
    """Replace exact zeros in a row witness by small entries that keep it refuting."""
    scale = refutation_scale(L)
    for delta in (1e-3, 1e-4, 1e-5, 1e-6, 1e-8):
        V = np.where(U == 0, delta * np.max(np.abs(U)), U)
        V = V / np.linalg.norm(V)
        v = cor52_value(L.D, V[0])
        lv = _u_lambda(L, V)
        if v > 1 + tol and lv < -tol * scale:
            return V, v, lv
    return U, value, lam


def _refuted(L: DTypeMap, k: int, U: np.ndarray, value: float, budget: SearchBudget,
             reason: str = "functional exceeds 1") -> Verdict:
    U = np.asarray(U, dtype=complex)
    lam = _u_lambda(L, U)
    scale = refutation_scale(L)
    if lam >= -budget.tol * scale:
        # extreme witnesses carry tiny eigenvalues; trade them for a sharper one
        U2 = _sharpen_witness(L, U, budget)
        ok, v2, _ = _refutes(L, U2, k, budget.tol)
        lam2 = _u_lambda(L, U2)
        if ok and lam2 < lam:
            U, value, lam = U2, v2, lam2
    if k == 1 and np.any(U == 0):
        U, value, lam = _fill_zeros(L, U, value, lam, budget.tol)
    _, V = np.linalg.eigh(_u_block(L, U))
    x = (U.conj().T @ V[:, 0].reshape(k, -1)).reshape(-1)
    details = {"value": value, "lambda_min": lam, "reason": reason, "seed": budget.seed}
    return Verdict(Status.REFUTED, k, 1.0 - value, "dtype-falsify",
                   Witness("dtype-u", U, x / np.linalg.norm(x)), details=details)


# -- doubly stochastic case ---------------------------------------------------------

@dataclass
class Prop63Report:
    n: int
    min_diagonal: float
    positive_sufficient: bool
    completely_positive: bool  # equivalently 2-positive here
    proof_u: np.ndarray | None
    proof_value: float | None
    proof_feasible: bool | None

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "min_diagonal": self.min_diagonal,
            "positive_sufficient": self.positive_sufficient,
            "completely_positive": self.completely_positive,
            "two_positive": self.completely_positive,
            "proof_u": None if self.proof_u is None else linalg.matrix_to_json(self.proof_u),
            "proof_value": self.proof_value,
            "proof_feasible": self.proof_feasible,
        }


def prop63_classify(D, tol: float = 1e-9) -> Prop63Report:
    """Classify ``D`` with all row and column sums equal to ``n``.

    Positivity is guaranteed once every diagonal entry reaches ``n - 1``.
    2-positivity, and complete positivity, hold only for ``D = n I``; otherwise
    the reported ``2 x n`` matrix breaks the 2-row functional.
    """
    D = _as_d(D)
    n = D.shape[0]
    if np.max(np.abs(D.sum(axis=0) - n)) > tol or np.max(np.abs(D.sum(axis=1) - n)) > tol:
        raise NotDoublyStochasticScaled("row and column sums must all equal n")
    dmin = float(np.min(np.diag(D)))
    cp = bool(np.max(np.abs(D - n * np.eye(n))) <= tol)
    if cp or n < 2:
        return Prop63Report(n, dmin, dmin >= n - 1 - tol, cp, None, None, None)
    U = proof_u(D)
    value, feasible = prop51_condition(D, 2, U)
    return Prop63Report(n, dmin, dmin >= n - 1 - tol, False, U, value, feasible)


def random_doubly_scaled(n: int, rng: np.random.Generator, spread: float = 1.0) -> np.ndarray:
    """``n`` times a Sinkhorn-balanced random positive matrix (all line sums ``n``)."""
    A = np.exp(spread * rng.standard_normal((n, n)))
    for _ in range(10_000):
        A /= A.sum(axis=1, keepdims=True)
        A /= A.sum(axis=0, keepdims=True)
        if np.max(np.abs(A.sum(axis=1) - 1)) < 1e-14:
            break
    return n * A


def d_to_json(D) -> dict:
    D = _as_d(D)
    return {"n": int(D.shape[0]), "d": D.tolist()}


def d_from_json(obj: Mapping) -> np.ndarray:
    D = np.asarray(obj["d"], dtype=float)
    if "n" in obj and D.shape != (int(obj["n"]), int(obj["n"])):
        raise DimensionMismatch(f"D has shape {D.shape}, declared n={obj['n']}")
    return _as_d(D)
