"""k-positivity criteria on Choi matrices, frames and orthonormal families.

Every function returns a :class:`Verdict`.  Certification only comes from
criteria that are theorems (Choi positivity, the orthonormal-family bounds,
the single-operator numerical range test); searches can only refute.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import linalg
from .errors import (
    DimensionMismatch,
    EmptyPlusList,
    KOutOfRange,
    NotAProjection,
    WrongCount,
    WrongRepresentation,
    WrongSplit,
)
from .falsify import (
    SchmidtResult,
    SearchBudget,
    argmin_merge,
    random_schmidt_vector,
    refine_schmidt,
    run_restarts,
)
from .maps import (
    DTypeMap,
    KrausDifference,
    MapRep,
    OrthonormalFrame,
    ampliate,
    block_matrix_lx,
    choi,
    dims,
)

REFUTE_TOL = 1e-8
# slack for criteria that are exact in exact arithmetic but evaluated in floats
EXACT_SLACK = 1e-10


class Status(str, enum.Enum):
    CERTIFIED = "certified"
    REFUTED = "refuted"
    INCONCLUSIVE = "inconclusive"


@dataclass
class Witness:
    """Evidence attached to a refutation.

    kind is one of ``"schmidt-vector"`` (data: vector in ``C^n (x) C^m``),
    ``"frame"`` (data: ``n x k`` orthonormal columns) or ``"dtype-u"``
    (data: ``k x n`` matrix with ``tr(U^dag U) = 1``).
    """

    kind: str
    data: np.ndarray
    aux: np.ndarray | None = None

    def to_json(self) -> dict:
        out = {"kind": self.kind, "data": linalg.matrix_to_json(self.data)}
        if self.aux is not None:
            out["aux"] = linalg.matrix_to_json(self.aux)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Witness":
        data = linalg.matrix_from_json(obj["data"])
        if obj["kind"] == "schmidt-vector":
            data = data.reshape(-1)
        aux = linalg.matrix_from_json(obj["aux"]) if "aux" in obj else None
        return cls(obj["kind"], data, aux)


@dataclass
class Verdict:
    status: Status
    k: int | None
    margin: float
    method: str
    witness: Witness | None = None
    claim: str = "k-positive"
    applicable: bool = True
    heuristic: bool = False
    details: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.status is Status.CERTIFIED

    @property
    def refuted(self) -> bool:
        return self.status is Status.REFUTED

    @property
    def exact(self) -> bool:
        """Certified by a theorem rather than by a heuristic optimizer."""
        return self.certified and not self.heuristic

    def to_json(self) -> dict:
        out = {
            "status": self.status.value,
            "k": self.k,
            "margin": _jsonable(self.margin),
            "method": self.method,
            "claim": self.claim,
            "applicable": self.applicable,
            "heuristic": self.heuristic,
            "details": {key: _jsonable(v) for key, v in self.details.items()},
        }
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Verdict":
        w = obj.get("witness")
        return cls(
            status=Status(obj["status"]),
            k=obj.get("k"),
            margin=float(obj["margin"]) if obj.get("margin") is not None else float("nan"),
            method=obj["method"],
            witness=Witness.from_json(w) if w else None,
            claim=obj.get("claim", "k-positive"),
            applicable=obj.get("applicable", True),
            heuristic=obj.get("heuristic", False),
            details=dict(obj.get("details", {})),
        )


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.ndarray):
        return linalg.matrix_to_json(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def refutation_scale(L: MapRep) -> float:
    return max(1.0, float(np.linalg.norm(choi(L), 2)))


def _check_k(k: int, upper: int):
    if not 1 <= k <= upper:
        raise KOutOfRange(f"k={k} outside 1..{upper}")


# -- quadratic-form evidence ------------------------------------------------------

def choi_form(L: MapRep, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=complex).reshape(-1)
    return float(np.real(x.conj() @ choi(L) @ x))


def truncate_schmidt(x: np.ndarray, n: int, m: int, k: int) -> np.ndarray:
    """Best Schmidt-rank-k approximation of ``x``, renormalized."""
    U, s, Vh = np.linalg.svd(np.asarray(x, dtype=complex).reshape(n, m), full_matrices=False)
    X = (U[:, :k] * s[:k]) @ Vh[:k]
    y = X.reshape(-1)
    return y / np.linalg.norm(y)


def u_witness_vector(U: np.ndarray) -> np.ndarray:
    """``sum_i e_i (x) u_hat_i`` with ``u_hat_i`` the i-th row of ``U``."""
    return np.asarray(U, dtype=complex).reshape(-1)


def recheck_witness(L: MapRep, witness: Witness, k: int, tol: float = REFUTE_TOL) -> tuple[bool, float]:
    """Re-derive a refutation from its witness alone.

    Returns ``(still_refutes, value)`` where ``value`` is the quadratic form
    (Schmidt vector, truncated to rank k) or the minimal eigenvalue of the
    relevant block matrix (frame / U witness).
    """
    n, m = dims(L)
    scale = refutation_scale(L)
    if witness.kind == "schmidt-vector":
        x = truncate_schmidt(witness.data, n, m, min(k, n, m))
        value = choi_form(L, x)
    elif witness.kind == "frame":
        frame = OrthonormalFrame(witness.data, tol=1e-8)
        if frame.k > k:
            return False, float("nan")
        value = float(np.linalg.eigvalsh(_herm(block_matrix_lx(L, frame)))[0])
    elif witness.kind == "dtype-u":
        U = np.atleast_2d(witness.data)
        if U.shape[0] > k:
            return False, float("nan")
        z = u_witness_vector(U / np.linalg.norm(U))
        block = ampliate(L, U.shape[0], np.outer(z, z.conj()))
        value = float(np.linalg.eigvalsh(_herm(block))[0])
        if isinstance(L, DTypeMap) and not value < -tol * scale:
            # the k-row functional is an exact test of its own
            from .dtype import prop51_condition

            f, feasible = prop51_condition(L.D, U.shape[0], U)
            return f > 1 + tol or not feasible, value
    else:
        raise ValueError(f"unknown witness kind {witness.kind!r}")
    return value < -tol * scale, value


def _herm(A: np.ndarray) -> np.ndarray:
    return (A + A.conj().T) / 2


# -- block positivity and Choi compression ---------------------------------------

def check_frame_positivity(L: MapRep, frame: OrthonormalFrame | Any, tol: float = REFUTE_TOL) -> Verdict:
    """Test positivity of ``L_X = (L(|x_i><x_j|))`` for one orthonormal frame.

    A single frame can refute k-positivity but never certify it.
    """
    if not isinstance(frame, OrthonormalFrame):
        frame = OrthonormalFrame(frame)
    n, _ = dims(L)
    if frame.n != n or frame.k > n:
        raise DimensionMismatch(f"frame of {frame.k} vectors in C^{frame.n} for map on M_{n}")
    w, V = np.linalg.eigh(_herm(block_matrix_lx(L, frame)))
    lam = float(w[0])
    if lam < -tol * refutation_scale(L):
        return Verdict(Status.REFUTED, frame.k, lam, "frame-block",
                       Witness("frame", frame.columns, V[:, 0]))
    return Verdict(Status.INCONCLUSIVE, frame.k, lam, "frame-block")


def choi_compression_check(L: MapRep, P: Any, tol: float = REFUTE_TOL, proj_tol: float = 1e-10) -> Verdict:
    """Positivity of ``(I_n (x) P) C(L) (I_n (x) P)`` for an orthogonal projection ``P``.

    With ``P = I`` this is the complete-positivity test and certifies.
    """
    n, m = dims(L)
    P = linalg.as_matrix(P)
    if P.shape != (m, m):
        raise DimensionMismatch(f"projection is {P.shape}, output space is C^{m}")
    if np.linalg.norm(P - P.conj().T, 2) > proj_tol or np.linalg.norm(P @ P - P, 2) > proj_tol:
        raise NotAProjection("P is not a Hermitian idempotent")
    rank = int(round(float(np.real(np.trace(P)))))
    Q = np.kron(np.eye(n), P)
    w, V = np.linalg.eigh(_herm(Q @ choi(L) @ Q))
    lam = float(w[0])
    if lam < -tol * refutation_scale(L):
        return Verdict(Status.REFUTED, rank, lam, "choi-compression",
                       Witness("schmidt-vector", V[:, 0]))
    if rank == m:
        return Verdict(Status.CERTIFIED, rank, lam, "choi-psd", details={"completely_positive": True})
    return Verdict(Status.INCONCLUSIVE, rank, lam, "choi-compression")


def choi_psd_verdict(L: MapRep, k: int, tol: float = REFUTE_TOL) -> Verdict:
    """Complete positivity via the Choi spectrum, read at level k.

    PSD Choi certifies every k.  Otherwise the lowest eigenvector refutes
    level k when its Schmidt rank is at most k.
    """
    n, m = dims(L)
    _check_k(k, min(n, m))
    v = choi_compression_check(L, np.eye(m), tol)
    if v.certified:
        v.k = k
        return v
    x = v.witness.data
    rank_ok = np.sum(np.linalg.svd(x.reshape(n, m), compute_uv=False) > 1e-10) <= k
    if rank_ok:
        return Verdict(Status.REFUTED, k, v.margin, "choi-psd", v.witness)
    return Verdict(Status.INCONCLUSIVE, k, v.margin, "choi-psd",
                   details={"note": "Choi matrix not PSD; eigenvector Schmidt rank exceeds k"})


# -- Schmidt-rank-k minimization ----------------------------------------------------

def schmidt_min(
    L: MapRep,
    k: int,
    budget: SearchBudget | None = None,
    seeds: Sequence[np.ndarray] = (),
    n_jobs: int = 1,
) -> SchmidtResult:
    """Lowest ``<x|C(L)|x>`` found over unit vectors of Schmidt rank <= k.

    Each restart refines a random Schmidt-rank-k start by alternating exact
    eigen-steps.  Extra ``seeds`` (Schmidt vectors) are refined first and
    merged with the random restarts; the restart index of seed ``i`` is
    ``-len(seeds) + i``.
    """
    budget = budget or SearchBudget()
    n, m = dims(L)
    _check_k(k, min(n, m))
    C = choi(L)
    if k == min(n, m):
        return refine_schmidt(C, n, m, k, np.ones(n * m), budget.max_iters)

    def task(i, rng):
        r = refine_schmidt(C, n, m, k, random_schmidt_vector(n, m, k, rng), budget.max_iters)
        r.restart = i
        return r

    results = []
    for i, s in enumerate(seeds):
        r = refine_schmidt(C, n, m, k, truncate_schmidt(s, n, m, k), budget.max_iters)
        r.restart = i - len(seeds)
        results.append(r)
    results += run_restarts(task, budget, n_jobs)
    return results[argmin_merge([r.value for r in results])]


def schmidt_min_verdict(L: MapRep, k: int, budget: SearchBudget | None = None, **kw) -> Verdict:
    budget = budget or SearchBudget()
    r = schmidt_min(L, k, budget, **kw)
    details = {"restart": r.restart, "iterations": r.iterations, "seed": budget.seed}
    if r.value < -budget.tol * refutation_scale(L):
        return Verdict(Status.REFUTED, k, r.value, "schmidt-min",
                       Witness("schmidt-vector", r.vector), details=details)
    return Verdict(Status.INCONCLUSIVE, k, r.value, "schmidt-min", details=details)


# -- elementary-operator criteria ------------------------------------------------------

def _require_kraus(L) -> KrausDifference:
    if not isinstance(L, KrausDifference):
        raise WrongRepresentation("criterion needs the Kraus-difference form; see maps.to_kraus")
    return L


def trace_necessary(L: KrausDifference, k: int, tol: float = REFUTE_TOL) -> Verdict:
    """Necessary condition: ``W_k(sum C^dag C - sum D^dag D)`` must lie in ``[0, inf)``."""
    L = _require_kraus(L)
    n = L.n
    _check_k(k, n)
    A = sum(C.conj().T @ C for C in L.plus) - sum((D.conj().T @ D for D in L.minus), np.zeros((n, n)))
    w, V = np.linalg.eigh(_herm(A))
    lo = float(np.sum(w[:k]))
    if lo < -tol * refutation_scale(L):
        return Verdict(Status.REFUTED, k, lo, "trace-necessary", Witness("frame", V[:, :k]))
    return Verdict(Status.INCONCLUSIVE, k, lo, "trace-necessary")


def _combo(ops, u):
    return sum(c * A for c, A in zip(u, ops))


def _frame_gram(ops, X):
    B = [A @ X for A in ops]
    return np.array([[np.vdot(Br, Bs) for Bs in B] for Br in B])


def _alternate(ops, k, u0, sign, max_iters, tol=1e-12):
    """Alternating optimum of ``sign * ||(sum u_r A_r) X||_F^2`` over unit u and k-frames X."""
    u = u0 / np.linalg.norm(u0)
    val = None
    for _ in range(max_iters):
        M = _combo(ops, u)
        w, V = np.linalg.eigh(_herm(M.conj().T @ M))
        X = V[:, :k] if sign > 0 else V[:, -k:]
        w2, U2 = np.linalg.eigh(_herm(_frame_gram(ops, X)))
        u = U2[:, 0] if sign > 0 else U2[:, -1]
        new = float(w2[0] if sign > 0 else w2[-1])
        if val is not None and abs(new - val) < tol:
            val = new
            break
        val = new
    return val, u


def numrange_sufficient(
    L: KrausDifference,
    k: int,
    budget: SearchBudget | None = None,
    cluster_tol: float = 1e-6,
) -> Verdict:
    """Sufficient condition comparing k-numerical ranges over the u- and v-spheres.

    Certifies when ``min_u min W_k(C_u^dag C_u) >= max_v max W_k(D_v^dag D_v)``.
    Exact for a single plus and a single minus operator; otherwise both sides
    come from multi-start alternating optimization and the verdict is flagged
    heuristic.
    """
    L = _require_kraus(L)
    budget = budget or SearchBudget()
    p, q = len(L.plus), len(L.minus)
    if p == 0:
        raise EmptyPlusList("numerical range criterion needs at least one plus operator")
    _check_k(k, L.n)

    def side(ops, sign):
        if len(ops) == 1:
            s = linalg.k_numerical_range(ops[0].conj().T @ ops[0], k)
            return (s.lo if sign > 0 else s.hi), np.array([1.0 + 0j]), 0.0

        def task(_, rng):
            u0 = rng.standard_normal(len(ops)) + 1j * rng.standard_normal(len(ops))
            return _alternate(ops, k, u0, sign, budget.max_iters)

        res = run_restarts(task, budget)
        vals = np.array([r[0] for r in res])
        best = int(np.argmin(vals) if sign > 0 else np.argmax(vals))
        return float(vals[best]), res[best][1], float(np.ptp(vals))

    left, u, spread_l = side(L.plus, +1)
    if q == 0:
        right, v, spread_r = 0.0, None, 0.0
    else:
        right, v, spread_r = side(L.minus, -1)
    heuristic = p > 1 or q > 1
    margin = left - right
    details = {"left": left, "right": right, "spread_left": spread_l, "spread_right": spread_r}
    ok = margin >= -EXACT_SLACK * max(1.0, abs(right))
    if heuristic:
        ok = ok and spread_l <= cluster_tol and spread_r <= cluster_tol
    method = "numrange-sufficient" + ("/heuristic" if heuristic else "")
    status = Status.CERTIFIED if ok else Status.INCONCLUSIVE
    return Verdict(status, k, margin, method, heuristic=heuristic, details=details)


# -- orthonormal-family criteria ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OrthoBasisFamily:
    """``m*n`` matrices of size ``m x n``; the first ``p`` carry plus weights."""

    F: tuple
    p: int

    def __post_init__(self):
        F = tuple(np.array(linalg.as_matrix(A)) for A in self.F)
        if not F:
            raise WrongCount("empty family")
        shapes = {A.shape for A in F}
        if len(shapes) != 1:
            raise DimensionMismatch(f"family members disagree in shape: {sorted(shapes)}")
        m, n = F[0].shape
        if len(F) != m * n:
            raise WrongCount(f"{len(F)} matrices for M_{{{m},{n}}} (need {m * n})")
        if not 0 <= self.p <= len(F):
            raise WrongSplit(f"split p={self.p} outside 0..{len(F)}")
        object.__setattr__(self, "F", F)

    @property
    def m(self) -> int:
        return self.F[0].shape[0]

    @property
    def n(self) -> int:
        return self.F[0].shape[1]

    @property
    def plus(self):
        return self.F[: self.p]

    @property
    def minus(self):
        return self.F[self.p:]

    def to_map(self, gamma: Sequence[float]) -> KrausDifference:
        gamma = _check_gamma(self, gamma)
        plus = [np.sqrt(g) * F for g, F in zip(gamma[: self.p], self.plus)]
        minus = [np.sqrt(g) * F for g, F in zip(gamma[self.p:], self.minus)]
        return KrausDifference(plus or [np.zeros((self.m, self.n))], minus)


@dataclass
class OrthoBasisReport:
    valid: bool
    max_deviation: float
    worst_pair: tuple[int, int]  # 1-based
    sum_ffdag_deviation: float | None = None  # || sum F F^dag - n I_m ||
    sum_fdagf_deviation: float | None = None  # || sum F^dag F - m I_n ||


def validate_orthobasis(F: OrthoBasisFamily | Sequence, tol: float = 1e-10) -> OrthoBasisReport:
    """Orthonormality of the family under ``tr(X^dag Y)`` plus the two sum identities.

    The identities ``sum F F^dag = n I_m`` and ``sum F^dag F = m I_n`` are
    consequences of orthonormality and are only evaluated when it holds.
    """
    fam = F if isinstance(F, OrthoBasisFamily) else OrthoBasisFamily(tuple(F), 0)
    m, n = fam.m, fam.n
    V = np.array([A.reshape(-1) for A in fam.F])
    G = V.conj() @ V.T  # G[r, s] = tr(F_r^dag F_s)
    dev = np.abs(G - np.eye(len(fam.F)))
    r, s = np.unravel_index(int(np.argmax(dev)), dev.shape)
    if r > s:
        r, s = s, r
    worst = float(dev.max())
    report = OrthoBasisReport(worst <= tol, worst, (int(r) + 1, int(s) + 1))
    if report.valid:
        S1 = sum(A @ A.conj().T for A in fam.F)
        S2 = sum(A.conj().T @ A for A in fam.F)
        report.sum_ffdag_deviation = float(np.abs(S1 - n * np.eye(m)).max())
        report.sum_fdagf_deviation = float(np.abs(S2 - m * np.eye(n)).max())
    return report


def _check_gamma(fam: OrthoBasisFamily, gamma) -> np.ndarray:
    g = np.asarray(gamma, dtype=float).reshape(-1)
    if g.size != len(fam.F):
        raise WrongCount(f"{g.size} weights for {len(fam.F)} family members")
    if np.any(g < 0):
        raise ValueError("weights must be nonnegative")
    return g


def _require_orthonormal(fam: OrthoBasisFamily):
    rep = validate_orthobasis(fam, tol=1e-8)
    if not rep.valid:
        raise ValueError(f"family is not orthonormal (deviation {rep.max_deviation:.2e} at {rep.worst_pair})")


def _fdagf_sum(mats, weights=None) -> np.ndarray:
    n = mats[0].shape[1] if mats else 0
    out = np.zeros((n, n), dtype=complex)
    for i, A in enumerate(mats):
        out += (1.0 if weights is None else weights[i]) * (A.conj().T @ A)
    return out


def ck_sufficient(fam: OrthoBasisFamily, gamma: Sequence[float], k: int) -> Verdict:
    """Certify k-positivity from ``xi_k = 1 - max W_k(sum_minus F^dag F)``.

    Certified when every plus weight is at least
    ``max W_k(sum_minus gamma_j F_j^dag F_j) / xi_k``; ``xi_k <= 0`` makes the
    criterion not applicable.
    """
    _require_orthonormal(fam)
    g = _check_gamma(fam, gamma)
    _check_k(k, min(fam.m, fam.n))
    minus = fam.minus
    if minus:
        xi = 1.0 - linalg.k_numerical_range(_fdagf_sum(minus), k).hi
        w = linalg.k_numerical_range(_fdagf_sum(minus, g[fam.p:]), k).hi
    else:
        xi, w = 1.0, 0.0
    details = {"xi": xi, "weighted_max_wk": w}
    if xi <= EXACT_SLACK:
        return Verdict(Status.INCONCLUSIVE, k, float("nan"), "ortho-sufficient",
                       applicable=False, details=details)
    threshold = w / xi
    details["threshold"] = threshold
    margin = float(np.min(g[: fam.p])) - threshold if fam.p else float("inf")
    ok = margin >= -EXACT_SLACK * max(1.0, threshold)
    return Verdict(Status.CERTIFIED if ok else Status.INCONCLUSIVE, k, margin,
                   "ortho-sufficient", details=details)


def ck_corollary(fam: OrthoBasisFamily, gamma: Sequence[float], k: int) -> Verdict:
    """Coarser certificate from ``1 - sum_minus ||F_j||_k^2`` and the (2,k)-norms."""
    _require_orthonormal(fam)
    g = _check_gamma(fam, gamma)
    _check_k(k, min(fam.m, fam.n))
    norms = np.array([linalg.norm_2k(A, k) ** 2 for A in fam.minus])
    xi = 1.0 - float(norms.sum())
    w = float(np.dot(g[fam.p:], norms)) if norms.size else 0.0
    details = {"xi_tilde": xi, "weighted_norm_sum": w}
    if xi <= EXACT_SLACK:
        return Verdict(Status.INCONCLUSIVE, k, float("nan"), "ortho-corollary",
                       applicable=False, details=details)
    threshold = w / xi
    details["threshold"] = threshold
    margin = float(np.min(g[: fam.p])) - threshold if fam.p else float("inf")
    ok = margin >= -EXACT_SLACK * max(1.0, threshold)
    return Verdict(Status.CERTIFIED if ok else Status.INCONCLUSIVE, k, margin,
                   "ortho-corollary", details=details)


def ck_necessary_last(fam: OrthoBasisFamily, gamma: Sequence[float], k: int,
                      tol: float = REFUTE_TOL) -> Verdict:
    """Refute k-positivity when a single minus term dominates every plus weight.

    With ``beta = ||F_last||_k^2`` and ``xi = 1 - beta``, the map is not
    k-positive when every plus weight is below ``gamma_last * beta / xi``.
    The top-k right singular frame of ``F_last`` carries the negativity; the
    eigenvector of ``L_X`` is attached as the witness.
    """
    if fam.p != len(fam.F) - 1:
        raise WrongSplit(f"need exactly one minus element, split is p={fam.p} of {len(fam.F)}")
    _require_orthonormal(fam)
    g = _check_gamma(fam, gamma)
    _check_k(k, min(fam.m, fam.n))
    last = fam.F[-1]
    beta = linalg.norm_2k(last, k) ** 2
    xi = 1.0 - beta
    threshold = g[-1] * beta / xi if xi > 0 else float("inf")
    margin = float(np.max(g[:-1])) - threshold
    details = {"beta": beta, "xi": xi, "threshold": threshold}
    if not margin < -EXACT_SLACK * max(1.0, abs(threshold) if np.isfinite(threshold) else 1.0):
        return Verdict(Status.INCONCLUSIVE, k, margin, "ortho-necessary", details=details)
    _, V = np.linalg.eigh(_herm(last.conj().T @ last))
    frame = V[:, -k:]
    L = fam.to_map(g)
    w, E = np.linalg.eigh(_herm(block_matrix_lx(L, frame)))
    details["frame_lambda_min"] = float(w[0])
    if w[0] >= -tol * refutation_scale(L):
        details["note"] = "hypothesis holds but negativity is below tolerance"
        return Verdict(Status.INCONCLUSIVE, k, margin, "ortho-necessary", details=details)
    return Verdict(Status.REFUTED, k, margin, "ortho-necessary",
                   Witness("frame", frame, E[:, 0]), details=details)


def ortho_family_from_map(L: MapRep, tol: float = 1e-12) -> tuple[OrthoBasisFamily, np.ndarray]:
    """Orthonormal family and weights read off the Choi eigendecomposition.

    Positive eigenvalues go to the plus part.  Numerically zero eigenvalues
    join the plus part only when there is no negative eigenvalue (so a CP map
    keeps ``p = mn``); otherwise they are minus terms of weight 0.
    """
    n, m = dims(L)
    w, V = np.linalg.eigh(choi(L))
    scale = max(1.0, float(np.max(np.abs(w))))
    zero = np.abs(w) <= tol * scale
    neg = (w < 0) & ~zero
    plus_idx = np.where(~neg & (~zero | ~neg.any()))[0]
    minus_idx = np.array([i for i in range(w.size) if i not in set(plus_idx)], dtype=int)
    plus_idx = plus_idx[np.argsort(-w[plus_idx], kind="stable")]
    order = np.concatenate([plus_idx, minus_idx]).astype(int)
    F = tuple(V[:, i].reshape(n, m).T for i in order)
    gamma = np.abs(np.where(zero, 0.0, w))[order]
    return OrthoBasisFamily(F, len(plus_idx)), gamma


def complete_orthobasis(given: Sequence, tol: float = 1e-10) -> list[np.ndarray]:
    """Extend orthonormal ``m x n`` matrices to a basis of ``M_{m,n}``.

    New members come from Gram-Schmidt on the matrix units ``E_ab`` in
    row-major order and are listed first; the ``given`` matrices come last.
    """
    given = [linalg.as_matrix(A) for A in given]
    m, n = given[0].shape
    basis = [A.reshape(-1) for A in given]
    G = np.array(basis)
    if np.max(np.abs(G.conj() @ G.T - np.eye(len(basis)))) > tol:
        raise ValueError("given matrices are not orthonormal")
    new = []
    for idx in range(m * n):
        v = np.zeros(m * n, dtype=complex)
        v[idx] = 1.0
        for _ in range(2):  # re-orthogonalize once for stability
            for b in basis + new:
                v = v - np.vdot(b, v) * b
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            new.append(v / nv)
        if len(new) + len(basis) == m * n:
            break
    return [v.reshape(m, n) for v in new] + given
