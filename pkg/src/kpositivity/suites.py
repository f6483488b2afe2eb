"""Pinned-seed reproduction scenarios behind ``kpositivity reproduce``."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import dtype as dt
from .decomp import involution_split, involutions, phi_one, verify_split
from .errors import UnknownSuite
from .falsify import SearchBudget
from .kcriteria import (
    OrthoBasisFamily,
    choi_compression_check,
    choi_psd_verdict,
    ck_corollary,
    ck_sufficient,
    complete_orthobasis,
    ortho_family_from_map,
    recheck_witness,
    schmidt_min,
    schmidt_min_verdict,
    validate_orthobasis,
)
from .linalg import partial_transpose_second, psd_check
from .maps import ChoiMap, DTypeMap, choi, l_gamma


@dataclass
class Check:
    name: str
    passed: bool
    value: object = None

    def to_json(self) -> dict:
        v = self.value
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        return {"name": self.name, "passed": bool(self.passed), "value": v}


@dataclass
class SuiteResult:
    name: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, value=None):
        self.checks.append(Check(name, bool(passed), value))

    def to_json(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "seconds": self.seconds,
                "checks": [c.to_json() for c in self.checks]}


def l_gamma_certificate(n: int, k: int):
    """Exact verdict for ``L_k`` at level ``k``: family bound below ``n``, Choi spectrum at ``n``."""
    L = l_gamma(n, k)
    if k == n:
        return choi_psd_verdict(L, k)
    fam, gamma = ortho_family_from_map(L)
    return ck_sufficient(fam, gamma, k)


def example_6_1(seed: int = 0) -> SuiteResult:
    res = SuiteResult("example-6-1")
    budget = SearchBudget(restarts=200, seed=seed)
    for n in (2, 3, 4):
        for k in range(1, n + 1):
            for gamma in (0.5, 1.0, 2.5):
                r = schmidt_min(l_gamma(n, gamma), k, budget)
                res.add(f"n={n} k={k} gamma={gamma}: schmidt min = gamma - k",
                        abs(r.value - (gamma - k)) <= 1e-6, r.value)
            cert = l_gamma_certificate(n, k)
            res.add(f"n={n} k={k}: L_k certified", cert.exact, cert.method)
            L = l_gamma(n, k - 0.01)
            ref = schmidt_min_verdict(L, k, SearchBudget(restarts=64, seed=seed))
            ok = ref.refuted and recheck_witness(L, ref.witness, k)[0]
            res.add(f"n={n} k={k}: L_(k-0.01) refuted with valid witness", ok, ref.margin)
    return res


PROP_6_2_CASES = (
    (3, (2, 3, 1)),
    (4, (2, 1, 4, 3)),
    (5, (2, 3, 4, 5, 1)),
    (6, (2, 3, 1, 5, 6, 4)),
)


def prop_6_2(seed: int = 0) -> SuiteResult:
    res = SuiteResult("prop-6-2")
    budget = SearchBudget(restarts=2000, seed=seed)
    for n, pi in PROP_6_2_CASES:
        th = dt.phi_threshold(n, pi)
        D = dt.make_phi(n, pi, th + 0.05)
        v = dt.dtype_falsify(D, 1, budget)
        val = dt.cor52_value(D, v.witness.data[0]) if v.refuted else None
        res.add(f"n={n} pi={list(pi)} t=n/l+0.05 refuted", v.refuted and val > 1 + 1e-9, val)
        v0 = dt.dtype_falsify(dt.make_phi(n, pi, th), 1, budget)
        res.add(f"n={n} pi={list(pi)} t=n/l inconclusive",
                v0.status.value == "inconclusive", v0.details.get("best_value"))
    return res


def section4_family() -> OrthoBasisFamily:
    a = np.kron(np.eye(4), np.array([[1.0, 1.0], [1.0, 1.0]])) / 4
    b = np.kron(np.eye(4), np.array([[1.0, -1.0], [-1.0, 1.0]])) / 4
    return OrthoBasisFamily(tuple(complete_orthobasis([a, b])), 62)


def section_4(seed: int = 0) -> SuiteResult:
    res = SuiteResult("section-4")
    fam = section4_family()
    res.add("family orthonormal", validate_orthobasis(fam).valid)
    gamma = np.ones(64)
    s = ck_sufficient(fam, gamma, 2)
    res.add("xi_2 = 0.5", abs(s.details["xi"] - 0.5) <= 1e-10, s.details["xi"])
    c = ck_corollary(fam, gamma, 2)
    res.add("corollary not applicable (xi~_2 = 0)",
            not c.applicable and abs(c.details["xi_tilde"]) <= 1e-10, c.details["xi_tilde"])
    res.add("2-positivity certified at plus weights 1", s.exact, s.margin)
    return res


EXAMPLE_6_5_D = np.array([[1.35, 1.0, 0.65], [0.65, 1.35, 1.0], [1.0, 0.65, 1.35]])


def example_6_5(seed: int = 0) -> SuiteResult:
    res = SuiteResult("example-6-5")
    r = dt.maximize_cor52(EXAMPLE_6_5_D, SearchBudget(restarts=2000, seed=seed), polish=None)
    res.add("multi-start maximum <= 1 + 1e-9", r.value <= 1 + 1e-9, r.value)
    rep = dt.prop63_classify(EXAMPLE_6_5_D)
    res.add("min diagonal 1.35 < n - 1 reported",
            abs(rep.min_diagonal - 1.35) < 1e-12 and not rep.positive_sufficient, rep.min_diagonal)
    return res


def prop_6_3(seed: int = 0) -> SuiteResult:
    res = SuiteResult("prop-6-3")
    rng = np.random.default_rng(seed)
    worst = np.inf
    for i in range(50):
        n = 2 + i % 5
        rep = dt.prop63_classify(dt.random_doubly_scaled(n, rng))
        worst = min(worst, rep.proof_value)
    res.add("50 random D != nI: proof U value > 1 + 1e-9", worst > 1 + 1e-9, worst)
    for n in (2, 3, 4, 5, 6):
        ok, lam = psd_check(choi(DTypeMap(n * np.eye(n))))
        res.add(f"D = {n}I: Choi matrix PSD", lam >= -1e-10, lam)
    return res


def prop_7_2(seed: int = 0) -> SuiteResult:
    res = SuiteResult("prop-7-2")
    for n in range(1, 7):
        count = 0
        for pi in involutions(n):
            sp = involution_split(n, pi)
            L = phi_one(n, pi)
            dev = float(np.max(np.abs(sp.c1 + sp.c2 - choi(L))))
            lam1 = float(np.linalg.eigvalsh(sp.c1)[0])
            lam2 = float(np.linalg.eigvalsh(partial_transpose_second(sp.c2, n, n))[0])
            ok = dev <= 1e-12 and lam1 >= -1e-10 and lam2 >= -1e-10 and verify_split(L, sp).certified
            if not ok:
                res.add(f"n={n} pi={list(pi.image)} split", False, (dev, lam1, lam2))
            count += 1
        res.add(f"n={n}: all {count} involutions split", True, count)
    for n in (4, 6):
        half = tuple((i + n // 2) % n + 1 for i in range(n))
        v = verify_split(phi_one(n, dt.PermutationSpec(half)), involution_split(n, half))
        res.add(f"n={n}: shift by n/2 decomposable", v.certified, v.margin)
    return res


def _random_unitary(N: int, rng) -> np.ndarray:
    Z = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_orthonormal_family(m: int, n: int, rng) -> list[np.ndarray]:
    """Rows of a random unitary reshaped to ``m x n`` matrices."""
    U = _random_unitary(m * n, rng)
    return [U[j].reshape(m, n) for j in range(m * n)]


def rank_one_projections(family) -> list[np.ndarray]:
    """``P_r = |vec F_r><vec F_r|`` for each family member."""
    return [np.outer(F.reshape(-1), F.reshape(-1).conj()) for F in family]


def prop_4_1(seed: int = 0) -> SuiteResult:
    res = SuiteResult("prop-4-1")
    rng = np.random.default_rng(seed)
    worst_sum, worst_proj = 0.0, 0.0
    for i in range(100):
        m, n = ((2, 3), (3, 3), (2, 4))[i % 3]
        fam = random_orthonormal_family(m, n, rng)
        rep = validate_orthobasis(fam)
        worst_sum = max(worst_sum, rep.sum_ffdag_deviation, rep.sum_fdagf_deviation)
        P = rank_one_projections(fam)
        for r, Pr in enumerate(P):
            worst_proj = max(worst_proj, np.abs(Pr @ Pr - Pr).max(), abs(np.trace(Pr) - 1))
            for s in range(r + 1, len(P)):
                worst_proj = max(worst_proj, np.abs(Pr @ P[s]).max())
    res.add("sum F F^dag = n I and sum F^dag F = m I", worst_sum <= 1e-10, worst_sum)
    res.add("P_r mutually orthogonal rank-one projections", worst_proj <= 1e-10, worst_proj)
    return res


def oracle_equivalence(seed: int = 0) -> SuiteResult:
    res = SuiteResult("oracle")
    rng = np.random.default_rng(seed)
    agree, worst = True, 0.0
    for _ in range(100):
        G = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
        C = (G + G.conj().T) / 2 + rng.uniform(0, 6) * np.eye(9)
        L = ChoiMap(C, 3, 3)
        v = choi_compression_check(L, np.eye(3))
        ok, lam = psd_check(C)
        agree = agree and (v.certified == ok)
        worst = max(worst, abs(schmidt_min(L, 3).value - lam))
    res.add("full compression agrees with Choi PSD test", agree)
    res.add("schmidt min at k=n equals lambda_min", worst <= 1e-8, worst)
    return res


SUITES = {
    "example-6-1": example_6_1,
    "prop-6-2": prop_6_2,
    "section-4": section_4,
    "example-6-5": example_6_5,
    "prop-6-3": prop_6_3,
    "prop-7-2": prop_7_2,
    "prop-4-1": prop_4_1,
    "oracle": oracle_equivalence,
}


def run_suite(name: str, seed: int = 0) -> SuiteResult:
    if name not in SUITES:
        raise UnknownSuite(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    t0 = time.perf_counter()
    res = SUITES[name](seed)
    res.seconds = time.perf_counter() - t0
    return res
