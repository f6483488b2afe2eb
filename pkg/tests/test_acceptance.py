"""End-to-end acceptance criteria; each test prints one PASS/FAIL line."""
import time

import numpy as np
import pytest

from kpositivity import dtype as dt
from kpositivity.cli import parse_criteria, run_check
from kpositivity.decomp import involution_split, involutions, phi_one
from kpositivity.falsify import SearchBudget
from kpositivity.kcriteria import (
    Witness,
    choi_compression_check,
    ck_corollary,
    ck_sufficient,
    recheck_witness,
    schmidt_min,
    validate_orthobasis,
)
from kpositivity.linalg import partial_transpose_second, psd_check
from kpositivity.maps import ChoiMap, DTypeMap, choi, l_gamma
from kpositivity.suites import (
    EXAMPLE_6_5_D,
    PROP_6_2_CASES,
    random_orthonormal_family,
    rank_one_projections,
    section4_family,
)


@pytest.fixture
def report(capsys):
    def emit(number, title, failures, detail=""):
        line = f"{'PASS' if not failures else 'FAIL'} criterion {number}: {title}"
        if detail:
            line += f" [{detail}]"
        with capsys.disabled():
            print("\n" + line)
        assert not failures, failures
    return emit


def test_criterion_1_l_gamma_threshold(report):
    failures, worst = [], 0.0
    for n in (2, 3, 4):
        for k in range(1, n + 1):
            for gamma in (0.5, 1.0, 2.5, float(n)):
                r = schmidt_min(l_gamma(n, gamma), k, SearchBudget(restarts=200, seed=n * 10 + k))
                err = abs(r.value - (gamma - k))
                worst = max(worst, err)
                if err > 1e-6:
                    failures.append(f"schmidt_min n={n} k={k} gamma={gamma}: {r.value}")
            L = l_gamma(n, k)
            rep = run_check(L, k, parse_criteria(None, L), SearchBudget())
            if rep["status"] != "certified":
                failures.append(f"L_{k} at k={k}, n={n} not certified: {rep['status']}")
            L = l_gamma(n, k - 0.01)
            rep = run_check(L, k, parse_criteria(None, L), SearchBudget())
            if rep["status"] != "refuted":
                failures.append(f"L_{k}-0.01 at k={k}, n={n} not refuted")
                continue
            v = next(e["verdict"] for e in rep["results"] if e["verdict"]["status"] == "refuted")
            if not recheck_witness(L, Witness.from_json(v["witness"]), k)[0]:
                failures.append(f"witness for n={n} k={k} does not recheck")
    report(1, "L_gamma is k-positive iff gamma >= k", failures, f"max |min - (gamma-k)| = {worst:.1e}")


def test_criterion_2_phi_threshold_sharpness(report):
    failures, t0 = [], time.perf_counter()
    budget = SearchBudget(restarts=2000, seed=0)
    for n, pi in PROP_6_2_CASES:
        th = dt.phi_threshold(n, pi)
        assert th == n / dt.PermutationSpec(pi).ell
        D = dt.make_phi(n, pi, th + 0.05)
        v = dt.dtype_falsify(D, 1, budget)
        if not v.refuted or dt.cor52_value(D, v.witness.data[0]) <= 1 + 1e-9:
            failures.append(f"n={n} pi={pi}: not refuted above threshold")
        v0 = dt.dtype_falsify(dt.make_phi(n, pi, th), 1, budget)
        if v0.status.value != "inconclusive":
            failures.append(f"n={n} pi={pi}: refuted at the threshold")
    elapsed = time.perf_counter() - t0
    if elapsed >= 30:
        failures.append(f"runtime {elapsed:.1f}s >= 30s")
    report(2, "phi_{t,pi} positive iff t <= n/l", failures, f"{elapsed:.1f}s")


def test_criterion_3_orthobasis_example(report):
    fam = section4_family()
    failures = []
    if not validate_orthobasis(fam).valid:
        failures.append("completed basis not orthonormal")
    gamma = np.ones(64)  # minus weights are 1
    s = ck_sufficient(fam, gamma, 2)
    c = ck_corollary(fam, gamma, 2)
    if abs(s.details["xi"] - 0.5) > 1e-10:
        failures.append(f"xi_2 = {s.details['xi']}")
    if c.applicable or abs(c.details["xi_tilde"]) > 1e-10:
        failures.append(f"corollary applicable, xi~ = {c.details['xi_tilde']}")
    if not s.exact:
        failures.append("2-positivity not certified")
    report(3, "8x8 orthobasis family", failures,
           f"xi_2 = {s.details['xi']:.12f}, xi~_2 = {c.details['xi_tilde']:.1e}")


def test_criterion_4_unrefuted_without_diagonal_condition(report):
    r = dt.maximize_cor52(EXAMPLE_6_5_D, SearchBudget(restarts=2000, seed=0), polish=None)
    rep = dt.prop63_classify(EXAMPLE_6_5_D)
    failures = []
    if r.value > 1 + 1e-9:
        failures.append(f"max value {r.value}")
    if abs(rep.min_diagonal - 1.35) > 1e-12 or rep.positive_sufficient:
        failures.append(f"min diagonal {rep.min_diagonal}")
    report(4, "3x3 D: row functional stays <= 1", failures,
           f"max = {r.value:.16f}, min d_ii = {rep.min_diagonal}")


def test_criterion_5_doubly_scaled(report):
    rng = np.random.default_rng(0)
    failures, worst = [], np.inf
    for i in range(50):
        n = 2 + i % 5
        D = dt.random_doubly_scaled(n, rng)
        rep = dt.prop63_classify(D)
        val, feasible = dt.prop51_condition(D, 2, rep.proof_u)
        worst = min(worst, val)
        if not feasible or val <= 1 + 1e-9:
            failures.append(f"sample {i}: value {val}")
    for n in range(2, 7):
        lam = psd_check(choi(DTypeMap(n * np.eye(n))))[1]
        if lam < -1e-10:
            failures.append(f"nI n={n}: lambda_min {lam}")
    report(5, "doubly scaled D != nI fail 2-positivity", failures, f"smallest value {worst:.4f}")


def test_criterion_6_involution_splits(report):
    failures, count = [], 0
    for n in range(1, 7):
        for pi in involutions(n):
            sp = involution_split(n, pi)
            dev = np.max(np.abs(sp.c1 + sp.c2 - choi(phi_one(n, pi))))
            lam1 = np.linalg.eigvalsh(sp.c1)[0]
            lam2 = np.linalg.eigvalsh(partial_transpose_second(sp.c2, n, n))[0]
            if dev > 1e-12 or lam1 < -1e-10 or lam2 < -1e-10:
                failures.append(f"n={n} pi={pi.image}: {dev}, {lam1}, {lam2}")
            count += 1
    for n in (4, 6):
        half = dt.PermutationSpec(tuple((i + n // 2) % n + 1 for i in range(n)))
        assert half.is_involution()
    report(6, "involution splits are PSD + PPT", failures, f"{count} involutions")


def test_criterion_7_orthonormal_family_identities(report):
    rng = np.random.default_rng(0)
    worst = 0.0
    for i in range(100):
        m, n = ((2, 3), (3, 3), (2, 4))[i % 3]
        fam = random_orthonormal_family(m, n, rng)
        worst = max(worst, np.abs(sum(F @ F.conj().T for F in fam) - n * np.eye(m)).max(),
                    np.abs(sum(F.conj().T @ F for F in fam) - m * np.eye(n)).max())
        P = rank_one_projections(fam)
        for r, Pr in enumerate(P):
            worst = max(worst, np.abs(Pr @ Pr - Pr).max(), abs(np.trace(Pr) - 1),
                        abs(np.linalg.matrix_rank(Pr, tol=1e-8) - 1))
            for s in range(r + 1, len(P)):
                worst = max(worst, np.abs(Pr @ P[s]).max())
    report(7, "orthonormal family sums and projections", [] if worst <= 1e-10 else [worst],
           f"max deviation {worst:.1e}")


def test_criterion_8_oracle_equivalence(report):
    rng = np.random.default_rng(0)
    failures, worst = [], 0.0
    for i in range(100):
        G = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
        C = (G + G.conj().T) / 2 + rng.uniform(0, 6) * np.eye(9)
        L = ChoiMap(C, 3, 3)
        ok, lam = psd_check(C)
        if choi_compression_check(L, np.eye(3)).certified != ok:
            failures.append(f"instance {i}: status mismatch")
        worst = max(worst, abs(schmidt_min(L, 3).value - lam))
    if worst > 1e-8:
        failures.append(f"schmidt min deviation {worst}")
    report(8, "complete positivity oracles agree", failures, f"max deviation {worst:.1e}")
