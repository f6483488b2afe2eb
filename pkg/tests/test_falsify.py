import numpy as np
import pytest
from scipy import stats

from kpositivity import maps
from kpositivity.errors import KOutOfRange
from kpositivity.falsify import (
    SearchBudget,
    argmin_merge,
    random_schmidt_vector,
    refine_schmidt,
    run_restarts,
    sample_u,
    schmidt_rank,
)
from kpositivity.kcriteria import schmidt_min


class TestBudget:
    def test_defaults(self):
        b = SearchBudget()
        assert (b.restarts, b.max_iters, b.tol) == (64, 500, 1e-8)

    @pytest.mark.parametrize("kw", [{"restarts": 0}, {"max_iters": 0}, {"tol": 0.0}, {"seed": -1}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SearchBudget(**kw)

    def test_json_round_trip(self):
        b = SearchBudget(restarts=5, max_iters=7, seed=11, tol=1e-6)
        assert SearchBudget.from_json(b.to_json()) == b


class TestRefine:
    def test_cp_objective_nonnegative(self):
        C = maps.choi(maps.DTypeMap(3 * np.eye(3)))
        rng = np.random.default_rng(0)
        r = refine_schmidt(C, 3, 3, 1, random_schmidt_vector(3, 3, 1, rng))
        assert r.value >= -1e-9

    def test_l1_reaches_minus_one(self):
        C = maps.choi(maps.l_gamma(3, 1))
        rng = np.random.default_rng(1)
        r = refine_schmidt(C, 3, 3, 2, random_schmidt_vector(3, 3, 2, rng), max_iters=50)
        assert r.value == pytest.approx(-1, abs=1e-8)
        assert r.iterations <= 50

    def test_full_rank_is_global_minimum(self):
        rng = np.random.default_rng(2)
        G = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
        C = (G + G.conj().T) / 2
        r = refine_schmidt(C, 3, 3, 3, random_schmidt_vector(3, 3, 3, rng))
        assert r.value == pytest.approx(np.linalg.eigvalsh(C)[0])

    def test_monotone_and_rank_preserving(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            G = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
            C = (G + G.conj().T) / 2
            k = int(rng.integers(1, 3))
            r = refine_schmidt(C, 3, 4, k, random_schmidt_vector(3, 4, k, rng))
            h = np.array(r.history)
            assert np.all(np.diff(h) <= 1e-12)
            assert np.linalg.norm(r.vector) == pytest.approx(1)
            assert schmidt_rank(r.vector, 3, 4, 1e-8) <= k
            assert np.real(r.vector.conj() @ C @ r.vector) == pytest.approx(r.value, abs=1e-10)

    def test_k_out_of_range(self):
        with pytest.raises(KOutOfRange):
            refine_schmidt(np.eye(4), 2, 2, 3, np.ones(4))

    def test_start_rank_checked(self):
        with pytest.raises(ValueError):
            refine_schmidt(np.eye(9), 3, 3, 1, np.eye(3).reshape(-1))


class TestDeterminism:
    def test_same_seed_same_result(self):
        L = maps.DTypeMap(np.random.default_rng(4).uniform(0, 2, (4, 4)))
        b = SearchBudget(restarts=12, seed=99)
        r1, r2 = schmidt_min(L, 2, b), schmidt_min(L, 2, b)
        assert r1.value == r2.value and r1.restart == r2.restart
        assert np.array_equal(r1.vector, r2.vector)

    def test_independent_of_worker_count(self):
        L = maps.DTypeMap(np.random.default_rng(5).uniform(0, 2, (4, 4)))
        b = SearchBudget(restarts=16, seed=3)
        r1 = schmidt_min(L, 2, b, n_jobs=1)
        r4 = schmidt_min(L, 2, b, n_jobs=4)
        assert r1.restart == r4.restart
        assert r1.value == pytest.approx(r4.value, abs=1e-12)

    def test_run_restarts_order(self):
        b = SearchBudget(restarts=8, seed=1)
        seq = run_restarts(lambda i, rng: (i, rng.random()), b)
        par = run_restarts(lambda i, rng: (i, rng.random()), b, n_jobs=3)
        assert seq == par
        assert [i for i, _ in seq] == list(range(8))

    def test_argmin_tie_breaks_low_index(self):
        assert argmin_merge([3.0, 1.0, 1.0, 2.0]) == 1


class TestSampleU:
    def test_normalized(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            U = sample_u(3, 5, rng)
            assert abs(np.trace(U.conj().T @ U).real - 1) < 1e-14

    def test_seeded(self):
        a = [sample_u(2, 3, np.random.default_rng(7)) for _ in range(2)]
        assert np.array_equal(a[0], a[1])

    def test_column_norm_distribution(self):
        # a column carries a Beta(k, k(n-1)) share of the total squared norm
        rng = np.random.default_rng(2024)
        k, n = 2, 4
        share = np.array([np.linalg.norm(sample_u(k, n, rng)[:, 0]) ** 2 for _ in range(10_000)])
        assert stats.kstest(share, stats.beta(k, k * (n - 1)).cdf).pvalue > 0.01
