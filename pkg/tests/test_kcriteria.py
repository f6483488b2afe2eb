import numpy as np
import pytest

from kpositivity import maps
from kpositivity.dtype import make_phi
from kpositivity.errors import (
    EmptyPlusList,
    NotAProjection,
    WrongCount,
    WrongRepresentation,
    WrongSplit,
)
from kpositivity.falsify import SearchBudget
from kpositivity.kcriteria import (
    OrthoBasisFamily,
    Status,
    Verdict,
    Witness,
    check_frame_positivity,
    choi_compression_check,
    choi_psd_verdict,
    ck_corollary,
    ck_necessary_last,
    ck_sufficient,
    complete_orthobasis,
    numrange_sufficient,
    ortho_family_from_map,
    recheck_witness,
    schmidt_min,
    schmidt_min_verdict,
    trace_necessary,
    validate_orthobasis,
)

CHOI_TYPE = maps.DTypeMap(make_phi(3, [2, 3, 1], 1))


def rand_c(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def unit(m, n, i, j):
    E = np.zeros((m, n))
    E[i, j] = 1
    return E


def unit_basis(m, n):
    return [unit(m, n, i, j) for i in range(m) for j in range(n)]


def random_family(rng, m, n):
    Q, _ = np.linalg.qr(rand_c(rng, m * n, m * n))
    return [Q[j].reshape(m, n) for j in range(m * n)]


def assert_sound(L, v: Verdict):
    assert v.witness is not None
    ok, value = recheck_witness(L, v.witness, v.k)
    assert ok, value


class TestFramePositivity:
    def test_identity_map(self):
        Q, _ = np.linalg.qr(rand_c(np.random.default_rng(0), 3, 2))
        v = check_frame_positivity(maps.identity_map(3), Q)
        assert v.status is Status.INCONCLUSIVE and v.margin >= -1e-12

    def test_l1_two_frame(self):
        L = maps.l_gamma(3, 1)
        v = check_frame_positivity(L, np.eye(3)[:, :2])
        assert v.refuted and v.margin == pytest.approx(-1)
        assert_sound(L, v)

    def test_choi_type_full_frame(self):
        v = check_frame_positivity(CHOI_TYPE, np.eye(3))
        assert v.refuted
        assert_sound(CHOI_TYPE, v)


class TestChoiCompression:
    def test_full_projection_certifies_cp(self):
        v = choi_compression_check(maps.l_gamma(4, 4), np.eye(4))
        assert v.certified

    def test_l2_rank3(self):
        L = maps.l_gamma(4, 2)
        P = np.diag([1.0, 1.0, 1.0, 0.0])
        v = choi_compression_check(L, P)
        assert v.refuted and v.k == 3 and v.margin == pytest.approx(-1)
        assert_sound(L, v)

    def test_not_a_projection(self):
        with pytest.raises(NotAProjection):
            choi_compression_check(maps.l_gamma(2, 2), np.diag([1.0, 0.5]))

    def test_oracle_agreement(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            G = rand_c(rng, 9, 9)
            C = (G + G.conj().T) / 2 + rng.uniform(0, 6) * np.eye(9)
            v = choi_compression_check(maps.ChoiMap(C, 3, 3), np.eye(3))
            assert v.certified == (np.linalg.eigvalsh(C)[0] >= -1e-9 * max(1, np.abs(np.linalg.eigvalsh(C)).max()))


class TestSchmidtMin:
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_l_gamma(self, n):
        for k in range(1, n + 1):
            r = schmidt_min(maps.l_gamma(n, 1.5), k, SearchBudget(restarts=200))
            assert r.value == pytest.approx(1.5 - k, abs=1e-6)

    def test_l_gamma_brute_force_n2(self):
        # product-vector grid at n=2, k=1 reaches gamma - 1 from above
        C = maps.choi(maps.l_gamma(2, 1.5))
        best = np.inf
        for a in np.linspace(0, np.pi, 25):
            for b in np.linspace(0, 2 * np.pi, 25):
                y = np.array([np.cos(a), np.sin(a) * np.exp(1j * b)])
                x = np.kron(y, y.conj())
                best = min(best, np.real(x.conj() @ C @ x))
        r = schmidt_min(maps.l_gamma(2, 1.5), 1)
        assert r.value <= best + 1e-12
        assert best == pytest.approx(0.5, abs=1e-2)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_cp_map(self, k):
        assert schmidt_min(maps.DTypeMap(3 * np.eye(3)), k).value >= -1e-9

    def test_transpose(self):
        T = maps.transpose_map(2)
        assert schmidt_min(T, 1).value >= -1e-9
        assert schmidt_min(T, 2).value == pytest.approx(-1)

    def test_monotonicity_across_k(self):
        L = CHOI_TYPE
        v = schmidt_min_verdict(L, 2)
        assert v.refuted
        assert recheck_witness(L, v.witness, 3)[0]

    def test_seeds_are_used(self):
        L = maps.l_gamma(3, 1)
        r = schmidt_min(L, 1, SearchBudget(restarts=1), seeds=[np.kron([1, 0, 0], [1, 0, 0])])
        assert r.value == pytest.approx(0, abs=1e-9)
        assert r.restart in (-1, 0)


class TestTraceNecessary:
    def test_cp(self):
        v = trace_necessary(maps.KrausDifference([np.eye(3)]), 2)
        assert v.status is Status.INCONCLUSIVE and v.margin == pytest.approx(2)

    def test_negative_cp(self):
        L = maps.KrausDifference([np.zeros((3, 3))], [np.eye(3)])
        v = trace_necessary(L, 2)
        assert v.refuted and v.margin == pytest.approx(-2)
        assert_sound(L, v)

    @pytest.mark.parametrize("n,gamma", [(2, 0.3), (3, 1.0), (4, 0.1)])
    def test_l_gamma(self, n, gamma):
        L = maps.to_kraus(maps.l_gamma(n, gamma))
        for k in range(1, n + 1):
            A = sum(C.conj().T @ C for C in L.plus) - sum(D.conj().T @ D for D in L.minus)
            oracle = sum(sorted(np.linalg.eigvalsh(A))[:k])
            v = trace_necessary(L, k)
            assert v.margin == pytest.approx(oracle)
            assert v.margin == pytest.approx(k * (gamma * n - 1))

    def test_requires_kraus(self):
        with pytest.raises(WrongRepresentation):
            trace_necessary(maps.l_gamma(2, 1), 1)


class TestNumrange:
    @pytest.mark.parametrize("gamma,expected", [(1.5, True), (1.0, True), (0.8, False)])
    def test_scalar_operators(self, gamma, expected):
        L = maps.KrausDifference([np.sqrt(gamma) * np.eye(3)], [np.eye(3)])
        v = numrange_sufficient(L, 2)
        assert v.details["left"] == pytest.approx(2 * gamma) and v.details["right"] == pytest.approx(2)
        assert v.certified is expected and not v.heuristic

    def test_diagonal_example(self):
        L = maps.KrausDifference([2 * unit(2, 2, 0, 0), 2 * unit(2, 2, 1, 1)], [unit(2, 2, 0, 1)])
        v = numrange_sufficient(L, 1, SearchBudget(restarts=16))
        assert v.status is Status.INCONCLUSIVE
        assert v.details["left"] == pytest.approx(0, abs=1e-9) and v.details["right"] == pytest.approx(1)

    def test_no_minus(self):
        v = numrange_sufficient(maps.KrausDifference([unit(2, 2, 0, 0)]), 1)
        assert v.certified

    def test_heuristic_flagged(self):
        top, bottom = np.vstack([np.eye(2), np.zeros((2, 2))]), np.vstack([np.zeros((2, 2)), np.eye(2)])
        L = maps.KrausDifference([top, bottom], [0.1 * top])
        v = numrange_sufficient(L, 1, SearchBudget(restarts=8))
        assert v.certified and v.heuristic and not v.exact
        assert "heuristic" in v.method

    def test_empty_plus(self):
        with pytest.raises(EmptyPlusList):
            numrange_sufficient(maps.KrausDifference([], [np.eye(2)]), 1)

    def test_requires_kraus(self):
        with pytest.raises(WrongRepresentation):
            numrange_sufficient(maps.l_gamma(2, 1), 1)


def section4_family(p=62):
    a = np.kron(np.eye(4), [[1, 1], [1, 1]]) / 4
    b = np.kron(np.eye(4), [[1, -1], [-1, 1]]) / 4
    return OrthoBasisFamily(tuple(complete_orthobasis([a, b])), p)


class TestValidateOrthobasis:
    def test_matrix_units(self):
        rep = validate_orthobasis(unit_basis(2, 3))
        assert rep.valid and rep.sum_ffdag_deviation < 1e-12 and rep.sum_fdagf_deviation < 1e-12

    def test_8x8_family_norms(self):
        assert validate_orthobasis(section4_family()).valid

    def test_repeated_element(self):
        rep = validate_orthobasis([unit(2, 2, 0, 0)] * 4)
        assert not rep.valid and rep.max_deviation == pytest.approx(1) and rep.worst_pair == (1, 2)

    def test_wrong_count(self):
        with pytest.raises(WrongCount):
            validate_orthobasis(unit_basis(2, 2)[:3])

    def test_random_families(self):
        rng = np.random.default_rng(2)
        for m, n in ((2, 3), (3, 3), (2, 4)):
            rep = validate_orthobasis(random_family(rng, m, n))
            assert rep.valid and rep.sum_ffdag_deviation < 1e-10 and rep.sum_fdagf_deviation < 1e-10


class TestOrthoCriteria:
    def test_8x8_family_sufficient(self):
        fam = section4_family()
        v = ck_sufficient(fam, np.ones(64), 2)
        assert v.exact and v.details["xi"] == pytest.approx(0.5, abs=1e-10)
        assert v.details["threshold"] == pytest.approx(1)

    def test_8x8_family_below_threshold(self):
        g = np.r_[np.full(62, 0.9), 1, 1]
        assert ck_sufficient(section4_family(), g, 2).status is Status.INCONCLUSIVE

    def test_8x8_family_corollary_not_applicable(self):
        v = ck_corollary(section4_family(), np.ones(64), 2)
        assert not v.applicable and abs(v.details["xi_tilde"]) <= 1e-10

    def test_no_minus_part(self):
        fam = OrthoBasisFamily(tuple(unit_basis(2, 2)), 4)
        for k in (1, 2):
            assert ck_sufficient(fam, np.ones(4), k).certified
            assert ck_corollary(fam, np.ones(4), k).certified

    def test_single_minus_agrees_at_k1(self):
        last = np.diag(np.sqrt([0.5, 0.3, 0.2]))
        fam = OrthoBasisFamily(tuple(complete_orthobasis([last])), 8)
        g = np.r_[np.full(8, 2.0), 0.5]
        s, c = ck_sufficient(fam, g, 1), ck_corollary(fam, g, 1)
        assert s.details["threshold"] == pytest.approx(c.details["threshold"]) == pytest.approx(0.5)
        assert s.certified and c.certified

    def test_matrix_unit_minus_not_applicable(self):
        fam = OrthoBasisFamily(tuple(unit_basis(3, 3)), 8)
        g = np.r_[np.full(8, 2.0), 0.5]
        assert not ck_sufficient(fam, g, 1).applicable
        assert not ck_corollary(fam, g, 1).applicable

    def test_sufficient_dominates_corollary(self):
        rng = np.random.default_rng(3)
        hits = 0
        for _ in range(100):
            m, n = ((2, 3), (3, 3), (2, 4))[rng.integers(3)]
            F = random_family(rng, m, n)
            p = m * n - int(rng.integers(1, 3))
            fam = OrthoBasisFamily(tuple(F), p)
            g = np.r_[rng.uniform(1, 5, p), rng.uniform(0, 1, m * n - p)]
            for k in range(1, min(m, n) + 1):
                c = ck_corollary(fam, g, k)
                if c.certified:
                    hits += 1
                    s = ck_sufficient(fam, g, k)
                    assert s.certified and s.margin >= c.margin - 1e-9
        assert hits > 0

    def test_wrong_weight_count(self):
        with pytest.raises(WrongCount):
            ck_sufficient(section4_family(), np.ones(10), 2)

    def test_l_gamma_canonical_family(self):
        for n in (2, 3, 4):
            for k in range(1, n):
                fam, g = ortho_family_from_map(maps.l_gamma(n, k))
                assert ck_sufficient(fam, g, k).exact
                fam, g = ortho_family_from_map(maps.l_gamma(n, k - 0.01))
                assert not ck_sufficient(fam, g, k).certified


def last_family(beta):
    """2x2 family whose last member has squared singular values (beta, 1 - beta)."""
    last = np.diag([np.sqrt(beta), np.sqrt(1 - beta)])
    F = complete_orthobasis([last])
    return OrthoBasisFamily(tuple(F), 3)


class TestNecessaryLast:
    def test_refutes(self):
        fam = last_family(0.6)
        g = np.array([0.5, 0.5, 0.5, 1.0])
        v = ck_necessary_last(fam, g, 1)
        assert v.refuted
        L = fam.to_map(g)
        assert_sound(L, v)
        assert schmidt_min(L, 1).value < 0

    def test_sharp_threshold(self):
        # the bound is gamma_last * beta / (1 - beta) = 1.5 here
        fam = last_family(0.6)
        for gi in (0.7, 1.4):
            g = np.array([gi, gi, gi, 1.0])
            v = ck_necessary_last(fam, g, 1)
            assert v.refuted and v.details["threshold"] == pytest.approx(1.5)
            assert_sound(fam.to_map(g), v)
            assert schmidt_min(fam.to_map(g), 1).value < 0

    def test_hypothesis_fails(self):
        fam = last_family(0.6)
        v = ck_necessary_last(fam, np.array([0.5, 1.6, 0.5, 1.0]), 1)
        assert v.status is Status.INCONCLUSIVE

    def test_threshold_is_tight_for_rank_one_test(self):
        # at gamma_i = 1.5 + 0.05 the map is positive on every product vector tried
        fam = last_family(0.6)
        g = np.array([1.55, 1.55, 1.55, 1.0])
        assert schmidt_min(fam.to_map(g), 1).value >= -1e-9

    def test_wrong_split(self):
        with pytest.raises(WrongSplit):
            ck_necessary_last(section4_family(), np.ones(64), 2)


class TestCanonicalFamily:
    def test_reconstructs_map(self):
        rng = np.random.default_rng(4)
        G = rand_c(rng, 6, 6)
        L = maps.ChoiMap((G + G.conj().T) / 2, 3, 2)
        fam, g = ortho_family_from_map(L)
        assert validate_orthobasis(fam).valid
        assert np.allclose(maps.choi(fam.to_map(g)), maps.choi(L))

    def test_cp_map_has_no_minus(self):
        fam, _ = ortho_family_from_map(maps.DTypeMap(3 * np.eye(3)))
        assert fam.p == 9


class TestVerdictJson:
    def test_round_trip(self):
        v = schmidt_min_verdict(CHOI_TYPE, 2)
        v2 = Verdict.from_json(v.to_json())
        assert v2.status is v.status and v2.k == v.k and v2.margin == pytest.approx(v.margin)
        assert recheck_witness(CHOI_TYPE, v2.witness, 2)[0]

    def test_witness_kinds(self):
        w = Witness("frame", np.eye(3)[:, :2])
        assert Witness.from_json(w.to_json()).data.shape == (3, 2)


def test_choi_psd_verdict_levels():
    assert choi_psd_verdict(maps.l_gamma(3, 3), 3).exact
    v = choi_psd_verdict(maps.l_gamma(3, 2.99), 3)
    assert v.refuted
    # at k=1 the bottom eigenvector has full Schmidt rank, so nothing is decided
    assert choi_psd_verdict(maps.l_gamma(3, 2.99), 1).status is Status.INCONCLUSIVE
