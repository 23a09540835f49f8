import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gefair.entropy import (BenefitParams, Branch, EntropyOrder, FiniteDistribution, GroupPartition,
                            OutcomeCounts, apply_transfer, benefit_of, benefits, between_group_from_counts,
                            decompose, decompose_distribution, entropy_from_count_arrays, entropy_from_counts,
                            entropy_index, eval_f_alpha, f_alpha, population_entropy_exact)

ORDERS = (0.0, 0.5, 1.0, 2.0, 3.0)

# two groups of five; C FN C FN FP | C FP C C FN with a=1, c=3
TOY_B = np.array([3, 2, 3, 2, 4, 3, 4, 3, 3, 2], dtype=float)
TOY_G = np.array([0] * 5 + [1] * 5)


def brute_entropy(b, alpha):
    """Independent scalar-loop oracle for I_alpha."""
    b = [float(v) for v in b]
    n = len(b)
    mu = sum(b) / n
    if alpha == 0:
        return -sum(math.log(v / mu) for v in b) / n
    if alpha == 1:
        return sum((v / mu) * math.log(v / mu) for v in b) / n
    return sum((v / mu) ** alpha - 1 for v in b) / (n * alpha * (alpha - 1))


benefit_lists = st.lists(st.floats(0.5, 20.0, allow_nan=False), min_size=1, max_size=30)
orders = st.sampled_from(ORDERS)


class TestOrder:
    def test_branch_by_exact_equality(self):
        assert EntropyOrder.of(0).branch is Branch.ZERO
        assert EntropyOrder.of(1).branch is Branch.ONE
        assert EntropyOrder.of(1.0000001).branch is Branch.OTHER
        assert EntropyOrder.of(2).branch is Branch.OTHER

    def test_inconsistent_branch_rejected(self):
        with pytest.raises(ValueError):
            EntropyOrder(1.0, Branch.OTHER)
        with pytest.raises(ValueError):
            EntropyOrder(2.0, Branch.ZERO)

    @pytest.mark.parametrize("bad", [-0.5, float("inf"), float("nan")])
    def test_invalid_values(self, bad):
        with pytest.raises(ValueError):
            EntropyOrder.of(bad)


class TestKernel:
    def test_examples(self):
        assert eval_f_alpha(1, 1.0) == 0.0
        assert eval_f_alpha(0, math.e) == pytest.approx(-1.0, abs=1e-15)
        assert eval_f_alpha(2, 3.0) == 4.0

    @pytest.mark.parametrize("alpha", ORDERS)
    def test_zero_at_one(self, alpha):
        assert eval_f_alpha(alpha, 1.0) == 0.0

    @pytest.mark.parametrize("x", [0.0, -1.0])
    def test_domain(self, x):
        with pytest.raises(ValueError):
            eval_f_alpha(2, x)

    @given(orders, st.floats(0.05, 20), st.floats(0.05, 20), st.floats(0, 1))
    def test_convex(self, alpha, x, y, t):
        mid = t * x + (1 - t) * y
        lhs = eval_f_alpha(alpha, mid)
        rhs = t * eval_f_alpha(alpha, x) + (1 - t) * eval_f_alpha(alpha, y)
        assert lhs <= rhs + 1e-12 * (1 + abs(rhs))

    def test_vectorised(self):
        x = np.array([0.5, 1.0, 2.0])
        np.testing.assert_allclose(f_alpha(1, x), x * np.log(x))


class TestBenefits:
    def test_examples(self):
        p = BenefitParams(5, 8)
        assert benefit_of(1, 1, p) == 8
        assert benefit_of(1, 0, p) == 13
        assert benefit_of(0, 1, p) == 3
        assert benefit_of(0, 0, p) == 8

    def test_vector(self):
        p = BenefitParams(1, 3)
        y = [1, 1, 1, 1, 0, 1, 0, 1, 1, 1]
        h = [1, 0, 1, 0, 1, 1, 1, 1, 1, 0]
        np.testing.assert_array_equal(benefits(h, y, p), TOY_B)

    @pytest.mark.parametrize("a,c", [(0, 3), (3, 3), (4, 3), (1, 1.5), (-1, 2)])
    def test_invalid_params(self, a, c):
        with pytest.raises(ValueError):
            BenefitParams(a, c)

    def test_ratio(self):
        assert BenefitParams(5, 8).r == 1.6

    def test_non_binary(self):
        with pytest.raises(ValueError):
            benefit_of(2, 1, BenefitParams(1, 3))
        with pytest.raises(ValueError):
            benefits([0, 2], [0, 1], BenefitParams(1, 3))


class TestEntropyIndex:
    def test_constant_is_zero(self):
        assert entropy_index([3, 3, 3, 3], 1) == 0.0

    def test_two_point_alpha2(self):
        expected = (1 / (2 * 2 * 1)) * ((1 / 1.5) ** 2 + (2 / 1.5) ** 2 - 2)
        assert entropy_index([1, 2], 2) == pytest.approx(expected, rel=1e-14)

    def test_toy_theil(self):
        # frozen from the scalar oracle: (1/n) sum (b/mu) ln(b/mu), mu = 2.9
        assert entropy_index(TOY_B, 1) == pytest.approx(0.029372790674483534, rel=1e-12)

    def test_mean_scaled_variant(self):
        # sum b ln(b/mu) / n, i.e. mu times the index, is 0.0852
        mu = TOY_B.mean()
        assert mu * entropy_index(TOY_B, 1) == pytest.approx(0.0848, abs=5e-4)

    def test_single_individual(self):
        assert entropy_index([7.0], 2) == 0.0

    def test_errors(self):
        with pytest.raises(ValueError):
            entropy_index([], 1)
        with pytest.raises(ValueError):
            entropy_index([0.0, 1.0], 0)
        with pytest.raises(ValueError):
            entropy_index([-1.0, 2.0], 2)

    def test_zero_allowed_off_log_branch(self):
        assert entropy_index([0.0, 2.0], 2) == pytest.approx(brute_entropy([0, 2], 2))
        assert entropy_index([0.0, 2.0], 1) == pytest.approx(math.log(2))

    @given(benefit_lists, orders)
    def test_matches_oracle(self, b, alpha):
        if len(set(b)) == 1:
            return
        assert entropy_index(b, alpha) == pytest.approx(max(brute_entropy(b, alpha), 0), rel=1e-9, abs=1e-12)


class TestAxioms:
    @given(benefit_lists, orders, st.randoms(use_true_random=False))
    def test_symmetry(self, b, alpha, rnd):
        perm = list(b)
        rnd.shuffle(perm)
        base = entropy_index(b, alpha)
        assert entropy_index(perm, alpha) == pytest.approx(base, rel=1e-12, abs=1e-15)

    @given(benefit_lists, orders)
    def test_nonnegative_and_zero_iff_constant(self, b, alpha):
        v = entropy_index(b, alpha)
        assert v >= 0
        if len(set(b)) == 1:
            assert v == 0
        elif max(b) - min(b) > 1e-6 * max(b):
            assert v > 0

    @given(benefit_lists, orders, st.sampled_from([2, 3, 5]))
    def test_replication(self, b, alpha, k):
        assert entropy_index(b * k, alpha) == pytest.approx(entropy_index(b, alpha), rel=1e-10, abs=1e-14)

    @given(benefit_lists, orders, st.sampled_from([0.5, 2.0, 10.0]))
    def test_scale_invariance(self, b, alpha, r):
        scaled = [r * v for v in b]
        assert entropy_index(scaled, alpha) == pytest.approx(entropy_index(b, alpha), rel=1e-10, abs=1e-14)

    @settings(max_examples=300)
    @given(st.lists(st.floats(0.5, 20.0), min_size=2, max_size=30), orders, st.data())
    def test_pigou_dalton(self, b, alpha, data):
        i = int(np.argmax(b))
        j = int(np.argmin(b))
        gap = b[i] - b[j]
        if gap < 1e-3:
            return
        delta = data.draw(st.floats(gap * 0.01, gap * 0.49))
        after = apply_transfer(b, i, j, delta)
        assert entropy_index(after, alpha) < entropy_index(b, alpha)


class TestTransfer:
    def test_example(self):
        out = apply_transfer([4, 2], 0, 1, 0.5)
        np.testing.assert_array_equal(out, [3.5, 2.5])
        for alpha in (0, 1, 2):
            assert entropy_index(out, alpha) < entropy_index([4, 2], alpha)

    def test_boundary_case(self):
        np.testing.assert_allclose(apply_transfer([5, 1, 3], 0, 1, 1.9), [3.1, 2.9, 3])

    def test_mean_preserved(self):
        b = [5.0, 1.0, 3.0, 2.5]
        assert np.sum(apply_transfer(b, 0, 1, 0.7)) == pytest.approx(np.sum(b), rel=1e-15)

    @pytest.mark.parametrize("args", [(0, 1, 2.0), (1, 0, 0.5), (0, 0, 0.1), (0, 1, -0.1)])
    def test_preconditions(self, args):
        with pytest.raises(ValueError):
            apply_transfer([4.0, 2.0], *args)


class TestCounts:
    def test_all_correct(self):
        for alpha in ORDERS:
            assert entropy_from_counts(OutcomeCounts(10, 0, 0), BenefitParams(5, 8), alpha) == 0.0

    def test_expansion_example(self):
        got = entropy_from_counts(OutcomeCounts(4, 1, 1), BenefitParams(5, 8), 2)
        assert got == pytest.approx(entropy_index([13, 3, 8, 8], 2), rel=1e-13)

    def test_toy_counts(self):
        got = entropy_from_counts(OutcomeCounts(10, 2, 3), BenefitParams(1, 3), 1)
        assert got == pytest.approx(entropy_index(TOY_B, 1), rel=1e-13)

    def test_invalid(self):
        with pytest.raises(ValueError):
            OutcomeCounts(3, 2, 2)
        with pytest.raises(ValueError):
            entropy_from_counts(OutcomeCounts(0, 0, 0), BenefitParams(1, 3), 1)

    @pytest.mark.parametrize("alpha", ORDERS)
    @pytest.mark.parametrize("a,c", [(1, 3), (5, 8), (2, 3.5)])
    def test_exhaustive_equivalence(self, alpha, a, c):
        p = BenefitParams(a, c)
        for n in range(1, 13):
            for fp, fn in itertools.product(range(n + 1), repeat=2):
                if fp + fn > n:
                    continue
                counts = OutcomeCounts(n, fp, fn)
                expected = entropy_index(counts.benefit_vector(p), alpha)
                assert entropy_from_counts(counts, p, alpha) == pytest.approx(expected, rel=1e-11, abs=1e-15)

    def test_vectorised_matches_scalar(self):
        p = BenefitParams(5, 8)
        fp = np.array([0, 3, 5, 1])
        fn = np.array([0, 2, 0, 9])
        out = entropy_from_count_arrays(10, fp, fn, p, 2)
        for k in range(4):
            assert out[k] == entropy_from_counts(OutcomeCounts(10, int(fp[k]), int(fn[k])), p, 2)


class TestDecompose:
    def test_toy_means_and_weights(self):
        rep = decompose(TOY_B, TOY_G, 1)
        np.testing.assert_allclose(rep.group_means, [2.8, 3.0], rtol=1e-15)
        np.testing.assert_allclose(rep.weights, [14 / 29, 15 / 29], rtol=1e-14)
        assert rep.global_mean == pytest.approx(2.9)

    def test_toy_values_from_oracle(self):
        rep = decompose(TOY_B, TOY_G, 1)
        g1 = brute_entropy(TOY_B[:5], 1)
        g2 = brute_entropy(TOY_B[5:], 1)
        v = brute_entropy([2.8] * 5 + [3.0] * 5, 1)
        np.testing.assert_allclose(rep.group_entropies, [g1, g2], rtol=1e-12)
        assert rep.between == pytest.approx(v, rel=1e-10)
        np.testing.assert_allclose(rep.within_terms, [14 / 29 * g1, 15 / 29 * g2], rtol=1e-12)
        # frozen values
        assert rep.total == pytest.approx(0.029372790674483534, rel=1e-12)
        np.testing.assert_allclose(rep.group_entropies, [0.03534057558512761, 0.022653204906052972], rtol=1e-12)

    def test_toy_scaled_variant(self):
        # mean-scaled Theil terms, b ln(b / mu_g) per group
        rep = decompose(TOY_B, TOY_G, 1)
        scaled = rep.group_entropies * rep.group_means
        np.testing.assert_allclose(scaled, [0.0990, 0.0680], atol=5e-4)
        np.testing.assert_allclose(rep.weights * scaled, [0.0478, 0.0352], atol=5e-4)
        assert rep.between * rep.global_mean == pytest.approx(0.0018, abs=5e-4)

    def test_single_group(self):
        rep = decompose(TOY_B, np.zeros(10, dtype=int), 2)
        assert rep.between == 0
        assert rep.within == pytest.approx(rep.total, rel=1e-14)

    def test_empty_group(self):
        with pytest.raises(ValueError):
            decompose([1, 2, 3], [0, 2, 2], 1)
        with pytest.raises(ValueError):
            GroupPartition.from_ids([0, 0, 1], n_groups=3)

    def test_partition_length_mismatch(self):
        with pytest.raises(ValueError):
            decompose([1, 2, 3], [0, 1], 1)

    @settings(max_examples=300)
    @given(st.integers(1, 50), st.integers(1, 5), orders, st.integers(0, 2**32 - 1))
    def test_identity(self, n, G, alpha, seed):
        rng = np.random.default_rng(seed)
        G = min(G, n)
        groups = np.concatenate([np.arange(G), rng.integers(0, G, n - G)])
        b = rng.uniform(0.5, 10, n)
        rep = decompose(b, groups, alpha)
        assert rep.within + rep.between == pytest.approx(rep.total, rel=1e-10, abs=1e-14)
        assert rep.between >= 0
        np.testing.assert_allclose(rep.weights, rep.group_shares * (rep.group_means / rep.global_mean) ** alpha)
        if alpha in (0.0, 1.0):
            assert math.fsum(rep.weights) == pytest.approx(1.0, abs=1e-12)

    def test_between_from_counts_matches(self):
        p = BenefitParams(1, 3)
        v = between_group_from_counts([5, 5], [1, 1], [2, 1], p, 1)
        assert float(v) == pytest.approx(decompose(TOY_B, TOY_G, 1).between, rel=1e-12)

    def test_compensated_sum_at_scale(self):
        rng = np.random.default_rng(7)
        b = rng.choice([3.0, 8.0, 13.0], size=100_000, p=[0.1, 0.8, 0.1])
        g = rng.integers(0, 3, b.size)
        for alpha in (0, 1, 2):
            rep = decompose(b, g, alpha)
            assert rep.within + rep.between == pytest.approx(rep.total, rel=1e-10)


class TestDistribution:
    def test_uniform_matches_index(self):
        for alpha in ORDERS:
            d = FiniteDistribution.uniform(TOY_B, TOY_G)
            assert population_entropy_exact(d, alpha) == pytest.approx(entropy_index(TOY_B, alpha), rel=1e-12)

    def test_mass_expansion(self):
        d = FiniteDistribution(np.array([2.0, 4.0]), np.array([0.25, 0.75]), None)
        assert population_entropy_exact(d, 2) == pytest.approx(entropy_index([2, 4, 4, 4], 2), rel=1e-13)

    def test_constant(self):
        d = FiniteDistribution(np.array([5.0, 5.0, 5.0]), np.array([0.2, 0.3, 0.5]), None)
        for alpha in ORDERS:
            assert population_entropy_exact(d, alpha) == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            FiniteDistribution(np.array([1.0, 2.0]), np.array([0.5, 0.4]), None)
        with pytest.raises(ValueError):
            FiniteDistribution(np.array([1.0, 2.0]), np.array([1.0, 0.0]), None)
        with pytest.raises(ValueError):
            FiniteDistribution(np.array([-1.0, 2.0]), np.array([0.5, 0.5]), None)

    def test_uniform_decomposition_matches_sample(self):
        a = decompose(TOY_B, TOY_G, 1)
        b = decompose_distribution(FiniteDistribution.uniform(TOY_B, TOY_G), 1)
        for field in ("total", "between", "within"):
            assert getattr(b, field) == pytest.approx(getattr(a, field), rel=1e-12)
        np.testing.assert_allclose(b.weights, a.weights, rtol=1e-12)

    def test_one_group(self):
        d = FiniteDistribution(np.array([2.0, 4.0]), np.array([0.3, 0.7]), None)
        assert decompose_distribution(d, 2).between == 0.0

    @given(st.integers(2, 30), st.integers(1, 4), orders, st.integers(0, 2**32 - 1))
    def test_identity(self, k, G, alpha, seed):
        rng = np.random.default_rng(seed)
        G = min(G, k)
        groups = np.concatenate([np.arange(G), rng.integers(0, G, k - G)])
        m = rng.dirichlet(np.ones(k))
        m[-1] = 1 - math.fsum(m[:-1])
        if m[-1] <= 0:
            return
        d = FiniteDistribution(rng.uniform(1, 10, k), m, groups)
        rep = decompose_distribution(d, alpha)
        assert rep.within + rep.between == pytest.approx(rep.total, rel=1e-10, abs=1e-14)
