import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gefair.entropy import BenefitParams, benefits, decompose
from gefair.group_fairness import (LabeledPredictions, check_predicates, compute_group_rates, rates_from_counts,
                                   verify_equivalence_under_equal_base_rates)

TOY_Y = np.array([1, 1, 1, 1, 0, 1, 0, 1, 1, 1])
TOY_H = np.array([1, 0, 1, 0, 1, 1, 1, 1, 1, 0])
TOY_G = np.array([0] * 5 + [1] * 5)


def table(sizes, pos, fp, fn):
    """Expand per-group confusion counts into labelled predictions."""
    ys, hs, gs = [], [], []
    for g, (n, p, f_p, f_n) in enumerate(zip(sizes, pos, fp, fn)):
        neg = n - p
        ys += [1] * p + [0] * neg
        hs += [0] * f_n + [1] * (p - f_n) + [1] * f_p + [0] * (neg - f_p)
        gs += [g] * n
    return LabeledPredictions(np.array(ys), np.array(hs), np.array(gs))


class TestRates:
    def test_toy(self):
        r = compute_group_rates(LabeledPredictions(TOY_Y, TOY_H, TOY_G))
        np.testing.assert_allclose(r.phi_fp, [1 / 5, 1 / 5])
        np.testing.assert_allclose(r.phi_fn, [2 / 5, 1 / 5])
        np.testing.assert_allclose(r.r_pos, [4 / 5, 4 / 5])
        np.testing.assert_allclose(r.r_fp, [1.0, 1.0])
        np.testing.assert_allclose(r.r_fn, [2 / 4, 1 / 4])
        assert r.r_fp_tot == 1.0
        assert r.r_fn_tot == pytest.approx(3 / 8)

    def test_all_correct(self):
        y = np.array([0, 1, 0, 1, 1, 0])
        r = compute_group_rates(LabeledPredictions(y, y, np.array([0, 0, 0, 1, 1, 1])))
        for arr in (r.phi_fp, r.phi_fn, r.r_fp, r.r_fn):
            np.testing.assert_array_equal(arr, 0)

    def test_eight_sample_hand_count(self):
        y = np.array([1, 0, 1, 1, 0, 0, 1, 0])
        h = np.array([1, 1, 0, 1, 0, 1, 0, 0])
        g = np.array([0, 0, 0, 0, 1, 1, 1, 1])
        r = compute_group_rates(LabeledPredictions(y, h, g))
        # group 0: y=1,0,1,1 h=1,1,0,1 -> one FP, one FN; group 1: y=0,0,1,0 h=0,1,0,0 -> one FP, one FN
        np.testing.assert_allclose(r.phi_fp, [0.25, 0.25])
        np.testing.assert_allclose(r.phi_fn, [0.25, 0.25])
        np.testing.assert_allclose(r.r_fp, [1.0, 1 / 3])
        np.testing.assert_allclose(r.r_fn, [1 / 3, 1.0])

    def test_missing_class_rates_absent(self):
        y = np.array([1, 1, 0, 1])
        h = np.array([1, 0, 1, 1])
        r = compute_group_rates(LabeledPredictions(y, h, np.array([0, 0, 1, 1])))
        assert np.isnan(r.r_fp[0])
        assert not np.isnan(r.r_fn[0])
        d = r.as_dict()
        assert d["r_fp"][0] is None
        rep = check_predicates(r)
        assert rep.excluded_fp == (0,)

    def test_empty_group(self):
        with pytest.raises(ValueError):
            compute_group_rates(LabeledPredictions(TOY_Y, TOY_H, TOY_G), n_groups=3)

    def test_validation(self):
        with pytest.raises(ValueError):
            LabeledPredictions(np.array([0, 1]), np.array([0, 2]), np.array([0, 0]))
        with pytest.raises(ValueError):
            LabeledPredictions(np.array([0, 1]), np.array([0]), np.array([0, 0]))

    @given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1), st.integers(0, 2)), min_size=1, max_size=60))
    def test_identity(self, rows):
        y, h, g = (np.array(c) for c in zip(*rows))
        present = np.unique(g)
        g = np.searchsorted(present, g)
        r = compute_group_rates(LabeledPredictions(y, h, g))
        ok = ~np.isnan(r.r_fp)
        np.testing.assert_allclose(r.phi_fp[ok], (r.r_fp * (1 - r.r_pos))[ok], atol=1e-12)
        ok = ~np.isnan(r.r_fn)
        np.testing.assert_allclose(r.phi_fn[ok], (r.r_fn * r.r_pos)[ok], atol=1e-12)
        for arr in (r.phi_fp, r.phi_fn, r.r_pos):
            assert np.all((arr >= 0) & (arr <= 1))


class TestPredicates:
    def test_gap_example(self):
        r = rates_from_counts([10, 10], [5, 5], [2, 2], [2, 4])
        rep = check_predicates(r, 0.01)
        assert not rep.equal_prediction
        assert rep.gaps["phi_fn"] == pytest.approx(0.2)

    def test_equal_prediction_gives_zero_between(self):
        data = table([10, 20], [4, 12], [1, 2], [2, 4])
        r = compute_group_rates(data)
        rep = check_predicates(r)
        assert rep.equal_prediction and rep.equal_error and rep.equal_benefit
        for alpha in (0, 1, 2):
            dec = decompose(benefits(data.predictions, data.labels, BenefitParams(5, 8)), data.groups, alpha)
            assert dec.between <= 1e-10

    def test_equal_benefit_means(self):
        # same phi_fp - phi_fn with different errors
        data = table([10, 10], [5, 5], [3, 1], [2, 0])
        rep = check_predicates(compute_group_rates(data))
        assert rep.equal_benefit and not rep.equal_error
        dec = decompose(benefits(data.predictions, data.labels, BenefitParams(1, 3)), data.groups, 1)
        assert dec.group_means[0] == pytest.approx(dec.group_means[1])

    def test_equalized_odds_with_equal_base_rates(self):
        data = table([10, 20], [4, 8], [3, 6], [1, 2])
        r = compute_group_rates(data)
        rep = check_predicates(r)
        assert rep.equal_base_rates and rep.equalized_odds and rep.equal_prediction
        assert verify_equivalence_under_equal_base_rates(r) is True

    def test_equal_base_rates_unequal_odds(self):
        r = compute_group_rates(table([10, 10], [4, 4], [3, 1], [1, 1]))
        rep = check_predicates(r)
        assert not rep.equalized_odds and not rep.equal_prediction
        assert verify_equivalence_under_equal_base_rates(r) is True

    def test_not_applicable(self):
        r = compute_group_rates(table([10, 10], [4, 6], [1, 1], [1, 1]))
        assert verify_equivalence_under_equal_base_rates(r) is None

    @given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1), st.integers(0, 1)), min_size=2, max_size=40),
           st.sampled_from([1e-9, 0.01, 0.1]))
    def test_inclusion(self, rows, tau):
        y, h, g = (np.array(c) for c in zip(*rows))
        if len(np.unique(g)) < 2:
            return
        rep = check_predicates(compute_group_rates(LabeledPredictions(y, h, g)), tau)
        if rep.equal_prediction:
            assert rep.equal_error and rep.equal_benefit

    def test_zero_between_does_not_imply_equal_prediction(self):
        # equal means (V = 0) but different error fractions
        data = table([10, 10], [5, 5], [3, 1], [2, 0])
        dec = decompose(benefits(data.predictions, data.labels, BenefitParams(1, 3)), data.groups, 2)
        assert dec.between == 0
        assert not check_predicates(compute_group_rates(data)).equal_prediction
