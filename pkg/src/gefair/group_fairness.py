"""Group-level error fractions, conditional rates and fairness predicates."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

DEFAULT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class LabeledPredictions:
    labels: np.ndarray
    predictions: np.ndarray
    groups: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.labels)
        h = np.asarray(self.predictions)
        g = np.asarray(self.groups)
        if not (y.shape == h.shape == g.shape) or y.ndim != 1:
            raise ValueError("labels, predictions and groups must be 1-D and of equal length")
        if y.size == 0:
            raise ValueError("no samples")
        if not (np.isin(y, (0, 1)).all() and np.isin(h, (0, 1)).all()):
            raise ValueError("labels and predictions must be binary")
        object.__setattr__(self, "labels", y.astype(np.int64))
        object.__setattr__(self, "predictions", h.astype(np.int64))
        object.__setattr__(self, "groups", g.astype(np.int64))

    @property
    def n(self) -> int:
        return self.labels.size


@dataclass(frozen=True)
class GroupRates:
    """Per-group fractions and rates.

    ``r_fp`` is NaN for a group without negatives and ``r_fn`` is NaN for a
    group without positives; those rates do not exist.
    """

    sizes: np.ndarray
    phi_fp: np.ndarray
    phi_fn: np.ndarray
    r_fp: np.ndarray
    r_fn: np.ndarray
    r_pos: np.ndarray
    r_fp_tot: float
    r_fn_tot: float

    @property
    def n_groups(self) -> int:
        return self.sizes.size

    def as_dict(self) -> dict:
        def clean(a):
            return [None if np.isnan(v) else float(v) for v in a]

        return {
            "sizes": self.sizes.tolist(),
            "phi_fp": self.phi_fp.tolist(),
            "phi_fn": self.phi_fn.tolist(),
            "r_fp": clean(self.r_fp),
            "r_fn": clean(self.r_fn),
            "r_pos": self.r_pos.tolist(),
            "r_fp_tot": None if np.isnan(self.r_fp_tot) else self.r_fp_tot,
            "r_fn_tot": None if np.isnan(self.r_fn_tot) else self.r_fn_tot,
        }


def _ratio(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan)


def rates_from_counts(sizes, positives, n_fp, n_fn) -> GroupRates:
    sizes = np.asarray(sizes, dtype=np.int64)
    positives = np.asarray(positives, dtype=np.int64)
    fp = np.asarray(n_fp, dtype=float)
    fn = np.asarray(n_fn, dtype=float)
    if np.any(sizes <= 0):
        raise ValueError(f"empty group(s): {np.flatnonzero(sizes <= 0).tolist()}")
    negatives = sizes - positives
    return GroupRates(
        sizes=sizes,
        phi_fp=fp / sizes,
        phi_fn=fn / sizes,
        r_fp=_ratio(fp, negatives),
        r_fn=_ratio(fn, positives),
        r_pos=positives / sizes,
        r_fp_tot=float(_ratio(fp.sum(), negatives.sum())),
        r_fn_tot=float(_ratio(fn.sum(), positives.sum())),
    )


def compute_group_rates(data: LabeledPredictions, n_groups: int | None = None) -> GroupRates:
    G = int(data.groups.max()) + 1 if n_groups is None else n_groups
    y, h, g = data.labels, data.predictions, data.groups
    sizes = np.bincount(g, minlength=G)
    positives = np.bincount(g, weights=y, minlength=G).astype(np.int64)
    fp = np.bincount(g, weights=(h == 1) & (y == 0), minlength=G)
    fn = np.bincount(g, weights=(h == 0) & (y == 1), minlength=G)
    return rates_from_counts(sizes, positives, fp, fn)


def _gap(values: np.ndarray) -> float:
    v = values[~np.isnan(values)]
    if v.size < 2:
        return 0.0
    return float(max(abs(x - y) for x, y in combinations(v, 2)))


@dataclass(frozen=True)
class FairnessPredicateReport:
    tolerance: float
    equal_prediction: bool
    equal_error: bool
    equal_benefit: bool
    equalized_odds: bool
    equal_base_rates: bool
    gaps: dict
    # groups left out of the equalized-odds comparison for lack of negatives / positives
    excluded_fp: tuple
    excluded_fn: tuple

    def as_dict(self) -> dict:
        return {
            "tolerance": self.tolerance,
            "equal_prediction": self.equal_prediction,
            "equal_error": self.equal_error,
            "equal_benefit": self.equal_benefit,
            "equalized_odds": self.equalized_odds,
            "equal_base_rates": self.equal_base_rates,
            "gaps": dict(self.gaps),
            "excluded_fp": list(self.excluded_fp),
            "excluded_fn": list(self.excluded_fn),
        }


def check_predicates(rates: GroupRates, tolerance: float = DEFAULT_TOLERANCE) -> FairnessPredicateReport:
    """Evaluate each group predicate as "largest pairwise gap <= tolerance".

    Error and benefit combine two fractions, so they are compared at twice
    the tolerance; that keeps equal prediction a special case of both.
    """
    gaps = {
        "phi_fp": _gap(rates.phi_fp),
        "phi_fn": _gap(rates.phi_fn),
        "error": _gap(rates.phi_fp + rates.phi_fn),
        "benefit": _gap(rates.phi_fp - rates.phi_fn),
        "r_fp": _gap(rates.r_fp),
        "r_fn": _gap(rates.r_fn),
        "r_pos": _gap(rates.r_pos),
    }
    tau = tolerance
    eq_pred = gaps["phi_fp"] <= tau and gaps["phi_fn"] <= tau
    report = FairnessPredicateReport(
        tolerance=tau,
        equal_prediction=eq_pred,
        equal_error=gaps["error"] <= 2 * tau,
        equal_benefit=gaps["benefit"] <= 2 * tau,
        equalized_odds=gaps["r_fp"] <= tau and gaps["r_fn"] <= tau,
        equal_base_rates=gaps["r_pos"] <= tau,
        gaps=gaps,
        excluded_fp=tuple(np.flatnonzero(np.isnan(rates.r_fp)).tolist()),
        excluded_fn=tuple(np.flatnonzero(np.isnan(rates.r_fn)).tolist()),
    )
    assert not report.equal_prediction or (report.equal_error and report.equal_benefit)
    return report


def verify_equivalence_under_equal_base_rates(rates: GroupRates,
                                              tolerance: float = DEFAULT_TOLERANCE) -> bool | None:
    """Self-check that equalized odds and equal prediction agree when base rates match.

    Returns None when base rates differ by more than ``tolerance`` (the check
    does not apply). Equalized odds is compared on r * (share of the
    conditioning class), using the common base rate, so both predicates are
    measured on the same scale as the fractions.
    """
    report = check_predicates(rates, tolerance)
    if not report.equal_base_rates:
        return None
    base = float(np.mean(rates.r_pos))
    scaled = GroupRates(
        sizes=rates.sizes,
        phi_fp=np.where(np.isnan(rates.r_fp), 0.0, rates.r_fp) * (1 - base),
        phi_fn=np.where(np.isnan(rates.r_fn), 0.0, rates.r_fn) * base,
        r_fp=rates.r_fp,
        r_fn=rates.r_fn,
        r_pos=rates.r_pos,
        r_fp_tot=rates.r_fp_tot,
        r_fn_tot=rates.r_fn_tot,
    )
    odds = check_predicates(scaled, tolerance).equal_prediction
    return report.equal_prediction == odds
