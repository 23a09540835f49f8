"""Lagrangian game between a thresholding learner and a two-point Nature.

Nature plays lambda in {0, lambda_max} with Hedge weights; the learner
best-responds with the grid hypothesis minimising the Lagrangian. The output
is the uniform mixture over the learner's responses.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .bounds import entropy_upper_bound
from .entropy import BenefitParams, EntropyOrder, OrderLike, OutcomeCounts, as_order, entropy_from_counts
from .learner import HypothesisSpace, ThresholdHypothesis

log = logging.getLogger(__name__)

LAMBDA_MODES = ("sampled", "expected")
Z_95 = 1.959963984540054


class SolverGuaranteeError(AssertionError):
    """A full-length run violated the guaranteed entropy bound."""


@dataclass(frozen=True)
class SolverConfig:
    gamma: float
    order: EntropyOrder
    lambda_max: float = 20.0
    nu: float = 0.005
    t_cap: int | None = 10_000
    seed: int = 0
    lambda_mode: str = "sampled"

    def __post_init__(self):
        object.__setattr__(self, "order", as_order(self.order))
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.lambda_max > 0:
            raise ValueError("lambda_max must be positive")
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if self.t_cap is not None and self.t_cap < 1:
            raise ValueError("t_cap must be at least 1")
        if self.lambda_mode not in LAMBDA_MODES:
            raise ValueError(f"lambda_mode must be one of {LAMBDA_MODES}")


@dataclass(frozen=True)
class PayoffScaling:
    a_alpha: float
    b_const: float

    def scale(self, lagrangian_value):
        return (lagrangian_value + self.b_const) / self.a_alpha


def payoff_scaling(cfg: SolverConfig, params: BenefitParams) -> PayoffScaling:
    cap = entropy_upper_bound(cfg.order, params.r)
    return PayoffScaling(1 + cfg.lambda_max * (cfg.gamma + cap), cfg.gamma * cfg.lambda_max)


def theoretical_iterations(cfg: SolverConfig, params: BenefitParams) -> int:
    a = payoff_scaling(cfg, params).a_alpha
    return math.ceil(4 * a * a * math.log(2) / cfg.nu ** 2)


def lagrangian(counts: OutcomeCounts, lam: float, cfg: SolverConfig, params: BenefitParams) -> float:
    if not 0 <= lam <= cfg.lambda_max:
        raise ValueError(f"lambda must lie in [0, {cfg.lambda_max}]")
    return counts.risk + lam * (entropy_from_counts(counts, params, cfg.order) - cfg.gamma)


def _argmin(values: np.ndarray) -> int:
    # np.argmin returns the first minimiser, i.e. the lowest threshold index
    return int(np.argmin(values))


def best_response(lam: float, space: HypothesisSpace, cfg: SolverConfig, params: BenefitParams) -> ThresholdHypothesis:
    risks = space.risks()
    ent = space.entropies(params, cfg.order)
    return space.hypothesis(_argmin(risks + lam * (ent - cfg.gamma)))


@dataclass(frozen=True)
class RandomizedClassifier:
    """Finite mixture over threshold hypotheses."""

    indices: np.ndarray
    thresholds: np.ndarray
    weights: np.ndarray
    lambda_bar: float

    def __post_init__(self):
        if np.any(self.weights < 0) or abs(math.fsum(self.weights) - 1) > 1e-12:
            raise ValueError("mixture weights must be non-negative and sum to 1")

    @classmethod
    def point_mass(cls, space: HypothesisSpace, index: int, lambda_bar: float = 0.0):
        return cls(np.array([index]), space.thresholds[[index]], np.array([1.0]), lambda_bar)

    def dense(self, size: int) -> np.ndarray:
        out = np.zeros(size)
        out[self.indices] = self.weights
        return out

    def as_dict(self) -> dict:
        return {
            "indices": self.indices.tolist(),
            "thresholds": self.thresholds.tolist(),
            "weights": self.weights.tolist(),
            "lambda_bar": self.lambda_bar,
        }


@dataclass
class SolveTrace:
    lambda_hat: np.ndarray
    choices: np.ndarray
    avg_error: np.ndarray
    avg_entropy: np.ndarray
    theoretical_iterations: int = 0
    scaling: PayoffScaling | None = None
    guarantees: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return self.choices.size

    @property
    def truncated(self) -> bool:
        return self.iterations < self.theoretical_iterations

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "lambda_hat", "threshold_index", "avg_error", "avg_entropy"])
            for t in range(self.iterations):
                w.writerow([t + 1, repr(float(self.lambda_hat[t])), int(self.choices[t]),
                            repr(float(self.avg_error[t])), repr(float(self.avg_entropy[t]))])


def mixture_risk(d: RandomizedClassifier, space: HypothesisSpace) -> float:
    return math.fsum(d.weights * space.risks()[d.indices])


def mixture_entropy(d: RandomizedClassifier, space: HypothesisSpace, params: BenefitParams,
                    order: OrderLike) -> float:
    """Weighted average of the member hypotheses' entropies (linear in the mixture)."""
    return math.fsum(d.weights * space.entropies(params, order)[d.indices])


def mixture_lagrangian(d: RandomizedClassifier, space: HypothesisSpace, lam: float,
                       cfg: SolverConfig, params: BenefitParams) -> float:
    return mixture_risk(d, space) + lam * (mixture_entropy(d, space, params, cfg.order) - cfg.gamma)


def _prob_upper(lw0: float, lw1: float) -> float:
    # w1 / (w0 + w1) from log weights, without overflow
    d = lw0 - lw1
    if d > 0:
        e = math.exp(-d)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(d))


def _hedge(risks: np.ndarray, ent: np.ndarray, cfg: SolverConfig, scaling: PayoffScaling, iterations: int):
    lam_max = cfg.lambda_max
    gamma = cfg.gamma
    # scaled payoffs against each of Nature's pure strategies
    l0 = scaling.scale(risks)
    l1 = scaling.scale(risks + lam_max * (ent - gamma))
    kappa = cfg.nu / (2 * scaling.a_alpha)
    step = math.log1p(kappa)
    lw0 = lw1 = 0.0
    lambdas = np.empty(iterations)
    choices = np.empty(iterations, dtype=np.int64)
    if cfg.lambda_mode == "sampled":
        br = (_argmin(risks), _argmin(risks + lam_max * (ent - gamma)))
        gains = ((float(l0[br[0]]), float(l1[br[0]])), (float(l0[br[1]]), float(l1[br[1]])))
        uniforms = np.random.default_rng(cfg.seed).random(iterations)
        for t in range(iterations):
            p1 = _prob_upper(lw0, lw1)
            j = 1 if uniforms[t] < p1 else 0
            g0, g1 = gains[j]
            lw0 += g0 * step
            lw1 += g1 * step
            choices[t] = br[j]
            lambdas[t] = lam_max if j else 0.0
    else:
        slope = ent - gamma
        for t in range(iterations):
            lam = _prob_upper(lw0, lw1) * lam_max
            h = _argmin(risks + lam * slope)
            lw0 += float(l0[h]) * step
            lw1 += float(l1[h]) * step
            choices[t] = h
            lambdas[t] = lam
    return lambdas, choices


def hedge_solve(space: HypothesisSpace, cfg: SolverConfig, params: BenefitParams):
    """Run the Hedge game for min(theoretical T, t_cap) rounds.

    Returns the averaged mixture and the per-round trace. The entropy
    guarantee gamma + (1 + 2 nu) / lambda_max is checked on every run. A
    violation after the full theoretical horizon raises SolverGuaranteeError;
    on truncated runs, where the guarantee is not promised, it is logged.
    """
    if len(space) == 0:
        raise ValueError("empty hypothesis space")
    scaling = payoff_scaling(cfg, params)
    t_theory = theoretical_iterations(cfg, params)
    iterations = t_theory if cfg.t_cap is None else min(t_theory, cfg.t_cap)
    risks = space.risks()
    ent = space.entropies(params, cfg.order)

    lambdas, choices = _hedge(risks, ent, cfg, scaling, iterations)

    counts = np.bincount(choices, minlength=len(space))
    support = np.flatnonzero(counts)
    weights = counts[support] / iterations
    weights[-1] = 1.0 - math.fsum(weights[:-1])
    d = RandomizedClassifier(support, space.thresholds[support], weights, float(np.mean(lambdas)))

    t = np.arange(1, iterations + 1)
    trace = SolveTrace(lambdas, choices, np.cumsum(risks[choices]) / t, np.cumsum(ent[choices]) / t,
                       t_theory, scaling)

    bound = cfg.gamma + (1 + 2 * cfg.nu) / cfg.lambda_max
    achieved = math.fsum(weights * ent[support])
    feasible = cfg.gamma > float(ent.min())
    ok = achieved <= bound
    trace.guarantees = {"entropy": achieved, "entropy_bound": bound, "entropy_ok": ok,
                        "feasible": feasible, "truncated": trace.truncated}
    if feasible and not ok:
        msg = f"mixture entropy {achieved:.6g} exceeds guaranteed bound {bound:.6g}"
        if not trace.truncated:
            raise SolverGuaranteeError(msg)
        log.warning("%s after %d of %d rounds", msg, iterations, t_theory)
    return d, trace


def saddle_value(space: HypothesisSpace, cfg: SolverConfig, params: BenefitParams, grid_points: int = 10_000):
    """max over a lambda grid on [0, lambda_max] of min_h L(h, lambda); returns (value, lambda)."""
    risks = space.risks()
    slope = space.entropies(params, cfg.order) - cfg.gamma
    lams = np.linspace(0.0, cfg.lambda_max, grid_points)
    lower = np.min(risks[None, :] + lams[:, None] * slope[None, :], axis=1)
    k = int(np.argmax(lower))
    return float(lower[k]), float(lams[k])


@dataclass(frozen=True)
class TestEvaluation:
    """Mixture metrics on held-out data.

    ``exact`` holds the mixture expectations. ``sampled`` and ``ci`` (95%
    normal half-widths) are filled when evaluated by drawing hypotheses.
    """

    exact: dict
    sampled: dict | None = None
    ci: dict | None = None
    stderr: dict | None = None
    draws: int = 0


def per_hypothesis_metrics(space: HypothesisSpace, params: BenefitParams, order: OrderLike) -> dict:
    """Metric name -> array over hypotheses. Rates of nonexistent classes are NaN."""
    out = {
        "error": space.risks(),
        "entropy": space.entropies(params, order),
        "between": space.between_terms(params, order),
    }
    if space.group_positives is not None:
        sizes, pos = space.group_sizes, space.group_positives
        neg = sizes - pos
        with np.errstate(divide="ignore", invalid="ignore"):
            r_fp = np.where(neg > 0, space.group_fp / np.where(neg > 0, neg, 1), np.nan)
            r_fn = np.where(pos > 0, space.group_fn / np.where(pos > 0, pos, 1), np.nan)
            r_fp_tot = space.n_fp / neg.sum() if neg.sum() else np.full(len(space), np.nan)
            r_fn_tot = space.n_fn / pos.sum() if pos.sum() else np.full(len(space), np.nan)
        out["r_fp_tot"] = r_fp_tot
        out["r_fn_tot"] = r_fn_tot
        for g in range(space.n_groups):
            out[f"r_fp_g{g}"] = r_fp[:, g]
            out[f"r_fn_g{g}"] = r_fn[:, g]
            out[f"r_fp_diff_g{g}"] = r_fp[:, g] - r_fp_tot
            out[f"r_fn_diff_g{g}"] = r_fn[:, g] - r_fn_tot
    return out


def evaluate_on_test(d: RandomizedClassifier, space: HypothesisSpace, params: BenefitParams,
                     order: OrderLike, mode: str = "exact", draws: int = 10_000, seed: int = 0) -> TestEvaluation:
    """Evaluate a mixture on a (test) hypothesis space sharing the same thresholds.

    ``mode="sampled"`` draws ``draws`` pure hypotheses from the mixture and
    reports the mean and spread of each metric over those draws, alongside
    the exact expectations.
    """
    if space.n == 0:
        raise ValueError("empty test set")
    metrics = per_hypothesis_metrics(space, params, order)
    exact = {k: float(np.dot(d.weights, v[d.indices])) for k, v in metrics.items()}
    if mode == "exact":
        return TestEvaluation(exact)
    if mode != "sampled":
        raise ValueError("mode must be 'exact' or 'sampled'")
    if draws < 2:
        raise ValueError("sampled evaluation needs at least two draws")
    rng = np.random.default_rng(seed)
    hits = rng.multinomial(draws, d.weights)
    freq = hits / draws
    sampled, ci, se = {}, {}, {}
    for k, v in metrics.items():
        vals = v[d.indices]
        mean = float(np.dot(freq, vals))
        if np.isnan(mean):
            sampled[k] = ci[k] = se[k] = float("nan")
            continue
        used = hits > 0
        # sample variance over the draws, grouped by hypothesis
        var = float(np.dot(hits[used], (vals[used] - mean) ** 2)) / (draws - 1)
        se[k] = math.sqrt(var / draws)
        sampled[k] = mean
        ci[k] = Z_95 * se[k]
    return TestEvaluation(exact, sampled, ci, se, draws)


def check_equilibrium(d: RandomizedClassifier, space: HypothesisSpace, cfg: SolverConfig,
                      params: BenefitParams, grid_points: int = 10_000) -> dict:
    """Compare the solve against a brute-forced saddle value (for small spaces)."""
    value, _ = saddle_value(space, cfg, params, grid_points)
    worst_nature = max(mixture_lagrangian(d, space, lam, cfg, params) for lam in (0.0, cfg.lambda_max))
    risks = space.risks()
    ent = space.entropies(params, cfg.order)
    best_learner = float(np.min(risks + d.lambda_bar * (ent - cfg.gamma)))
    return {
        "saddle_value": value,
        "max_lambda_L": worst_nature,
        "min_h_L": best_learner,
        "risk": mixture_risk(d, space),
        "entropy": mixture_entropy(d, space, params, cfg.order),
    }


def with_seed(cfg: SolverConfig, seed: int) -> SolverConfig:
    return replace(cfg, seed=seed)
