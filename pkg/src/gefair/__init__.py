"""Fair classification under a generalized-entropy constraint on individual benefits."""
from .bounds import (BoundInapplicable, entropy_upper_bound, fairness_deviation_bound, psi, psi_corollary,
                     psi_tilde, tight_fairness_deviation_bound, vc_deviation)
from .entropy import (BenefitParams, Branch, DecompositionReport, EntropyOrder, FiniteDistribution,
                      GroupPartition, OutcomeCounts, apply_transfer, as_order, benefits, decompose,
                      decompose_distribution, entropy_from_counts, entropy_index, f_alpha,
                      population_entropy_exact)
from .group_fairness import (FairnessPredicateReport, GroupRates, LabeledPredictions, check_predicates,
                             compute_group_rates, verify_equivalence_under_equal_base_rates)
from .learner import (HypothesisSpace, LogisticModel, ThresholdHypothesis, predict_scores, threshold_grid,
                      train_logistic)
from .solver import (RandomizedClassifier, SolverConfig, SolverGuaranteeError, SolveTrace, evaluate_on_test,
                     hedge_solve)

__version__ = "0.1.0"
