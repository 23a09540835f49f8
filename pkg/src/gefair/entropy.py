"""Generalized entropy index, benefit conversion and additive decomposition.

Everything here is a pure function of its arguments. Benefit vectors are
plain 1-D arrays of non-negative reals.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np


class Branch(enum.Enum):
    ZERO = "zero"
    ONE = "one"
    OTHER = "other"


@dataclass(frozen=True)
class EntropyOrder:
    """The order alpha of the index, with its formula branch fixed up front.

    Use :meth:`of` to classify a literal; the classification is exact
    equality, so ``EntropyOrder.of(1.0000001)`` is an ordinary ``OTHER`` order.
    """

    value: float
    branch: Branch

    def __post_init__(self):
        v = float(self.value)
        if not v >= 0 or math.isinf(v):
            raise ValueError(f"entropy order must be a finite non-negative real, got {self.value!r}")
        expected = Branch.ZERO if v == 0 else Branch.ONE if v == 1 else Branch.OTHER
        if self.branch is not expected:
            raise ValueError(f"branch {self.branch} inconsistent with alpha={v}")
        object.__setattr__(self, "value", v)

    @classmethod
    def of(cls, alpha: float) -> "EntropyOrder":
        alpha = float(alpha)
        if alpha == 0:
            return cls(0.0, Branch.ZERO)
        if alpha == 1:
            return cls(1.0, Branch.ONE)
        return cls(alpha, Branch.OTHER)

    def __str__(self):
        return f"{self.value:g}"


OrderLike = Union[EntropyOrder, float, int]


def as_order(order: OrderLike) -> EntropyOrder:
    if isinstance(order, EntropyOrder):
        return order
    return EntropyOrder.of(order)


@dataclass(frozen=True)
class BenefitParams:
    """Benefit constants: correct -> c, false positive -> c + a, false negative -> c - a."""

    a: float
    c: float

    def __post_init__(self):
        a, c = float(self.a), float(self.c)
        if not (c > a > 0):
            raise ValueError(f"benefit parameters need c > a > 0, got a={a}, c={c}")
        if not c - a >= 1:
            raise ValueError(f"benefit parameters need c - a >= 1, got a={a}, c={c}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "c", c)

    @property
    def r(self) -> float:
        return self.c / self.a


@dataclass(frozen=True)
class OutcomeCounts:
    n: int
    n_fp: int
    n_fn: int

    def __post_init__(self):
        if min(self.n, self.n_fp, self.n_fn) < 0 or self.n_fp + self.n_fn > self.n:
            raise ValueError(f"invalid outcome counts {self}")

    @property
    def risk(self) -> float:
        if self.n == 0:
            raise ValueError("risk of an empty sample is undefined")
        return (self.n_fp + self.n_fn) / self.n

    def benefit_vector(self, params: BenefitParams) -> np.ndarray:
        n_c = self.n - self.n_fp - self.n_fn
        return np.concatenate([
            np.full(n_c, params.c),
            np.full(self.n_fp, params.c + params.a),
            np.full(self.n_fn, params.c - params.a),
        ])


@dataclass(frozen=True)
class GroupPartition:
    """Dense group assignment with ids ``0..n_groups-1``, every group nonempty."""

    assignment: np.ndarray
    n_groups: int
    sizes: np.ndarray = field(repr=False)

    @classmethod
    def from_ids(cls, ids, n_groups: int | None = None) -> "GroupPartition":
        ids = np.asarray(ids)
        if ids.ndim != 1 or ids.size == 0:
            raise ValueError("group ids must be a nonempty 1-D sequence")
        if not np.issubdtype(ids.dtype, np.integer):
            if not np.all(np.equal(np.mod(ids, 1), 0)):
                raise ValueError("group ids must be integers")
            ids = ids.astype(np.int64)
        if ids.min() < 0:
            raise ValueError("group ids must be non-negative")
        g = int(ids.max()) + 1 if n_groups is None else int(n_groups)
        if ids.max() >= g:
            raise ValueError(f"group id {ids.max()} out of range for {g} groups")
        sizes = np.bincount(ids, minlength=g)
        empty = np.flatnonzero(sizes == 0)
        if empty.size:
            raise ValueError(f"empty group(s): {empty.tolist()}")
        return cls(ids, g, sizes)


@dataclass(frozen=True)
class FiniteDistribution:
    """A distribution over finitely many individuals: benefit, mass and group per atom."""

    benefits: np.ndarray
    masses: np.ndarray
    groups: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.benefits, dtype=float)
        m = np.asarray(self.masses, dtype=float)
        g = np.zeros(b.shape, dtype=np.int64) if self.groups is None else np.asarray(self.groups)
        if b.ndim != 1 or b.shape != m.shape or b.shape != g.shape or b.size == 0:
            raise ValueError("benefits, masses and groups must be equal-length nonempty 1-D arrays")
        if np.any(m <= 0):
            raise ValueError("all masses must be positive")
        if abs(math.fsum(m) - 1.0) > 1e-12:
            raise ValueError(f"masses sum to {math.fsum(m)!r}, not 1")
        if np.any(b < 0) or not np.all(np.isfinite(b)):
            raise ValueError("benefits must be finite and non-negative")
        object.__setattr__(self, "benefits", b)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "groups", g.astype(np.int64))

    @classmethod
    def uniform(cls, benefits, groups=None) -> "FiniteDistribution":
        b = np.asarray(benefits, dtype=float)
        return cls(b, np.full(b.size, 1.0 / b.size), groups)

    @property
    def mean(self) -> float:
        return math.fsum(self.masses * self.benefits)

    @property
    def n_groups(self) -> int:
        return int(self.groups.max()) + 1

    def group_masses(self) -> np.ndarray:
        return np.array([math.fsum(self.masses[self.groups == g]) for g in range(self.n_groups)])

    def restrict(self, g: int) -> "FiniteDistribution":
        sel = self.groups == g
        m = self.masses[sel]
        if m.size == 0:
            raise ValueError(f"group {g} has zero mass")
        m = m / math.fsum(m)
        # renormalising can leave the sum a few ulps off 1
        m[-1] = 1.0 - math.fsum(m[:-1])
        return FiniteDistribution(self.benefits[sel], m, np.zeros(m.size, dtype=np.int64))


def _kernel(order: EntropyOrder, x: np.ndarray) -> np.ndarray:
    if order.branch is Branch.ZERO:
        return -np.log(x)
    if order.branch is Branch.ONE:
        # 0 ln 0 = 0 by continuity
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)
    a = order.value
    return (np.power(x, a) - 1.0) / (a * (a - 1.0))


def f_alpha(order: OrderLike, x):
    """Vectorised convex kernel: -ln x, x ln x, or (x^a - 1)/(a(a-1))."""
    order = as_order(order)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("f_alpha is defined for positive arguments only")
    return _kernel(order, x)


def eval_f_alpha(order: OrderLike, x: float) -> float:
    return float(f_alpha(order, float(x)))


def benefit_of(prediction: int, label: int, params: BenefitParams) -> float:
    if prediction not in (0, 1) or label not in (0, 1):
        raise ValueError("prediction and label must be 0 or 1")
    return params.a * (prediction - label) + params.c


def benefits(predictions, labels, params: BenefitParams) -> np.ndarray:
    h = np.asarray(predictions)
    y = np.asarray(labels)
    if h.shape != y.shape:
        raise ValueError("predictions and labels differ in length")
    if not (np.isin(h, (0, 1)).all() and np.isin(y, (0, 1)).all()):
        raise ValueError("predictions and labels must be binary")
    return params.a * (h.astype(float) - y.astype(float)) + params.c


def _check_benefits(b, order: EntropyOrder) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.ndim != 1:
        raise ValueError("benefit vector must be 1-D")
    if b.size == 0:
        raise ValueError("benefit vector is empty")
    if np.any(b < 0) or not np.all(np.isfinite(b)):
        raise ValueError("benefits must be finite and non-negative")
    if order.branch is Branch.ZERO and np.any(b == 0):
        raise ValueError("alpha = 0 requires strictly positive benefits")
    return b


def _weighted_entropy(b: np.ndarray, p: np.ndarray, order: EntropyOrder) -> tuple[float, float]:
    """Return (E[f(b/mu)], mu) for benefit atoms b with probabilities p."""
    if np.all(b == b[0]):
        return 0.0, float(b[0])
    mu = math.fsum(p * b)
    if mu <= 0:
        raise ValueError("mean benefit is zero")
    value = math.fsum(p * _kernel(order, b / mu))
    return max(value, 0.0), mu


def entropy_index(b: Sequence[float], order: OrderLike) -> float:
    """Generalized entropy index I_alpha(b; n) of a finite benefit vector."""
    order = as_order(order)
    b = _check_benefits(b, order)
    n = b.size
    if np.all(b == b[0]):
        return 0.0
    mu = math.fsum(b) / n
    if mu <= 0:
        raise ValueError("mean benefit is zero")
    return max(math.fsum(_kernel(order, b / mu)) / n, 0.0)


def entropy_from_count_arrays(n, n_fp, n_fn, params: BenefitParams, order: OrderLike) -> np.ndarray:
    """Closed-form I_alpha for many (n, n_fp, n_fn) triples at once."""
    order = as_order(order)
    n = np.asarray(n, dtype=float)
    fp = np.asarray(n_fp, dtype=float)
    fn = np.asarray(n_fn, dtype=float)
    n, fp, fn = np.broadcast_arrays(n, fp, fn)
    if np.any(n <= 0):
        raise ValueError("entropy of an empty sample is undefined")
    if np.any(fp < 0) or np.any(fn < 0) or np.any(fp + fn > n):
        raise ValueError("invalid outcome counts")
    a, c = params.a, params.c
    nc = n - fp - fn
    mu = (nc * c + fp * (c + a) + fn * (c - a)) / n
    terms = np.zeros(n.shape)
    for count, value in ((nc, c), (fp, c + a), (fn, c - a)):
        terms = terms + count * np.where(count > 0, _kernel(order, value / mu), 0.0)
    out = terms / n
    single_class = ((nc > 0).astype(int) + (fp > 0) + (fn > 0)) <= 1
    return np.where(single_class, 0.0, np.maximum(out, 0.0))


def entropy_from_counts(counts: OutcomeCounts, params: BenefitParams, order: OrderLike) -> float:
    if counts.n == 0:
        raise ValueError("entropy of an empty sample is undefined")
    return float(entropy_from_count_arrays(counts.n, counts.n_fp, counts.n_fn, params, order))


def between_group_from_counts(group_sizes, group_fp, group_fn, params: BenefitParams,
                              order: OrderLike) -> np.ndarray:
    """Between-group term V from per-group confusion counts.

    ``group_fp``/``group_fn`` have shape (..., G); ``group_sizes`` shape (G,).
    """
    order = as_order(order)
    sizes = np.asarray(group_sizes, dtype=float)
    fp = np.asarray(group_fp, dtype=float)
    fn = np.asarray(group_fn, dtype=float)
    if np.any(sizes <= 0):
        raise ValueError("empty group")
    n = sizes.sum()
    group_sum = sizes * params.c + params.a * (fp - fn)
    mu_g = group_sum / sizes
    mu = group_sum.sum(axis=-1, keepdims=True) / n
    v = np.sum(sizes / n * _kernel(order, mu_g / mu), axis=-1)
    equal = np.all(mu_g == mu_g[..., :1], axis=-1)
    return np.where(equal, 0.0, np.maximum(v, 0.0))


@dataclass(frozen=True)
class DecompositionReport:
    total: float
    global_mean: float
    group_means: np.ndarray
    group_shares: np.ndarray  # n_g / n, or m_g for distributions
    weights: np.ndarray
    group_entropies: np.ndarray
    within_terms: np.ndarray
    within: float
    between: float

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "global_mean": self.global_mean,
            "group_means": self.group_means.tolist(),
            "group_shares": self.group_shares.tolist(),
            "weights": self.weights.tolist(),
            "group_entropies": self.group_entropies.tolist(),
            "within_terms": self.within_terms.tolist(),
            "within": self.within,
            "between": self.between,
        }


def _assemble(order, total, mu, mu_g, shares, group_entropies) -> DecompositionReport:
    ratio = mu_g / mu
    weights = shares * ratio ** order.value
    within_terms = weights * group_entropies
    if np.all(mu_g == mu_g[0]):
        between = 0.0
    else:
        between = max(math.fsum(shares * _kernel(order, ratio)), 0.0)
    return DecompositionReport(
        total=total,
        global_mean=mu,
        group_means=mu_g,
        group_shares=shares,
        weights=weights,
        group_entropies=group_entropies,
        within_terms=within_terms,
        within=math.fsum(within_terms),
        between=between,
    )


def decompose(b: Sequence[float], groups, order: OrderLike, n_groups: int | None = None) -> DecompositionReport:
    """Split I_alpha(b) into the weighted within-group sum and the between-group term."""
    order = as_order(order)
    b = _check_benefits(b, order)
    part = groups if isinstance(groups, GroupPartition) else GroupPartition.from_ids(groups, n_groups)
    if part.assignment.shape != b.shape:
        raise ValueError("partition does not cover the benefit vector")
    n = b.size
    mu = math.fsum(b) / n
    members = [b[part.assignment == g] for g in range(part.n_groups)]
    mu_g = np.array([math.fsum(m) / m.size for m in members])
    ent_g = np.array([entropy_index(m, order) for m in members])
    shares = part.sizes / n
    return _assemble(order, entropy_index(b, order), mu, mu_g, shares, ent_g)


def population_entropy_exact(dist: FiniteDistribution, order: OrderLike) -> float:
    """Extended entropy of a finite-support distribution: sum of mass * f(b / E[b])."""
    order = as_order(order)
    if order.branch is Branch.ZERO and np.any(dist.benefits == 0):
        raise ValueError("alpha = 0 requires strictly positive benefits")
    return _weighted_entropy(dist.benefits, dist.masses, order)[0]


def decompose_distribution(dist: FiniteDistribution, order: OrderLike) -> DecompositionReport:
    order = as_order(order)
    total = population_entropy_exact(dist, order)
    mu = dist.mean
    G = dist.n_groups
    shares = dist.group_masses()
    if np.any(shares <= 0):
        raise ValueError("every group needs positive mass")
    parts = [dist.restrict(g) for g in range(G)]
    mu_g = np.array([p.mean for p in parts])
    ent_g = np.array([population_entropy_exact(p, order) for p in parts])
    return _assemble(order, total, mu, mu_g, shares, ent_g)


def apply_transfer(b: Sequence[float], from_index: int, to_index: int, delta: float) -> np.ndarray:
    """Move ``delta`` from a richer individual to a poorer one (a Pigou-Dalton transfer)."""
    b = np.array(b, dtype=float)
    if delta <= 0:
        raise ValueError("transfer must be positive")
    if from_index == to_index:
        raise ValueError("transfer needs two distinct individuals")
    rich, poor = b[from_index], b[to_index]
    if not rich > poor:
        raise ValueError("transfer must go from a larger to a smaller benefit")
    if not rich - delta > poor + delta:
        raise ValueError("transfer would reverse the order of the two benefits")
    b[from_index] = rich - delta
    b[to_index] = poor + delta
    return b
