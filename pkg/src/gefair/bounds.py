"""Closed-form deviation bounds and the entropy cap used to rescale the game payoff."""
from __future__ import annotations

import math

from .entropy import BenefitParams, Branch, OrderLike, as_order


class BoundInapplicable(ValueError):
    """The accuracy-dependent bound has a non-positive denominator for these inputs."""


def _check_delta(delta: float) -> None:
    if not 0 < delta < 0.5:
        raise ValueError(f"confidence delta must lie in (0, 1/2), got {delta}")


def _check_r(r: float) -> None:
    if not r > 1:
        raise ValueError(f"benefit ratio r = c/a must exceed 1, got {r}")


def vc_deviation(n: int, d_h: int, delta: float, log_numerator: float = 4.0) -> float:
    """sqrt((8 d ln(2en/d) + 8 ln(k/delta)) / n) with k = 4 (risk bound) or 8 (eps_2)."""
    _check_delta(delta)
    if log_numerator not in (4, 8):
        raise ValueError("log_numerator must be 4 or 8")
    if not (d_h >= 1 and n >= d_h):
        raise ValueError(f"need n >= d_h >= 1, got n={n}, d_h={d_h}")
    return math.sqrt((8 * d_h * math.log(2 * math.e * n / d_h) + 8 * math.log(log_numerator / delta)) / n)


def psi(order: OrderLike, params: BenefitParams) -> float:
    """Coefficient of the accuracy-independent fairness deviation bound."""
    order = as_order(order)
    a, r = params.a, params.r
    _check_r(r)
    if order.branch is Branch.ZERO:
        return 2 / (r - 1) + math.log(1 + 2 / (r - 1))
    if order.branch is Branch.ONE:
        return 4 / (r - 1) + 4 * r * math.log(a * r + a) / (r - 1) ** 2
    al = order.value
    q = (r + 1) / (r - 1)
    if al < 1:
        return 2 / ((1 - al) * (r - 1)) * (q ** al + 1)
    return 4 * r / ((al - 1) * (r - 1) ** 2) * q ** (al - 1)


def psi_corollary(order: OrderLike, a: float) -> float:
    """Upper envelope of ``psi`` over every admissible ratio r >= 1 + 1/a.

    This is ``psi`` evaluated at r = 1 + 1/a, where it is largest.
    """
    order = as_order(order)
    if not a > 0:
        raise ValueError("a must be positive")
    if order.branch is Branch.ZERO:
        return 2 * a + math.log(1 + 2 * a)
    if order.branch is Branch.ONE:
        return 4 * a + 4 * a * (a + 1) * math.log(1 + 2 * a)
    al = order.value
    if al < 1:
        return 2 * a / (1 - al) * ((1 + 2 * a) ** al + 1)
    return 4 * a * (a + 1) / (al - 1) * (1 + 2 * a) ** (al - 1)


def psi_tilde(order: OrderLike, params: BenefitParams, r_s: float, eps2: float) -> float:
    """Accuracy-dependent coefficient; raises BoundInapplicable when r - R_S - eps2 <= 0."""
    order = as_order(order)
    a, r = params.a, params.r
    _check_r(r)
    if not 0 <= r_s <= 1:
        raise ValueError(f"empirical risk must lie in [0, 1], got {r_s}")
    if not eps2 > 0:
        raise ValueError("eps2 must be positive")
    gap = r - r_s - eps2
    if gap <= 0:
        raise BoundInapplicable(f"bound inapplicable: r - R_S - eps2 = {gap:.6g} <= 0")
    if order.branch is Branch.ZERO:
        return 1 / gap + math.log(1 + 1 / (r - 1))
    if order.branch is Branch.ONE:
        return 1 / gap * (1 + r * (1 + 2 * math.log(a * r + a)) / (r - r_s))
    al = order.value
    s = (1 + 1 / r) ** al
    c_psi = 1 + (s - 1) * r_s + eps2 * (s + 1)
    lead = (r / (r - r_s)) ** al
    if al < 1:
        return lead / (1 - al) * (1 / r + c_psi / gap)
    return lead / (al - 1) * (s / r + (1 + eps2 / gap) ** al * c_psi / (r - r_s))


def fairness_deviation_bound(order: OrderLike, params: BenefitParams, n: int, delta: float) -> float:
    """psi_alpha(a, r) * sqrt(ln(4/delta) / (2n))."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if n < 1:
        raise ValueError("n must be positive")
    return psi(order, params) * math.sqrt(math.log(4 / delta) / (2 * n))


def tight_fairness_deviation_bound(order: OrderLike, params: BenefitParams, n: int, d_h: int,
                                   delta: float, r_s: float) -> float:
    """psi_tilde * eps_2, where eps_2 is the VC deviation with ln(8/delta)."""
    eps2 = vc_deviation(n, d_h, delta, 8)
    return psi_tilde(order, params, r_s, eps2) * eps2


def entropy_upper_bound(order: OrderLike, r: float) -> float:
    """Cap on I_alpha of any benefit vector with values in {c-a, c, c+a}, c/a = r."""
    order = as_order(order)
    _check_r(r)
    q = (r + 1) / (r - 1)
    if order.branch is Branch.ZERO:
        return math.log(q)
    if order.branch is Branch.ONE:
        return q * math.log(q)
    al = order.value
    return (q ** al - 1) / abs(al * (al - 1))
