"""Comparison bounds: Poisson subsampling under replace-one adjacency and the
general-purpose fixed-size bounds of Wang, Balle and Kasiviswanathan (2019)
specialised to the Gaussian mechanism, whose base RDP is ``eps(j) = 2j/sigma^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .core import check_alpha, check_integer_alpha, check_order, check_rate, check_sigma
from .fswor import replace_one_excess, _log_bracket
from .moments import SignedLog, log1p_slog, slog_sum

__all__ = [
    "WangEpsilonSchedule",
    "poisson_replace_one_step",
    "wang_lower",
    "wang_upper",
]


@dataclass(frozen=True)
class WangEpsilonSchedule:
    """Base RDP of the Gaussian mechanism at integer order ``j``."""

    sigma: float

    def __post_init__(self):
        check_sigma(self.sigma)

    def __call__(self, j: int) -> float:
        return 2.0 * j / (self.sigma * self.sigma)


def poisson_replace_one_step(alpha: float, sigma: float, q: float, m: int = 4) -> float:
    """One-step RDP bound for Poisson subsampling, replace-one adjacency."""
    alpha, sigma, q, m = check_alpha(alpha), check_sigma(sigma), check_rate(q), check_order(m)
    y = 1.0 / (sigma * sigma)
    # e^{y} - e^{-y} = e^{-y} (e^{2y} - 1)
    log_second = -y + math.log(math.expm1(2.0 * y))
    excess = replace_one_excess(alpha, 2.0 * sigma, q, m, log_second)
    return _log_bracket(excess, "poisson replace-one", alpha, sigma, q) / (alpha - 1.0)


def _log_k(alpha: int, sigma: float, q: float) -> float:
    """``K(alpha)`` of the Wang upper bound, computed in log space."""
    if q == 0.0:
        return 0.0
    eps = WangEpsilonSchedule(sigma)
    lq = math.log(q)
    logs = [math.log(2.0) + 2 * lq + math.log(alpha) + math.log(alpha - 1) + math.log(math.expm1(eps(2)))]
    for j in range(3, alpha + 1):
        log_falling = math.lgamma(alpha + 1) - math.lgamma(alpha - j + 1)
        logs.append(math.log(2.0) + j * lq + log_falling - math.lgamma(j + 1) + (j - 1) * eps(j))
    return log1p_slog(slog_sum(SignedLog(1, v) for v in logs))


def wang_upper(alpha: float, sigma: float, q: float) -> float:
    """Wang et al. upper bound; linear interpolation of ``K`` between integers."""
    alpha, sigma, q = check_alpha(alpha), check_sigma(sigma), check_rate(q)
    if alpha < 2.0:
        return _log_k(2, sigma, q)
    lo = math.floor(alpha)
    frac = alpha - lo
    k_lo = _log_k(lo, sigma, q)
    if frac == 0.0:
        return k_lo / (alpha - 1.0)
    k_hi = _log_k(lo + 1, sigma, q)
    return ((1.0 - frac) * k_lo + frac * k_hi) / (alpha - 1.0)


def wang_lower(alpha: int, sigma: float, q: float) -> float:
    """Wang et al. lower bound on the worst-case fixed-size RDP (integer orders)."""
    a = check_integer_alpha(alpha)
    sigma, q = check_sigma(sigma), check_rate(q)
    if q == 0.0:
        return 0.0
    lr = math.log(q) - math.log1p(-q)
    logs = [0.0, math.log(a) + lr]
    for j in range(2, a + 1):
        logs.append(math.log(math.comb(a, j)) + j * lr + (j - 1) * 2.0 * j / (sigma * sigma))
    inner = slog_sum(SignedLog(1, v) for v in logs).log_magnitude
    value = (a * math.log1p(-q) + inner) / (a - 1)
    return max(value, 0.0)
