"""RDP bounds for fixed-size subsampling without replacement.

Add/remove adjacency reduces to the mixture moment

    H(alpha, sigma, q) = E_{N(0, s^2)}[((1-q) + q N(1, s^2)/N(0, s^2))^alpha],  s = sigma/2,

bounded by its order-``m`` Taylor polynomial in ``q`` plus an explicit
remainder bound. Replace-one adjacency uses the same expansion with its own
coefficient and remainder bounds. All sums are assembled in signed log space
and the final ``log(1 + excess)`` is taken with ``log1p``, so tiny bounds keep
full relative precision.
"""
from __future__ import annotations

import logging
import math
from typing import Callable

from .core import (
    AccountantConfig,
    Adjacency,
    Mode,
    RdpCurve,
    SubsamplingSpec,
    check_alpha,
    check_order,
    check_rate,
    check_sigma,
    compose_steps,
)
from .errors import DomainError
from .moments import (
    SignedLog,
    ZERO,
    log1p_slog,
    log_moment_btilde,
    log_moment_m,
    slog_sum,
    _saturating_exp,
)

log = logging.getLogger(__name__)

__all__ = [
    "AccountantConfig",
    "Adjacency",
    "RdpCurve",
    "SubsamplingSpec",
    "compose",
    "h_upper",
    "log_h_upper",
    "step_add_remove",
    "step_replace_one",
]


def _lse(logs: list[float]) -> float:
    return slog_sum(SignedLog(1, v) for v in logs).log_magnitude


def _log_abs_falling(alpha: float, k: int) -> tuple[int, float]:
    """Sign and log-magnitude of ``alpha (alpha-1) ... (alpha-k+1)``."""
    sign = 1
    total = 0.0
    for j in range(k):
        f = alpha - j
        if f == 0.0:
            return 0, -math.inf
        if f < 0:
            sign = -sign
        total += math.log(abs(f))
    return sign, total


def _add_remove_remainder(alpha: float, sigma: float, q: float, m: int) -> SignedLog:
    sign, lp = _log_abs_falling(alpha, m)
    if sign == 0:
        return ZERO
    lq = math.log(q)
    if alpha - m > 0:
        n = math.ceil(alpha) - m
        inner = [-math.lgamma(m + 1) + log_moment_btilde(sigma, m)]
        for ell in range(n + 1):
            inner.append(
                ell * lq
                + math.lgamma(n + 1)
                - math.lgamma(n - ell + 1)
                - math.lgamma(m + ell + 1)
                + log_moment_btilde(sigma, ell + m)
            )
        return SignedLog(1, m * lq + lp + _lse(inner))
    return SignedLog(
        1,
        m * lq - math.lgamma(m + 1) + (alpha - m) * math.log1p(-q) + lp + log_moment_btilde(sigma, m),
    )


def _h_excess(alpha: float, sigma: float, q: float, m: int) -> SignedLog:
    """``H_upper - 1`` in signed-log form (inputs already validated)."""
    if q == 0.0:
        return ZERO
    lq = math.log(q)
    terms = [_add_remove_remainder(alpha, sigma, q, m)]
    for k in range(m - 1, 1, -1):
        sign, lp = _log_abs_falling(alpha, k)
        lm = log_moment_m(sigma, k)
        if sign == 0 or lm == -math.inf:
            continue
        terms.append(SignedLog(sign, k * lq - math.lgamma(k + 1) + lp + lm))
    return slog_sum(terms)


def _validate(alpha, sigma, q, m):
    return check_alpha(alpha), check_sigma(sigma), check_rate(q), check_order(m)


def log_h_upper(alpha: float, sigma: float, q: float, m: int = 3) -> float:
    """Natural log of :func:`h_upper`; finite even when the bound itself overflows."""
    alpha, sigma, q, m = _validate(alpha, sigma, q, m)
    return _log_bracket(_h_excess(alpha, sigma, q, m), "add/remove", alpha, sigma, q)


def h_upper(alpha: float, sigma: float, q: float, m: int = 3) -> float:
    """Upper bound on the add/remove mixture moment ``H(alpha, sigma, q)``.

    Order-``m`` Taylor polynomial in ``q`` plus the remainder bound. Exact for
    integer ``alpha`` when ``m > alpha``. Overflow returns ``+inf`` with a
    ``SaturationWarning``.
    """
    return _saturating_exp(log_h_upper(alpha, sigma, q, m), f"H(alpha={alpha}, sigma={sigma}, q={q})")


def _log_bracket(excess: SignedLog, what: str, alpha: float, sigma: float, q: float) -> float:
    value = log1p_slog(excess)
    if value < 0.0:
        log.warning(
            "%s bracket below 1 at alpha=%g sigma=%g q=%g (rounding); reporting epsilon=0",
            what, alpha, sigma, q,
        )
        return 0.0
    return value


def step_add_remove(alpha: float, sigma: float, q: float, m: int = 3) -> float:
    """One-step RDP bound, add/remove adjacency."""
    return log_h_upper(alpha, sigma, q, m) / (alpha - 1.0)


# replace-one machinery, shared with the Poisson bound in ``baselines``


def _product_gap(alpha: float, k: int, j: int) -> float:
    """``|P_j / ((alpha-1) alpha^(k-1)) - 1|`` with
    ``P_j = prod_{l<j}(alpha-l) * prod_{l<k-j}(alpha+l-1)``."""
    factors = [1.0 - ell / alpha for ell in range(j)]
    factors += [1.0 + (ell - 1) / alpha for ell in range(k - j)]
    if all(f > 0 for f in factors):
        s = math.fsum(math.log1p(-ell / alpha) for ell in range(j))
        s += math.fsum(math.log1p((ell - 1) / alpha) for ell in range(k - j))
        return abs(math.expm1(s - math.log1p(-1.0 / alpha)))
    return abs(math.prod(factors) * alpha / (alpha - 1.0) - 1.0)


def log_f_tilde(alpha: float, sigma: float, k: int) -> float:
    """Log of the order-``k`` coefficient bound for the replace-one expansion."""
    lead = 4.0 if k % 2 == 0 else 3.0
    spread = math.fsum(math.comb(k, j) * _product_gap(alpha, k, j) for j in range(k + 1))
    lbt = log_moment_btilde(sigma, k)
    if lbt == -math.inf:
        return -math.inf
    return lbt + math.log(alpha - 1.0) + (k - 1) * math.log(alpha) + math.log(lead + spread)


def log_e_tilde(alpha: float, sigma: float, m: int, q: float) -> float:
    """Log of the order-``m`` remainder bound for the replace-one expansion."""
    lq = math.log(q)
    l1q = math.log1p(-q)
    lbt_m = log_moment_btilde(sigma, m)
    terms = []
    for j in range(m + 1):
        sign, l_down = _log_abs_falling(alpha, j)
        if sign == 0:
            continue
        l_up = math.fsum(math.log(alpha + ell - 1.0) for ell in range(m - j))
        w = -(alpha + m - j - 1) * l1q + math.log(math.comb(m, j)) + l_down + l_up
        if alpha - j <= 0:
            x = (alpha - j) * l1q + lbt_m
        else:
            n = math.ceil(alpha) - j
            inner = [lbt_m]
            for ell in range(n + 1):
                inner.append(
                    ell * lq
                    + math.lgamma(n + 1)
                    + math.lgamma(m + 1)
                    - math.lgamma(n - ell + 1)
                    - math.lgamma(m + ell + 1)
                    + log_moment_btilde(sigma, ell + m)
                )
            x = _lse(inner)
        terms.append(w + x)
    if not terms:
        return -math.inf
    return m * lq - math.lgamma(m + 1) + _lse(terms)


def replace_one_excess(alpha: float, sigma_hi: float, q: float, m: int, log_second: float) -> SignedLog:
    """Bracket minus one for the replace-one bound.

    ``log_second`` is the log of the second-order coefficient; the higher
    orders and the remainder use noise multiplier ``sigma_hi``.
    """
    if q == 0.0:
        return ZERO
    lq = math.log(q)
    logs = [log_e_tilde(alpha, sigma_hi, m, q)]
    for k in range(m - 1, 2, -1):
        logs.append(k * lq - math.lgamma(k + 1) + log_f_tilde(alpha, sigma_hi, k))
    logs.append(2 * lq + math.log(alpha) + math.log(alpha - 1.0) + log_second)
    return slog_sum(SignedLog(1, v) for v in logs)


def step_replace_one(alpha: float, sigma: float, q: float, m: int = 4) -> float:
    """One-step RDP bound, replace-one adjacency."""
    alpha, sigma, q, m = _validate(alpha, sigma, q, m)
    y = 2.0 / (sigma * sigma)
    # e^{2y} - e^{y} = e^{y} (e^{y} - 1)
    log_second = y + math.log(math.expm1(y))
    excess = replace_one_excess(alpha, sigma, q, m, log_second)
    return _log_bracket(excess, "replace-one", alpha, sigma, q) / (alpha - 1.0)


def step_function(adjacency: Adjacency | str, m: int) -> Callable[[float, float, float], float]:
    adjacency = Adjacency.parse(adjacency)
    base = step_add_remove if adjacency is Adjacency.ADD_REMOVE else step_replace_one
    return lambda alpha, sigma, q: base(alpha, sigma, q, m)


def compose(config: AccountantConfig) -> RdpCurve:
    """T-step RDP curve for fixed-size sampling without replacement."""
    if config.mode is not Mode.FSWOR:
        raise DomainError(f"compose handles fswor configurations, got mode {config.mode.value}")
    step = step_function(config.adjacency, config.taylor_order)
    q = config.spec.q
    tag = "fswor_ar" if config.adjacency is Adjacency.ADD_REMOVE else "fswor_ro"
    return compose_steps(lambda a, s: step(a, s, q), config, tag)
