"""RDP to (epsilon, delta) conversion."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .core import RdpCurve
from .errors import DomainError

__all__ = ["ConversionVariant", "DpGuarantee", "eps_approx", "rdp_to_dp"]


class ConversionVariant(str, enum.Enum):
    CLASSIC = "classic"
    # Balle et al. (2020), Theorem 21
    IMPROVED = "improved"

    @classmethod
    def parse(cls, value: "ConversionVariant | str") -> "ConversionVariant":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value))
        except ValueError:
            raise DomainError(f"unknown conversion variant {value!r}") from None


@dataclass(frozen=True)
class DpGuarantee:
    epsilon: float
    delta: float
    alpha_star: float
    variant: ConversionVariant


def _candidate(eps: float, alpha: float, log_delta: float, variant: ConversionVariant) -> float:
    if variant is ConversionVariant.CLASSIC:
        return eps - log_delta / (alpha - 1.0)
    return eps + math.log1p(-1.0 / alpha) - (log_delta + math.log(alpha)) / (alpha - 1.0)


def rdp_to_dp(curve: RdpCurve, delta: float, variant: ConversionVariant | str = "classic") -> DpGuarantee:
    """Smallest epsilon over the curve's grid; ties go to the smaller order."""
    variant = ConversionVariant.parse(variant)
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta!r}")
    log_delta = math.log(delta)
    best, best_alpha = math.inf, curve.alphas[0]
    for alpha, eps in curve:
        if math.isinf(eps):
            continue
        cand = _candidate(eps, alpha, log_delta, variant)
        if cand < best:
            best, best_alpha = cand, alpha
    return DpGuarantee(max(best, 0.0), delta, best_alpha, variant)


def eps_approx(rdp_coefficient: float, delta: float) -> float:
    """``2 sqrt(log(1/delta) R)`` for an RDP curve ``eps(alpha) ~ R alpha``.

    Minimising ``R alpha + log(1/delta)/(alpha - 1)`` to leading order. Only
    meant for back-of-envelope comparisons, never for reported guarantees.
    """
    if not rdp_coefficient >= 0.0:
        raise DomainError(f"R must be non-negative, got {rdp_coefficient!r}")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta!r}")
    return 2.0 * math.sqrt(-math.log(delta) * rdp_coefficient)
