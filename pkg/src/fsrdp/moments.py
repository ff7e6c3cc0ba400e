"""Central moments of the Gaussian likelihood ratio.

For a noise multiplier ``sigma`` let ``L`` be the likelihood ratio of
``N(1, sigma^2/4)`` against ``N(0, sigma^2/4)``, evaluated under the latter.
``moment_m(sigma, k)`` is ``E[(L - 1)^k]``, which expands to the finite
alternating sum

    M_k = sum_{l=2}^{k} (-1)^(k-l) C(k, l) exp(2 l (l-1) / sigma^2) + (-1)^(k-1) (k-1).

``moment_btilde(sigma, j)`` is the computable envelope of ``E|L - 1|^j``:
``M_j`` for even ``j`` and ``sqrt(M_{j-1} M_{j+1})`` for odd ``j``.

The alternating sum is evaluated in signed log space. When the terms cancel
so badly that double precision cannot resolve the result (small
``4/sigma^2`` and moderate ``k``), the table entry is recomputed from a
power series in ``4/sigma^2`` whose terms are all non-negative.
"""
from __future__ import annotations

import logging
import math
import threading
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, NamedTuple

import numpy as np

from ._backend import kernels
from .errors import DomainError, SaturationWarning

log = logging.getLogger(__name__)

_EPS = 2.0**-52
# entries whose estimated relative rounding error exceeds this are recomputed
_COND_TOL = 1e-13
_SERIES_MAX_STEPS = 200_000
_MAX_LOG_FLOAT = math.log(np.finfo(float).max)


class SignedLog(NamedTuple):
    """A real number stored as ``sign * exp(log_magnitude)``."""

    sign: int
    log_magnitude: float

    @classmethod
    def from_float(cls, value: float) -> "SignedLog":
        if value == 0.0:
            return cls(0, -math.inf)
        if math.isnan(value):
            raise ValueError("cannot represent NaN")
        return cls(1 if value > 0 else -1, math.log(abs(value)))

    def to_float(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.log_magnitude > _MAX_LOG_FLOAT:
            return math.copysign(math.inf, self.sign)
        return self.sign * math.exp(self.log_magnitude)

    def __mul__(self, other: "SignedLog") -> "SignedLog":  # type: ignore[override]
        if not isinstance(other, SignedLog):
            return NotImplemented
        if self.sign == 0 or other.sign == 0:
            return ZERO
        return SignedLog(self.sign * other.sign, self.log_magnitude + other.log_magnitude)

    def __neg__(self) -> "SignedLog":
        return SignedLog(-self.sign, self.log_magnitude)


ZERO = SignedLog(0, -math.inf)
ONE = SignedLog(1, 0.0)


def slog_sum(terms: Iterable[SignedLog]) -> SignedLog:
    """Sum signed-log terms without leaving log space."""
    terms = list(terms)
    if not terms:
        return ZERO
    sign, mag = kernels.signed_log_sum([t.sign for t in terms], [t.log_magnitude for t in terms])
    return SignedLog(int(sign), float(mag))


def log1p_slog(excess: SignedLog) -> float:
    """``log(1 + x)`` for ``x`` given in signed-log form; ``-inf`` when ``1 + x <= 0``."""
    if excess.sign == 0:
        return 0.0
    lm = excess.log_magnitude
    if excess.sign > 0:
        if lm == math.inf:
            return math.inf
        if lm < 30.0:
            return math.log1p(math.exp(lm))
        return lm + math.log1p(math.exp(-lm))
    if lm >= 0.0:
        return -math.inf
    return math.log1p(-math.exp(lm))


@dataclass(frozen=True)
class MomentKey:
    sigma: float
    k: int

    def __post_init__(self):
        _check_sigma(self.sigma)
        if not isinstance(self.k, (int, np.integer)) or self.k < 0:
            raise DomainError(f"moment order must be a non-negative integer, got {self.k!r}")


def _check_sigma(sigma: float) -> None:
    if not (sigma > 0.0) or math.isnan(sigma):
        raise DomainError(f"sigma must be positive, got {sigma!r}")


@lru_cache(maxsize=8)
def _log_binom_table(kmax: int) -> np.ndarray:
    table = np.full((kmax + 1, kmax + 1), -np.inf)
    for k in range(kmax + 1):
        for ell in range(k + 1):
            table[k, ell] = math.log(math.comb(k, ell))
    return table


def _table_size(kmax: int) -> int:
    size = 16
    while size < kmax:
        size *= 2
    return size


def _build_log_moments(x: float, kmax: int) -> tuple[float, ...]:
    """log M_k for k = 0..kmax at ``x = 4/sigma^2`` (``-inf`` encodes zero)."""
    out = [-math.inf] * (kmax + 1)
    out[0] = 0.0
    if kmax < 2:
        return tuple(out)
    if x == 0.0:
        return tuple(out)
    signs, logmag, logabs = kernels.log_moment_direct(x, kmax, _log_binom_table(kmax))
    bad = []
    for k in range(2, kmax + 1):
        if k == 2:
            out[2] = math.log(math.expm1(x)) if x < 700.0 else logmag[2]
            continue
        if logmag[k] == math.inf:
            out[k] = math.inf
            continue
        if signs[k] <= 0 or logmag[k] == -math.inf:
            bad.append(k)
            continue
        rel_err = (k + 2) * _EPS * math.exp(min(logabs[k] - logmag[k], 700.0))
        if rel_err > _COND_TOL:
            bad.append(k)
        else:
            out[k] = float(logmag[k])
    if bad:
        kser = max(bad)
        acc = kernels.log_moment_series(x, kser, _SERIES_MAX_STEPS)
        lh = math.log(0.5 * x)
        for k in bad:
            out[k] = math.lgamma(k + 1) + 0.5 * k * lh + float(acc[k])
    return tuple(out)


class _MomentCache:
    """Per-sigma tables of log M_k, grown on demand.

    Tables are immutable tuples swapped in under a lock, so concurrent
    readers always see a complete table; racing builders compute identical
    values and the larger table wins.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._tables: dict[float, tuple[float, ...]] = {}

    def log_m(self, sigma: float, k: int) -> float:
        table = self._tables.get(sigma)
        if table is None or len(table) <= k:
            table = self._grow(sigma, k)
        return table[k]

    def _grow(self, sigma: float, k: int) -> tuple[float, ...]:
        size = _table_size(k)
        table = _build_log_moments(4.0 / (sigma * sigma), size)
        with self._lock:
            current = self._tables.get(sigma)
            if current is None or len(current) < len(table):
                self._tables[sigma] = table
            else:
                table = current
        return table

    def clear(self) -> None:
        with self._lock:
            self._tables.clear()


_CACHE = _MomentCache()


def clear_cache() -> None:
    _CACHE.clear()


def log_moment_m(sigma: float, k: int) -> float:
    """Natural log of ``M_{sigma,k}`` (``-inf`` when it is zero)."""
    key = MomentKey(float(sigma), int(k))
    return _CACHE.log_m(key.sigma, key.k)


def log_moment_btilde(sigma: float, j: int) -> float:
    """Natural log of the envelope ``B~_{sigma,j}``."""
    if j < 1:
        raise DomainError(f"envelope order must be >= 1, got {j!r}")
    if j % 2 == 0:
        return log_moment_m(sigma, j)
    lo = log_moment_m(sigma, j - 1)
    hi = log_moment_m(sigma, j + 1)
    if lo == -math.inf or hi == -math.inf:
        return -math.inf
    return 0.5 * (lo + hi)


def _saturating_exp(logval: float, what: str) -> float:
    if logval > _MAX_LOG_FLOAT:
        warnings.warn(f"{what} overflows double precision; returning +inf", SaturationWarning, stacklevel=3)
        return math.inf
    return math.exp(logval)


def moment_m(sigma: float, k: int) -> float:
    """``M_{sigma,k}``; saturates to ``+inf`` with a ``SaturationWarning``."""
    return _saturating_exp(log_moment_m(sigma, k), f"M(sigma={sigma}, k={k})")


def moment_btilde(sigma: float, j: int) -> float:
    """``B~_{sigma,j}``; saturates to ``+inf`` with a ``SaturationWarning``."""
    return _saturating_exp(log_moment_btilde(sigma, j), f"B~(sigma={sigma}, j={j})")
