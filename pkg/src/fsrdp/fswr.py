"""RDP bounds for fixed-size subsampling with replacement.

With ``|B|`` draws from ``|D|`` records, the number of copies of the
differing record is ``n ~ Binomial(|B|, 1/|D|)`` with weights ``a_n``. The
upper bound mixes add/remove moments at noise ``sigma/n`` with weights
``a~_n = a_n / q~``, ``q~ = 1 - (1 - 1/|D|)^|B|``. The lower bound is the
order-``alpha`` iterated sum

    F = sum_{n_1..n_alpha} a_{n_1} ... a_{n_alpha} exp(c sum_{i<j} n_i n_j),   c = 4/sigma^2,

evaluated level by level: ``F_2(c, d)`` has a closed form through the
binomial MGF and ``F_k(c, d) = sum_n a_n e^{dn} F_{k-1}(c, d + cn)``.
Because ``d`` is always ``c`` times an integer offset, each level is a
vector over the reachable offsets and the recursion is memoised for free.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.special import gammaln, logsumexp

from .core import (
    AccountantConfig,
    Adjacency,
    Mode,
    RdpCurve,
    SubsamplingSpec,
    check_alpha,
    check_integer_alpha,
    check_order,
    check_sigma,
    compose_steps,
)
from .errors import DomainError
from .fswor import _h_excess
from .moments import SignedLog, log1p_slog, slog_sum

__all__ = [
    "FswrWeights",
    "TruncationScheme",
    "compose_fswr",
    "fswr_lower",
    "fswr_upper_step",
    "fswr_weights",
    "loosened_lower",
]

# exponents below this go through expm1, above it through log-sum-exp
_EXPM1_LIMIT = 600.0
# cells per block of the level recursion; keeps temporaries cache-sized
_BLOCK_CELLS = 1 << 18


def _log_binomial_weights(batch: int, dataset: int) -> np.ndarray:
    n = np.arange(batch + 1, dtype=np.float64)
    if dataset == 1:
        # every draw is the differing record
        out = np.full(batch + 1, -np.inf)
        out[batch] = 0.0
        return out
    log_comb = gammaln(batch + 1.0) - gammaln(n + 1.0) - gammaln(batch - n + 1.0)
    return log_comb - n * math.log(dataset) + (batch - n) * math.log1p(-1.0 / dataset)


@dataclass(frozen=True)
class FswrWeights:
    """``q~``, the conditional weights ``a~_1..a~_|B|`` and ``a_0..a_|B|``."""

    q_tilde: float
    a_tilde: tuple[float, ...]
    a: tuple[float, ...]


def fswr_weights(batch: int, dataset: int) -> FswrWeights:
    if batch < 1 or dataset < 1:
        raise DomainError("batch and dataset sizes must be positive")
    log_a = _log_binomial_weights(batch, dataset)
    q_tilde = 1.0 if dataset == 1 else -math.expm1(batch * math.log1p(-1.0 / dataset))
    a = np.exp(log_a)
    return FswrWeights(q_tilde, tuple(a[1:] / q_tilde), tuple(a))


def fswr_upper_step(
    alpha: float,
    sigma: float,
    spec: SubsamplingSpec,
    m: int = 3,
    *,
    k: int | None = None,
    q_tilde: float | None = None,
) -> float:
    """One-step add/remove RDP upper bound for sampling with replacement.

    ``k`` and ``q_tilde`` select a member of the wider family in which draws
    with more than ``k`` copies are bounded by the plain Gaussian moment;
    they default to ``k = |B|`` and ``q~ = 1 - (1 - 1/|D|)^|B|``.
    """
    alpha, sigma, m = check_alpha(alpha), check_sigma(sigma), check_order(m)
    batch, dataset = spec.batch, spec.dataset
    k = batch if k is None else k
    if not 1 <= k <= batch:
        raise DomainError(f"need 1 <= k <= batch, got k={k}")
    log_a = _log_binomial_weights(batch, dataset)
    if q_tilde is None:
        if k != batch:
            raise DomainError("q_tilde must be given together with k < batch")
        q_tilde = -math.expm1(batch * math.log1p(-1.0 / dataset))
        head = None
    else:
        head = float(np.exp(log_a[1 : k + 1]).sum())
        a0 = math.exp(log_a[0])
        if not 0.0 < q_tilde < 1.0 or a0 - (1.0 / q_tilde - 1.0) * head < -1e-12 * a0:
            raise DomainError(f"q_tilde={q_tilde} violates the admissibility condition for k={k}")
    lqt = math.log(q_tilde)
    terms = []
    for n in range(1, k + 1):
        ex = _h_excess(alpha, sigma / n, q_tilde, m)
        if ex.sign != 0:
            terms.append(SignedLog(ex.sign, float(log_a[n]) - lqt + ex.log_magnitude))
    for n in range(k + 1, batch + 1):
        expo = 2.0 * alpha * (alpha - 1.0) * n * n / (sigma * sigma)
        lex = math.log(math.expm1(expo)) if expo < _EXPM1_LIMIT else expo + math.log1p(-math.exp(-expo))
        terms.append(SignedLog(1, float(log_a[n]) + lex))
    value = log1p_slog(slog_sum(terms))
    return max(value, 0.0) / (alpha - 1.0)


@dataclass(frozen=True)
class TruncationScheme:
    """Index sets ``T_k`` kept at each level ``k = 2..alpha`` of the recursion."""

    batch: int
    level_sets: Mapping[int, frozenset[int]]

    def __post_init__(self):
        sets = {int(k): frozenset(int(n) for n in v) for k, v in dict(self.level_sets).items()}
        object.__setattr__(self, "level_sets", sets)
        if not sets:
            raise DomainError("truncation scheme has no levels")
        levels = sorted(sets)
        if levels != list(range(2, levels[-1] + 1)):
            raise DomainError(f"levels must be 2..alpha without gaps, got {levels}")
        for k, ns in sets.items():
            if not ns:
                raise DomainError(f"level {k} is empty")
            if min(ns) < 0 or max(ns) > self.batch:
                raise DomainError(f"level {k} has indices outside 0..{self.batch}")

    @property
    def alpha(self) -> int:
        return max(self.level_sets)

    @classmethod
    def full(cls, batch: int, alpha: int) -> "TruncationScheme":
        everything = frozenset(range(batch + 1))
        return cls(batch, {k: everything for k in range(2, alpha + 1)})

    @classmethod
    def default(cls, batch: int, alpha: int) -> "TruncationScheme":
        """Full set at level 2, ``{0, 1, 2, |B|}`` above."""
        sparse = frozenset(n for n in (0, 1, 2, batch) if n <= batch)
        sets = {k: sparse for k in range(3, alpha + 1)}
        sets[2] = frozenset(range(batch + 1))
        return cls(batch, sets)


def _combine(log_a: np.ndarray, exps: np.ndarray, deficit: float) -> np.ndarray:
    """Row-wise ``log(sum_n a_n exp(exps[:, n]))`` where the full weights sum to 1.

    ``deficit`` is the weight of the indices left out. The part near one is
    accumulated as ``sum a_n expm1(e_n) - deficit`` so that F close to 1 keeps
    its precision; exponents above the limit are added in log space.
    """
    a = np.exp(log_a)
    small = exps < _EXPM1_LIMIT
    excess = np.where(small, a * np.expm1(np.where(small, exps, 0.0)), -a).sum(axis=1) - deficit
    out = np.empty(exps.shape[0])
    big = ~small
    has_big = big.any(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[~has_big] = np.where(excess[~has_big] > -1.0, np.log1p(excess[~has_big]), -np.inf)
        if has_big.any():
            rows = np.flatnonzero(has_big)
            lb = logsumexp(np.where(big[rows], log_a + exps[rows], -np.inf), axis=1)
            base = np.log1p(np.maximum(excess[rows], -1.0))
            out[rows] = np.logaddexp(base, lb)
    return out


def _log_binomial_mgf_factor(t: np.ndarray, p: float) -> np.ndarray:
    """``log(1 - p + p e^t)``, precise for small ``t`` and overflow-free for large."""
    small = t < _EXPM1_LIMIT
    near = np.log1p(p * np.expm1(np.where(small, t, 0.0)))
    with np.errstate(divide="ignore"):
        far = np.logaddexp(np.log1p(-p), math.log(p) + t)
    return np.where(small, near, far)


def _log_f(alpha: int, c: float, batch: int, dataset: int, scheme: TruncationScheme) -> float:
    log_a_all = _log_binomial_weights(batch, dataset)
    a_all = np.exp(log_a_all)
    levels = {k: np.array(sorted(scheme.level_sets[k]), dtype=np.int64) for k in range(2, alpha + 1)}
    deficits = {}
    for k, ns in levels.items():
        mask = np.ones(batch + 1, dtype=bool)
        mask[ns] = False
        deficits[k] = math.fsum(a_all[mask])
    # offsets reachable at each level, from the top down
    offsets = {alpha: np.array([0], dtype=np.int64)}
    for k in range(alpha, 2, -1):
        offsets[k - 1] = np.unique((offsets[k][:, None] + levels[k][None, :]).ravel())
    p = 1.0 / dataset
    ns2 = levels[2].astype(np.float64)
    la2 = log_a_all[levels[2]]
    values = np.empty(offsets[2].size)
    rows = max(1, _BLOCK_CELLS // ns2.size)
    for start in range(0, offsets[2].size, rows):
        d = c * offsets[2][start : start + rows].astype(np.float64)[:, None]
        exps = d * ns2 + batch * _log_binomial_mgf_factor(c * ns2 + d, p)
        values[start : start + rows] = _combine(la2, exps, deficits[2])
    for k in range(3, alpha + 1):
        child_offsets, child = offsets[k - 1], values
        ns = levels[k]
        la = log_a_all[ns]
        values = np.empty(offsets[k].size)
        rows = max(1, _BLOCK_CELLS // ns.size)
        for start in range(0, offsets[k].size, rows):
            s = offsets[k][start : start + rows]
            idx = np.searchsorted(child_offsets, s[:, None] + ns[None, :])
            exps = c * s.astype(np.float64)[:, None] * ns.astype(np.float64) + child[idx]
            values[start : start + rows] = _combine(la, exps, deficits[k])
    return float(values[0])


def fswr_lower(
    alpha: int,
    sigma: float,
    batch: int,
    dataset_size: int,
    scheme: TruncationScheme | None = None,
) -> float:
    """Lower bound on the worst-case one-step RDP with replacement (integer orders).

    Truncating the index sets drops non-negative terms, so any scheme gives a
    valid lower bound; the result is floored at 0, which is always valid.
    """
    a = check_integer_alpha(alpha)
    sigma = check_sigma(sigma)
    if batch < 1 or dataset_size < 1:
        raise DomainError("batch and dataset sizes must be positive")
    scheme = TruncationScheme.default(batch, a) if scheme is None else scheme
    if scheme.batch != batch or scheme.alpha != a:
        raise DomainError(f"scheme is for batch={scheme.batch}, alpha={scheme.alpha}")
    value = _log_f(a, 4.0 / (sigma * sigma), batch, dataset_size, scheme)
    return max(value, 0.0) / (a - 1)


def loosened_lower(alpha: int, sigma: float, batch: int, q: float) -> float:
    """Closed-form lower bound keeping only the all-``|B|`` term."""
    a = check_integer_alpha(alpha)
    return (a * batch / (a - 1)) * (2.0 * batch * (a - 1) / (sigma * sigma) - math.log(batch) - math.log(1.0 / q))


def compose_fswr(config: AccountantConfig) -> RdpCurve:
    """T-step add/remove RDP curve for sampling with replacement."""
    if config.adjacency is not Adjacency.ADD_REMOVE:
        raise DomainError("the with-replacement bound is for add/remove adjacency")
    if config.mode is not Mode.FSWR:
        raise DomainError(f"compose_fswr handles fswr configurations, got mode {config.mode.value}")
    m = config.taylor_order
    return compose_steps(lambda a, s: fswr_upper_step(a, s, config.spec, m), config, "fswr_upper")
