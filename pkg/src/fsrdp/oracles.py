"""Independent reference computations used to check the accountants.

Nothing here shares code with the bound implementations: closed forms are
summed directly, sampling lemmas are checked by exhaustive enumeration in
exact rational arithmetic, and mixture divergences are estimated by Monte
Carlo.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError

__all__ = [
    "McEstimate",
    "MixtureSpec",
    "ValidationReport",
    "brute_fswr_lower",
    "brute_variance",
    "exact_h_integer",
    "exact_log_h_integer",
    "mc_mixture_renyi",
    "validate_fswor_decomposition",
    "validate_fswr_decomposition",
]


def exact_h_integer(alpha: int, sigma: float, q: float) -> float:
    """``sum_k C(alpha,k) q^k (1-q)^(alpha-k) exp(2k(k-1)/sigma^2)`` for integer ``alpha``."""
    if int(alpha) != alpha or alpha < 2:
        raise DomainError(f"alpha must be an integer >= 2, got {alpha!r}")
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    if not 0.0 <= q <= 1.0:
        raise DomainError("q must lie in [0, 1]")
    a = int(alpha)
    return math.fsum(
        math.comb(a, k) * q**k * (1.0 - q) ** (a - k) * math.exp(2.0 * k * (k - 1) / sigma**2)
        for k in range(a + 1)
    )


def exact_log_h_integer(alpha: int, sigma: float, q: float) -> float:
    """``log`` of :func:`exact_h_integer`, accurate when the moment is close to one.

    The binomial weights sum to one, so ``H - 1`` is the weighted sum of
    ``expm1`` terms, which avoids the cancellation in ``log(H)``.
    """
    if int(alpha) != alpha or alpha < 2:
        raise DomainError(f"alpha must be an integer >= 2, got {alpha!r}")
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    if not 0.0 <= q <= 1.0:
        raise DomainError("q must lie in [0, 1]")
    a = int(alpha)
    excess = math.fsum(
        math.comb(a, k) * q**k * (1.0 - q) ** (a - k) * math.expm1(2.0 * k * (k - 1) / sigma**2)
        for k in range(2, a + 1)
    )
    return math.log1p(excess)


# Monte Carlo


@dataclass(frozen=True)
class MixtureSpec:
    """Gaussian mixture ``sum_i w_i N(mu_i, s^2)`` with a shared scale."""

    weights: tuple[float, ...]
    means: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        mu = tuple(float(x) for x in self.means)
        if len(w) != len(mu) or not w:
            raise DomainError("weights and means must be non-empty and of equal length")
        if any(x < 0 for x in w) or abs(math.fsum(w) - 1.0) > 1e-12:
            raise DomainError("weights must be non-negative and sum to 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)

    @classmethod
    def two_point(cls, q: float, mean: float, base: float = 0.0) -> "MixtureSpec":
        """``(1-q) N(base, s^2) + q N(mean, s^2)``."""
        return cls((1.0 - q, q), (base, mean))


@dataclass(frozen=True)
class McEstimate:
    """Mean of antithetic pair averages; ``samples`` counts Gaussian draws.

    ``std_error`` is the sample standard deviation of the pair averages over
    the square root of the number of pairs.
    """

    value: float
    std_error: float
    samples: int
    seed: int


_CHUNK_PAIRS = 1 << 15


def _log_ratio(theta: np.ndarray, mix: MixtureSpec | None, s2: float) -> np.ndarray:
    """log of mixture density over ``N(0, s^2)`` density at ``theta``."""
    if mix is None:
        return np.zeros_like(theta)
    mu = np.asarray(mix.means)[:, None]
    w = np.asarray(mix.weights)[:, None]
    return logsumexp((2.0 * mu * theta[None, :] - mu * mu) / (2.0 * s2), axis=0, b=w)


def _chunk_moments(args):
    alpha, num, den, s, seed, index, pairs = args
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))
    z = rng.standard_normal(pairs)
    vals = []
    for theta in (s * z, -s * z):
        lp = _log_ratio(theta, num, s * s)
        lq = _log_ratio(theta, den, s * s)
        vals.append(np.exp(alpha * lp - (alpha - 1.0) * lq))
    pair = 0.5 * (vals[0] + vals[1])
    mean = float(pair.mean())
    m2 = float(((pair - mean) ** 2).sum())
    return pairs, mean, m2


def mc_mixture_renyi(
    alpha: float,
    mixture: MixtureSpec,
    sigma_eff: float,
    samples: int,
    seed: int,
    *,
    reference: MixtureSpec | None = None,
    workers: int = 1,
) -> McEstimate:
    """Estimate ``E_{N(0,s^2)}[(P/N0)^alpha (R/N0)^(1-alpha)]``.

    ``P`` is ``mixture`` and ``R`` is ``reference`` (``N(0, s^2)`` itself when
    omitted), both with scale ``s = sigma_eff``. Draws come in antithetic
    pairs ``(z, -z)`` from fixed-size chunks seeded by
    ``SeedSequence(seed, spawn_key=(chunk,))``; chunk results are merged in
    chunk order, so the estimate does not depend on ``workers``.
    """
    if not sigma_eff > 0:
        raise DomainError(f"sigma_eff must be positive, got {sigma_eff!r}")
    if samples < 10_000:
        raise DomainError("use at least 10^4 samples")
    if not alpha > 1:
        raise DomainError("alpha must exceed 1")
    pairs_total = samples // 2
    jobs = []
    for index, start in enumerate(range(0, pairs_total, _CHUNK_PAIRS)):
        size = min(_CHUNK_PAIRS, pairs_total - start)
        jobs.append((float(alpha), mixture, reference, float(sigma_eff), int(seed), index, size))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_moments, jobs))
    else:
        parts = [_chunk_moments(j) for j in jobs]
    # Chan et al. pairwise merge, in chunk order
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parts:
        tot = n + nb
        delta = mb - mean
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    std_error = math.sqrt(m2 / (n - 1) / n)
    return McEstimate(mean, std_error, 2 * n, int(seed))


# exhaustive enumeration


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    outcomes: int
    expected: Fraction
    mismatches: tuple = field(default_factory=tuple)


def validate_fswor_decomposition(dataset_size: int, batch: int) -> ValidationReport:
    """Check that the two-stage construction yields a uniform size-``batch`` subset.

    Element ``dataset_size - 1`` plays the differing record. With probability
    ``batch/|D|`` it is included together with a uniform ``(batch-1)``-subset
    of a uniform ``batch``-subset of the other records; otherwise the batch is
    that ``batch``-subset itself.
    """
    if not 1 <= batch <= dataset_size <= 8:
        raise DomainError("need 1 <= batch <= dataset_size <= 8")
    last = dataset_size - 1
    rest = range(last)
    q = Fraction(batch, dataset_size)
    dist: dict[frozenset, Fraction] = {}

    def add(subset, p):
        dist[subset] = dist.get(subset, Fraction(0)) + p

    base = list(itertools.combinations(rest, batch))
    if base:
        p_base = Fraction(1, len(base))
        for b in base:
            if q < 1:
                add(frozenset(b), (1 - q) * p_base)
            subs = list(itertools.combinations(b, batch - 1))
            for sub in subs:
                add(frozenset(sub) | {last}, q * p_base / len(subs))
    else:
        # batch == |D|: the first stage is empty and J = 1 surely; the inner
        # draw is then a uniform (batch-1)-subset of the remaining records
        subs = list(itertools.combinations(rest, batch - 1))
        for sub in subs:
            add(frozenset(sub) | {last}, q / len(subs))
    expected = Fraction(1, math.comb(dataset_size, batch))
    targets = {frozenset(c) for c in itertools.combinations(range(dataset_size), batch)}
    bad = tuple(
        (tuple(sorted(s)), dist.get(s, Fraction(0)))
        for s in sorted(targets | set(dist), key=lambda t: tuple(sorted(t)))
        if dist.get(s, Fraction(0)) != expected or s not in targets
    )
    return ValidationReport(not bad and sum(dist.values()) == 1, len(dist), expected, bad)


def validate_fswr_decomposition(dataset_size: int, batch: int) -> ValidationReport:
    """Check that overwriting ``N ~ Bin(batch, 1/|D|)`` uniformly chosen slots of an
    iid draw from the other records with the differing record gives iid uniform tuples."""
    if not (1 <= dataset_size <= 6 and 1 <= batch <= 4):
        raise DomainError("need 1 <= dataset_size <= 6 and 1 <= batch <= 4")
    last = dataset_size - 1
    p = Fraction(1, dataset_size)
    dist: dict[tuple, Fraction] = {}
    # B' is iid uniform over the other records; with |D| = 1 there are none,
    # but then N = batch surely and B' is irrelevant
    base = list(itertools.product(range(last), repeat=batch)) if last else [(0,) * batch]
    p_base = Fraction(1, len(base))
    perms = list(itertools.permutations(range(batch)))
    p_perm = Fraction(1, len(perms))
    for n in range(batch + 1):
        p_n = math.comb(batch, n) * p**n * (1 - p) ** (batch - n)
        if p_n == 0:
            continue
        for b in base:
            for perm in perms:
                out = list(b)
                for pos in perm[:n]:
                    out[pos] = last
                key = tuple(out)
                dist[key] = dist.get(key, Fraction(0)) + p_n * p_base * p_perm
    expected = Fraction(1, dataset_size**batch)
    targets = set(itertools.product(range(dataset_size), repeat=batch))
    bad = tuple(
        (k, dist.get(k, Fraction(0)))
        for k in sorted(targets | set(dist))
        if dist.get(k, Fraction(0)) != expected or k not in targets
    )
    return ValidationReport(not bad and sum(dist.values()) == 1, len(dist), expected, bad)


def brute_fswr_lower(alpha: int, sigma: float, batch: int, dataset_size: int) -> float:
    """Full ``(batch+1)^alpha`` iterated sum for the with-replacement lower bound."""
    if int(alpha) != alpha or not 2 <= alpha <= 4:
        raise DomainError("alpha must be an integer in 2..4")
    if not 1 <= batch <= 8:
        raise DomainError("batch must lie in 1..8")
    a = int(alpha)
    c = 4.0 / sigma**2
    p = 1.0 / dataset_size
    w = [math.comb(batch, n) * p**n * (1.0 - p) ** (batch - n) for n in range(batch + 1)]
    # the weights sum to one, so the bracket minus one is a sum of w * expm1
    excess = math.fsum(
        math.prod(w[n] for n in ns) * math.expm1(c * sum(x * y for x, y in itertools.combinations(ns, 2)))
        for ns in itertools.product(range(batch + 1), repeat=a)
    )
    return math.log1p(excess) / (a - 1)


def brute_variance(values: Sequence[float], batch: int, mode: str) -> Fraction:
    """Exact variance of the minibatch mean by enumerating every sample.

    ``mode`` is ``poisson`` (sum over a Bernoulli(batch/|D|) subset, divided
    by ``batch``), ``fswor`` (mean of a uniform ``batch``-subset) or ``fswr``
    (mean of ``batch`` iid uniform draws).
    """
    vals = [Fraction(v) for v in values]
    n = len(vals)
    if not 1 <= n <= 6 or not 1 <= batch <= n:
        raise DomainError("need 1 <= batch <= |D| <= 6")
    outcomes: list[tuple[Fraction, Fraction]] = []
    if mode == "poisson":
        q = Fraction(batch, n)
        for mask in itertools.product((0, 1), repeat=n):
            k = sum(mask)
            prob = q**k * (1 - q) ** (n - k)
            outcomes.append((prob, sum((v for v, b in zip(vals, mask) if b), Fraction(0)) / batch))
    elif mode == "fswor":
        subsets = list(itertools.combinations(vals, batch))
        outcomes = [(Fraction(1, len(subsets)), sum(s) / batch) for s in subsets]
    elif mode == "fswr":
        # ordered draws grouped by multiset, weighted by their multinomial count
        total = n**batch
        for idx in itertools.combinations_with_replacement(range(n), batch):
            ways = math.factorial(batch)
            for c in Counter(idx).values():
                ways //= math.factorial(c)
            outcomes.append((Fraction(ways, total), sum(vals[i] for i in idx) / batch))
    else:
        raise DomainError(f"unknown mode {mode!r}")
    mean = sum(p * z for p, z in outcomes)
    return sum(p * (z - mean) ** 2 for p, z in outcomes)
