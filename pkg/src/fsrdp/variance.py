"""Variance of the minibatch mean-gradient estimator under three samplers.

For scalar per-example values ``a_1..a_|D|`` (a gradient projected on a
fixed direction) and batch size ``|B|``:

* Poisson, inclusion probability ``q = |B|/|D|``, normalised by ``|B|``:
  ``(1/|B| - 1/|D|) mean(a^2)``
* fixed size without replacement: ``|D|/(|D|-1) (1/|B| - 1/|D|) var(a)``
* fixed size with replacement: ``var(a) / |B|``

where ``var(a) = mean(a^2) - mean(a)^2`` is the population variance.
"""
from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Sequence

from .errors import DomainError

__all__ = [
    "Population",
    "var_fswor",
    "var_fswr",
    "var_poisson",
    "variance_ratios",
]


@dataclass(frozen=True)
class Population:
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise DomainError("population is empty")
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("population values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def size(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return statistics.fmean(self.values)

    @property
    def mean_square(self) -> float:
        return math.fsum(v * v for v in self.values) / len(self.values)

    @property
    def spread(self) -> float:
        """Population variance ``mean(a^2) - mean(a)^2`` (computed exactly, then rounded)."""
        return statistics.pvariance(self.values)


def _as_population(pop: Population | Sequence[float]) -> Population:
    return pop if isinstance(pop, Population) else Population(tuple(pop))


def _check_batch(pop: Population, batch: int) -> None:
    if isinstance(batch, bool) or not isinstance(batch, int) or not 1 <= batch <= pop.size:
        raise DomainError(f"batch must be an integer in 1..{pop.size}, got {batch!r}")


def var_poisson(pop: Population | Sequence[float], batch: int) -> float:
    pop = _as_population(pop)
    _check_batch(pop, batch)
    return (1.0 / batch - 1.0 / pop.size) * pop.mean_square


def var_fswor(pop: Population | Sequence[float], batch: int) -> float:
    pop = _as_population(pop)
    _check_batch(pop, batch)
    n = pop.size
    if n < 2:
        raise DomainError("sampling without replacement needs at least two records")
    return n / (n - 1) * (1.0 / batch - 1.0 / n) * pop.spread


def var_fswr(pop: Population | Sequence[float], batch: int) -> float:
    # equals (1 - 1/|D|)/(1 - q) * var_fswor when q < 1, and stays defined at q = 1
    pop = _as_population(pop)
    _check_batch(pop, batch)
    return pop.spread / batch


def variance_ratios(pop: Population | Sequence[float], batch: int) -> dict[str, float]:
    """``var_fswor/var_poisson`` and ``var_fswr/var_fswor`` in closed form."""
    pop = _as_population(pop)
    _check_batch(pop, batch)
    n = pop.size
    if var_poisson(pop, batch) == 0.0:
        raise DomainError("Poisson variance is zero; ratio undefined")
    if var_fswor(pop, batch) == 0.0:
        raise DomainError("without-replacement variance is zero; ratio undefined")
    keep = 1.0 - 1.0 / n
    return {
        "fswor_over_poisson": (pop.spread / pop.mean_square) / keep,
        "fswr_over_fswor": keep / (1.0 - batch / n),
    }
