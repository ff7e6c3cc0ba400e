"""Shared value types: sampling context, accountant configuration, RDP curves."""
from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from .errors import DomainError


class Adjacency(str, enum.Enum):
    ADD_REMOVE = "add_remove"
    REPLACE_ONE = "replace_one"

    @classmethod
    def parse(cls, value: "Adjacency | str") -> "Adjacency":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).replace("-", "_"))
        except ValueError:
            raise DomainError(f"unknown adjacency {value!r}") from None


class Mode(str, enum.Enum):
    FSWOR = "fswor"
    FSWR = "fswr"
    POISSON = "poisson"

    @classmethod
    def parse(cls, value: "Mode | str") -> "Mode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value))
        except ValueError:
            raise DomainError(f"unknown subsampling mode {value!r}") from None


DEFAULT_M = {Adjacency.ADD_REMOVE: 3, Adjacency.REPLACE_ONE: 4}


def default_alpha_grid() -> tuple[float, ...]:
    """Orders 1.1, 1.2, ..., 10.9 together with the integers 2..256."""
    grid = {1 + x / 10 for x in range(1, 100)} | {float(a) for a in range(2, 257)}
    return tuple(sorted(grid))


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (alpha > 1.0) or math.isinf(alpha) or math.isnan(alpha):
        raise DomainError(f"Renyi order must be a finite real > 1, got {alpha!r}")
    return alpha


def check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not (sigma > 0.0) or math.isnan(sigma):
        raise DomainError(f"noise multiplier must be positive, got {sigma!r}")
    return sigma


def check_rate(q: float) -> float:
    q = float(q)
    if not (0.0 <= q < 1.0):
        raise DomainError(f"sampling rate must lie in [0, 1), got {q!r}")
    return q


def check_order(m: int) -> int:
    if isinstance(m, bool) or not isinstance(m, int) or m < 3:
        raise DomainError(f"Taylor order must be an integer >= 3, got {m!r}")
    return m


def check_integer_alpha(alpha: float) -> int:
    if isinstance(alpha, bool):
        raise DomainError(f"order must be an integer >= 2, got {alpha!r}")
    a = float(alpha)
    if not a.is_integer() or a < 2:
        raise DomainError(f"order must be an integer >= 2, got {alpha!r}")
    return int(a)


@dataclass(frozen=True)
class SubsamplingSpec:
    """Minibatch size and dataset size for one subsampled step."""

    batch: int
    dataset: int

    def __post_init__(self):
        for name in ("batch", "dataset"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise DomainError(f"{name} must be an integer, got {v!r}")
        if not 1 <= self.batch < self.dataset:
            raise DomainError(f"need 1 <= batch < dataset, got batch={self.batch}, dataset={self.dataset}")

    @property
    def q(self) -> float:
        return self.batch / self.dataset

    def steps_per_epoch(self) -> int:
        return -(-self.dataset // self.batch)


@dataclass(frozen=True)
class AccountantConfig:
    """Everything needed to compose per-step bounds into an RDP curve.

    ``sigmas`` holds one noise multiplier per step, so ``len(sigmas)`` is the
    number of steps. ``m=None`` picks the default order for the adjacency.
    """

    spec: SubsamplingSpec
    sigmas: tuple[float, ...]
    adjacency: Adjacency = Adjacency.ADD_REMOVE
    m: int | None = None
    alpha_grid: tuple[float, ...] = field(default_factory=default_alpha_grid)
    mode: Mode = Mode.FSWOR

    def __post_init__(self):
        object.__setattr__(self, "adjacency", Adjacency.parse(self.adjacency))
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        object.__setattr__(self, "sigmas", tuple(check_sigma(s) for s in self.sigmas))
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
        if not self.sigmas:
            raise DomainError("at least one step is required")
        if self.m is not None:
            check_order(self.m)
        if not self.alpha_grid:
            raise DomainError("alpha grid is empty")
        for a in self.alpha_grid:
            check_alpha(a)
        if any(b <= a for a, b in zip(self.alpha_grid, self.alpha_grid[1:])):
            raise DomainError("alpha grid must be strictly increasing")

    @classmethod
    def constant(cls, spec: SubsamplingSpec, sigma: float, steps: int, **kwargs) -> "AccountantConfig":
        if isinstance(steps, bool) or not isinstance(steps, int) or steps < 1:
            raise DomainError(f"steps must be a positive integer, got {steps!r}")
        return cls(spec=spec, sigmas=(float(sigma),) * steps, **kwargs)

    @property
    def steps(self) -> int:
        return len(self.sigmas)

    @property
    def taylor_order(self) -> int:
        return self.m if self.m is not None else DEFAULT_M[self.adjacency]

    def sigma_counts(self) -> list[tuple[float, int]]:
        """Distinct noise multipliers with multiplicities, in increasing order."""
        return sorted(Counter(self.sigmas).items())


@dataclass(frozen=True)
class RdpCurve:
    """Epsilon bounds on a strictly increasing grid of Renyi orders."""

    alphas: tuple[float, ...]
    epsilons: tuple[float, ...]
    method: str = ""
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        if len(self.alphas) != len(self.epsilons):
            raise DomainError("alphas and epsilons differ in length")
        if not self.alphas:
            raise DomainError("an RDP curve needs at least one point")
        for a in self.alphas:
            check_alpha(a)
        if any(b <= a for a, b in zip(self.alphas, self.alphas[1:])):
            raise DomainError("curve orders must be strictly increasing")
        if any(math.isnan(e) or e < 0 for e in self.epsilons):
            raise DomainError("curve values must be non-negative")

    def __len__(self) -> int:
        return len(self.alphas)

    def __iter__(self) -> Iterator[tuple[float, float]]:
        return iter(zip(self.alphas, self.epsilons))

    @property
    def points(self) -> dict[float, float]:
        return dict(zip(self.alphas, self.epsilons))

    def __getitem__(self, alpha: float) -> float:
        return self.points[float(alpha)]


def compose_steps(step, config: AccountantConfig, method: str, alphas: Sequence[float] | None = None) -> RdpCurve:
    """Sum ``step(alpha, sigma)`` over the steps of ``config``.

    Each distinct sigma is evaluated once per order and weighted by its
    multiplicity; the weighted terms are added with ``math.fsum`` in sigma
    order, so the result does not depend on evaluation order.
    """
    counts = config.sigma_counts()
    grid = config.alpha_grid if alphas is None else tuple(alphas)
    eps = []
    for alpha in grid:
        terms = [n * step(alpha, s) for s, n in counts]
        eps.append(math.inf if any(math.isinf(t) for t in terms) else math.fsum(terms))
    meta = {
        "batch": config.spec.batch,
        "dataset": config.spec.dataset,
        "steps": config.steps,
        "m": config.taylor_order,
        "adjacency": config.adjacency.value,
        "sigma": counts[0][0] if len(counts) == 1 else None,
    }
    return RdpCurve(grid, eps, method, meta)
