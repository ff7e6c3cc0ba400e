"""Shared fixtures and high-precision reference values."""
from __future__ import annotations

import math

import mpmath
import pytest

_CRITERIA: dict[int, tuple[bool, str]] = {}


def mp_moment(sigma: float, k: int) -> mpmath.mpf:
    """``M_{sigma,k}`` by the alternating binomial sum at ample working precision."""
    s2 = mpmath.mpf(sigma) ** 2
    # digits lost to cancellation plus the size of the largest term
    dps = int(k * 0.31 + 0.5 * k * max(0.0, math.log10(sigma * sigma / 4.0)) + 2.0 * k * k / sigma**2 * 0.44) + 60
    with mpmath.workdps(dps):
        s2 = mpmath.mpf(sigma) ** 2
        total = mpmath.fsum(
            (-1) ** (k - ell) * mpmath.binomial(k, ell) * mpmath.exp(2 * ell * (ell - 1) / s2)
            for ell in range(k + 1)
        )
        return +total


def mp_log_moment(sigma: float, k: int) -> float:
    value = mp_moment(sigma, k)
    return float(mpmath.log(value)) if value > 0 else -math.inf


@pytest.fixture
def record_criterion():
    """Record a pass/fail line for the acceptance summary."""

    def record(number: int, ok: bool, detail: str = "") -> None:
        _CRITERIA[number] = (ok, detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        ok, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
