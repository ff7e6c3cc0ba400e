"""Acceptance criteria 1-11, each at its stated tolerance.

Run under pytest for a per-criterion summary at the end of the session, or
directly (``python tests/test_acceptance.py``) for one line per criterion.
"""
from __future__ import annotations

import math
import random

import pytest

from fsrdp.baselines import poisson_replace_one_step, wang_lower, wang_upper
from fsrdp.conversion import eps_approx, rdp_to_dp
from fsrdp.core import AccountantConfig, Adjacency, SubsamplingSpec, compose_steps
from fsrdp.fswor import compose, h_upper, step_add_remove, step_replace_one
from fsrdp.fswr import TruncationScheme, fswr_lower, fswr_upper_step, loosened_lower
from fsrdp.oracles import (
    MixtureSpec,
    brute_fswr_lower,
    brute_variance,
    exact_h_integer,
    mc_mixture_renyi,
    validate_fswor_decomposition,
    validate_fswr_decomposition,
)
from fsrdp.variance import var_fswor, var_fswr, var_poisson

SIGMA, BATCH, DATASET = 6.0, 120, 50000
SPEC = SubsamplingSpec(BATCH, DATASET)
Q = SPEC.q
DELTAS = tuple(10.0**-k for k in range(4, 11))


def criterion_1():
    ratio = wang_upper(2, SIGMA, 1e-4) / step_add_remove(2, SIGMA, 1e-4)
    return 3.96 <= ratio <= 4.04, f"ratio {ratio:.6f}"


def criterion_2():
    bad, worst_share = [], 0.0
    for a in range(2, 65):
        lo, mid, hi = wang_lower(a, SIGMA, Q), step_replace_one(a, SIGMA, Q, 4), wang_upper(a, SIGMA, Q)
        if not lo <= mid <= hi:
            bad.append(a)
        if a <= 32:
            share = (mid - lo) / (hi - lo)
            worst_share = max(worst_share, share)
    ok = not bad and worst_share <= 0.25
    return ok, f"ordering violations {bad or 'none'}; max gap share {worst_share:.4f} (<= 0.25)"


def criterion_3():
    bad = [a for a in range(2, 65) if not poisson_replace_one_step(a, SIGMA, Q, 4) <= wang_lower(a, SIGMA, Q)]
    return not bad, f"violations {bad or 'none'} over alpha 2..64"


def criterion_4():
    worst = 0.0
    for a in range(2, 9):
        for s in (2.0, 4.0, 6.0):
            for q in (1e-3, 1e-2):
                worst = max(worst, abs(h_upper(a, s, q, a + 1) / exact_h_integer(a, s, q) - 1.0))
    return worst <= 1e-12, f"max relative error {worst:.2e}"


def criterion_5():
    sigma, q, samples, seed = 4.0, 0.01, 10**6, 20240611
    s_eff = sigma / 2.0
    notes, ok = [], True
    for a in range(2, 7):
        # add/remove: one mixture against the base Gaussian, closed form available
        est = mc_mixture_renyi(a, MixtureSpec.two_point(q, 1.0), s_eff, samples, seed + a)
        exact = exact_h_integer(a, sigma, q)
        z = (est.value - exact) / est.std_error
        ok &= abs(z) <= 3.0
        ok &= est.value - 3 * est.std_error <= h_upper(a, sigma, q, 3)
        # replace-one: anti-parallel saturating means, no closed form
        ro = mc_mixture_renyi(a, MixtureSpec.two_point(q, 0.5), s_eff, samples, seed + 100 + a,
                              reference=MixtureSpec.two_point(q, -0.5))
        for step in (step_replace_one, poisson_replace_one_step):
            bound = math.exp((a - 1) * step(a, sigma, q, 4))
            ok &= ro.value - 3 * ro.std_error <= bound
        notes.append(f"a={a} z={z:+.2f}")
    return ok, "; ".join(notes)


def criterion_6():
    bad = [a for a in range(2, 17) if not fswr_lower(a, SIGMA, BATCH, DATASET) <= fswr_upper_step(a, SIGMA, SPEC, 3)]
    worst = 0.0
    for b in range(1, 5):
        for a in range(2, 5):
            for n in range(1, 21):
                for sigma in (1.5, 6.0):
                    got = fswr_lower(a, sigma, b, n, TruncationScheme.full(b, a))
                    ref = brute_fswr_lower(a, sigma, b, n)
                    worst = max(worst, abs(got - ref) / ref if ref else abs(got))
    return not bad and worst <= 1e-12, f"sandwich violations {bad or 'none'}; full vs brute max rel {worst:.2e}"


def criterion_7():
    # rounding slack: both sides are computed in floating point and can
    # coincide to the last digit when the all-|B| term dominates
    slack = 1e-12
    values, ok = [], True
    for b in (10, 100, 1000):
        lower = fswr_lower(2, SIGMA, b, b * 1000)
        loose = loosened_lower(2, SIGMA, b, 0.001)
        ok &= lower >= loose - slack * abs(loose)
        values.append(lower)
    ok &= all(v2 >= v1 for v1, v2 in zip(values, values[1:]))
    return ok, "lower bounds " + ", ".join(f"{v:.6g}" for v in values)


def criterion_8():
    bad = [(d, b) for d in range(1, 9) for b in range(1, d + 1) if not validate_fswor_decomposition(d, b).ok]
    bad += [(d, b) for d in range(1, 7) for b in range(1, 5) if not validate_fswr_decomposition(d, b).ok]
    return not bad, f"{36 + 24} cases, failures {bad or 'none'}"


def variance_grid():
    """Fifty fixed populations with 2 to 6 records."""
    rng = random.Random(2024)
    cases = []
    for d in range(2, 7):
        for _ in range(10):
            cases.append(tuple(rng.randint(-20, 20) / rng.choice((1, 2, 4, 8)) for _ in range(d)))
    return cases


def criterion_9():
    worst = 0.0
    fns = {"poisson": var_poisson, "fswor": var_fswor, "fswr": var_fswr}
    for pop in variance_grid():
        for b in range(1, len(pop) + 1):
            for mode, fn in fns.items():
                exact = float(brute_variance(pop, b, mode))
                got = fn(pop, b)
                worst = max(worst, abs(got - exact) / abs(exact) if exact else abs(got))
    triple = (var_poisson([1, 2, 3], 2), var_fswor([1, 2, 3], 2), var_fswr([1, 2, 3], 2))
    triple_ok = all(math.isclose(g, e, rel_tol=1e-12) for g, e in zip(triple, (7 / 9, 1 / 6, 1 / 3)))
    return worst <= 1e-12 and triple_ok, f"max rel error {worst:.2e}; worked triple {triple_ok}"


def _eps_over_deltas(curve):
    return [rdp_to_dp(curve, d, "improved").epsilon for d in DELTAS]


def criterion_10():
    steps = 250 * SPEC.steps_per_epoch()
    ro = {m: compose(AccountantConfig.constant(SPEC, SIGMA, steps, adjacency=Adjacency.REPLACE_ONE, m=m))
          for m in (4, 5)}
    cfg = AccountantConfig.constant(SPEC, SIGMA, steps, adjacency=Adjacency.REPLACE_ONE)
    wang = compose_steps(lambda a, s: wang_upper(a, s, Q), cfg, "wang_upper")
    ours, ours5, theirs = _eps_over_deltas(ro[4]), _eps_over_deltas(ro[5]), _eps_over_deltas(wang)
    below = all(x < y for x, y in zip(ours, theirs))
    finite = all(math.isfinite(x) for x in ours)
    # smaller delta means a larger epsilon
    monotone = all(b > a for a, b in zip(ours, ours[1:]))
    rel = max(abs(x - y) / y for x, y in zip(ours, ours5))
    ok = below and finite and monotone and rel <= 1e-2
    return ok, (f"eps(1e-5) {ours[1]:.4f} vs {theirs[1]:.4f}; m=4 vs m=5 max rel {rel:.2e}; "
                f"below={below} monotone={monotone}")


def criterion_11():
    delta = 1e-5
    r_p = 1000 * Q * Q / (2 * SIGMA**2)
    r_fs = 4 * r_p
    ok = eps_approx(r_fs, delta) == 2.0 * eps_approx(r_p, delta)
    return ok, f"{eps_approx(r_fs, delta)!r} vs 2 x {eps_approx(r_p, delta)!r}"


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 12)}


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, record_criterion):
    ok, detail = CRITERIA[number]()
    record_criterion(number, ok, detail)
    print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for number, check in CRITERIA.items():
        ok, detail = check()
        failed += not ok
        print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    raise SystemExit(1 if failed else 0)
