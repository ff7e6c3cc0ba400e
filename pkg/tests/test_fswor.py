import logging
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsrdp import DomainError, SaturationWarning
from fsrdp.core import AccountantConfig, Adjacency, Mode, SubsamplingSpec, default_alpha_grid
from fsrdp.fswor import (
    _log_bracket,
    compose,
    h_upper,
    log_e_tilde,
    log_f_tilde,
    log_h_upper,
    replace_one_excess,
    step_add_remove,
    step_replace_one,
)
from fsrdp.baselines import wang_lower, wang_upper
from fsrdp.moments import SignedLog, log1p_slog, slog_sum
from fsrdp.oracles import exact_h_integer, exact_log_h_integer

# frozen from 50-digit mpmath evaluations of the closed forms
H_2_6_01 = 1.0011751906874186365
STEP_AR_2_6_00024 = 6.7690960684977499922e-7
H_3_4_005 = 1.0021633060959767424
RO_SECOND_COEF_6 = 0.060391323981627186583

SPEC = SubsamplingSpec(120, 50000)
Q = SPEC.q


def test_h_at_zero_rate():
    for alpha in (1.5, 2.0, 7.3):
        assert h_upper(alpha, 6.0, 0.0, 3) == 1.0


def test_h_second_order_example():
    assert h_upper(2, 6, 0.1, 3) == pytest.approx(H_2_6_01, rel=1e-15)
    assert h_upper(2, 6, 0.1, 3) == pytest.approx(exact_h_integer(2, 6, 0.1), rel=1e-15)


def test_h_exact_when_remainder_vanishes():
    assert h_upper(3, 4, 0.05, 4) == pytest.approx(H_3_4_005, rel=1e-14)
    assert h_upper(3, 4, 0.05, 4) == pytest.approx(exact_h_integer(3, 4, 0.05), rel=1e-13)


def test_step_example():
    assert step_add_remove(2, 6, 0.0024, 3) == pytest.approx(STEP_AR_2_6_00024, rel=1e-14)
    assert step_add_remove(2, 6, 0.0024, 3) == pytest.approx(math.log1p(0.0024**2 * math.expm1(1 / 9)), rel=1e-15)


def test_higher_order_adds_nothing_at_order_two():
    assert step_add_remove(2, 6, 0.0024, 4) == step_add_remove(2, 6, 0.0024, 3)


@pytest.mark.parametrize("alpha", [1.01, 2.0, 5.5, 64.0])
def test_zero_rate_gives_zero(alpha):
    assert step_add_remove(alpha, 6.0, 0.0, 3) == 0.0
    assert step_replace_one(alpha, 6.0, 0.0, 4) == 0.0


@pytest.mark.parametrize("alpha", range(2, 9))
@pytest.mark.parametrize("sigma", [2.0, 4.0, 6.0])
@pytest.mark.parametrize("q", [1e-3, 1e-2])
def test_integer_order_exactness(alpha, sigma, q):
    assert h_upper(alpha, sigma, q, alpha + 1) == pytest.approx(exact_h_integer(alpha, sigma, q), rel=1e-12)


@pytest.mark.parametrize("alpha", range(2, 9))
@pytest.mark.parametrize("sigma", [2.0, 4.0, 6.0])
@pytest.mark.parametrize("q", [1e-3, 1e-2])
@pytest.mark.parametrize("m", [3, 4, 6, 10])
def test_sound_against_exact_moment(alpha, sigma, q, m):
    exact = exact_log_h_integer(alpha, sigma, q) / (alpha - 1)
    assert step_add_remove(alpha, sigma, q, m) >= exact * (1 - 1e-12)


def test_replace_one_second_order_coefficient():
    # at tiny q the bracket is q^2 alpha (alpha-1) times the coefficient
    q = 1e-7
    got = math.expm1(step_replace_one(2.0, 6.0, q, 4)) / (2.0 * q * q)
    assert got == pytest.approx(RO_SECOND_COEF_6, rel=1e-6)
    assert got == pytest.approx(0.0603917, abs=5e-7)


def test_replace_one_dominated_by_leading_term():
    q = 1e-4
    lead = q * q * 2.0 * RO_SECOND_COEF_6
    value = step_replace_one(2.0, 6.0, q, 4)
    assert lead * (1 - 1e-3) <= value <= lead * (1 + 1e-3)
    # the order-3 term and the remainder are O(q^3)
    rest = math.exp(log_e_tilde(2.0, 6.0, 4, q)) + q**3 / 6 * math.exp(log_f_tilde(2.0, 6.0, 3))
    assert rest < 1e-3 * lead


@settings(max_examples=40, deadline=None)
@given(st.floats(1.05, 40.0), st.floats(1.0, 20.0), st.sampled_from([3, 4, 5]))
def test_monotone_in_rate(alpha, sigma, m):
    qs = [0.001, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5]
    for step in (step_add_remove, step_replace_one):
        values = [step(alpha, sigma, q, m) for q in qs]
        assert all(b >= a for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("sigma, q", [(6.0, 0.0024), (2.0, 0.01), (1.0, 0.05)])
def test_cumulant_convex_in_order(sigma, q):
    g = [(a - 1) * step_add_remove(a, sigma, q, 3) for a in range(2, 41)]
    for a, b, c in zip(g, g[1:], g[2:]):
        assert 2 * b <= a + c + 1e-12 * abs(c)


def _bracket(alpha, sigma, q, m):
    y = 2.0 / sigma**2
    return replace_one_excess(alpha, sigma, q, m, y + math.log(math.expm1(y)))


@settings(max_examples=80, deadline=None)
@given(st.floats(1.1, 64.0), st.sampled_from([1.0, 2.0, 6.0, 10.0]),
       st.sampled_from([1e-4, 1e-3, 0.0024, 0.01, 0.05]), st.sampled_from([3, 4, 5, 6]))
def test_refinement_bounded_by_new_remainder(alpha, sigma, q, m):
    # going from m to m+1 trades the order-m remainder for the order-m term
    # plus the order-(m+1) remainder; the increase is at most the latter
    # compared in log space since large orders overflow
    coarse = _bracket(alpha, sigma, q, m)
    fine = _bracket(alpha, sigma, q, m + 1)
    allowed = slog_sum([coarse, SignedLog(1, log_e_tilde(alpha, sigma, m + 1, q))])
    assert fine.sign == coarse.sign == 1
    assert fine.log_magnitude <= allowed.log_magnitude + 1e-9


@pytest.mark.parametrize("alpha_max, tol", [(12, 1e-3), (32, 1e-2)])
def test_m4_and_m5_agree_on_working_range(alpha_max, tol):
    for alpha in range(2, alpha_max + 1):
        a, b = step_replace_one(alpha, 6.0, Q, 4), step_replace_one(alpha, 6.0, Q, 5)
        assert abs(a - b) <= tol * b


def test_overflowing_moment_saturates():
    assert math.isfinite(log_h_upper(200.0, 0.2, 0.5, 3))
    with pytest.warns(SaturationWarning):
        assert h_upper(200.0, 0.2, 0.5, 3) == math.inf


def test_rounding_below_one_is_clamped(caplog):
    with caplog.at_level(logging.WARNING, logger="fsrdp.fswor"):
        value = _log_bracket(SignedLog(-1, -40.0), "test", 2.0, 6.0, 0.1)
    assert value == 0.0
    assert "reporting epsilon=0" in caplog.text
    assert log1p_slog(SignedLog(-1, -40.0)) < 0


@pytest.mark.parametrize("kwargs", [
    dict(alpha=1.0), dict(alpha=0.5), dict(sigma=0.0), dict(q=1.0), dict(q=-0.1), dict(m=2), dict(m=3.0),
])
def test_domain_errors(kwargs):
    args = dict(alpha=2.0, sigma=6.0, q=0.01, m=3) | kwargs
    with pytest.raises(DomainError):
        step_add_remove(**args)
    with pytest.raises(DomainError):
        step_replace_one(**args)


# composition


def _config(steps=1, adjacency=Adjacency.ADD_REMOVE, grid=(1.5, 2.0, 8.0, 32.0), **kw):
    return AccountantConfig.constant(SPEC, 6.0, steps, adjacency=adjacency, alpha_grid=grid, **kw)


@pytest.mark.parametrize("adjacency", list(Adjacency))
def test_single_step_composition(adjacency):
    curve = compose(_config(1, adjacency))
    step = step_add_remove if adjacency is Adjacency.ADD_REMOVE else step_replace_one
    m = 3 if adjacency is Adjacency.ADD_REMOVE else 4
    for alpha, eps in curve:
        assert eps == step(alpha, 6.0, Q, m)


def test_identical_steps_scale_linearly():
    one, many = compose(_config(1)), compose(_config(1000))
    for (_, e1), (_, e2) in zip(one, many):
        assert e2 == pytest.approx(1000 * e1, rel=1e-15)
    assert many.meta["steps"] == 1000
    assert many.method == "fswor_ar"


def test_schedule_order_does_not_matter():
    sigmas = (6.0, 3.0, 9.0, 3.0, 6.0, 12.0, 0.9)
    grid = (2.0, 4.0, 16.0)
    a = compose(AccountantConfig(SPEC, sigmas, alpha_grid=grid))
    b = compose(AccountantConfig(SPEC, tuple(reversed(sigmas)), alpha_grid=grid))
    assert a.epsilons == b.epsilons
    expected = [math.fsum(step_add_remove(al, s, Q, 3) for s in sigmas) for al in grid]
    assert list(a.epsilons) == pytest.approx(expected, rel=1e-14)


def test_infinite_step_makes_curve_infinite(monkeypatch):
    import fsrdp.fswor as mod

    monkeypatch.setattr(mod, "step_add_remove", lambda a, s, q, m: math.inf if s < 1 else 0.1)
    curve = compose(AccountantConfig(SPEC, (6.0, 0.5), alpha_grid=(2.0,)))
    assert curve[2.0] == math.inf


def test_replace_one_curve_between_baselines():
    steps = 250 * SPEC.steps_per_epoch()
    curve = compose(_config(steps, Adjacency.REPLACE_ONE, grid=tuple(float(a) for a in range(2, 65)), m=4))
    for alpha, eps in curve:
        lo = steps * wang_lower(int(alpha), 6.0, Q)
        hi = steps * wang_upper(alpha, 6.0, Q)
        assert lo <= eps <= hi


def test_compose_rejects_other_modes():
    with pytest.raises(DomainError):
        compose(_config(mode=Mode.FSWR))


def test_config_validation():
    with pytest.raises(DomainError):
        AccountantConfig(SPEC, (), alpha_grid=(2.0,))
    with pytest.raises(DomainError):
        AccountantConfig(SPEC, (6.0,), alpha_grid=())
    with pytest.raises(DomainError):
        AccountantConfig(SPEC, (6.0,), alpha_grid=(3.0, 2.0))
    with pytest.raises(DomainError):
        AccountantConfig(SPEC, (6.0,), alpha_grid=(1.0, 2.0))
    with pytest.raises(DomainError):
        AccountantConfig.constant(SPEC, 6.0, 0)
    with pytest.raises(DomainError):
        SubsamplingSpec(10, 10)
    with pytest.raises(DomainError):
        SubsamplingSpec(0, 10)


def test_default_grid():
    grid = default_alpha_grid()
    assert grid[0] == pytest.approx(1.1) and grid[-1] == 256.0
    assert all(b > a for a, b in zip(grid, grid[1:]))
    assert {float(a) for a in range(2, 257)} <= set(grid)
