import math

import numpy as np
import pytest

from optochaos.lyapunov import (CHAOTIC, INCONCLUSIVE, NON_CHAOTIC, InsufficientData, LLEEstimate,
                                certify, classify, lle_series, lle_variational, mean_period)
from optochaos.reconstruct import EmbeddingParams
from optochaos.simcore import IntegrationPlan, TimeSeries, integrate

from conftest import linear_field

LORENZ_FIT = dict(theiler=100, horizon=400, fit=(100, 300))


@pytest.fixture(scope="module")
def lorenz_x(lorenz):
    traj = integrate(lorenz, np.ones(3), IntegrationPlan(0.0, 1050.0, 0.01, transient=50.0))
    return TimeSeries(0.0, 0.01, traj.states[:, 0])


@pytest.fixture(scope="module")
def lorenz_variational(lorenz):
    return lle_variational(lorenz, np.ones(3), IntegrationPlan(0.0, 550.0, 0.01, transient=50.0),
                           renorm_interval=0.5)


def henon_series(n=5000):
    x = np.empty(n)
    u, v = 0.1, 0.1
    for i in range(n + 100):
        u, v = 1 - 1.4 * u * u + v, 0.3 * u
        if i >= 100:
            x[i - 100] = u
    return TimeSeries(0.0, 1.0, x)


def test_variational_linear_contraction():
    est = lle_variational(linear_field([[-2.0]]), np.array([1.0]), IntegrationPlan(0.0, 20.0, 0.1, transient=0.0))
    assert est.exponent == pytest.approx(-2.0, abs=0.01)


def test_variational_neutral_rotation():
    est = lle_variational(linear_field([[0.0, 1.0], [-1.0, 0.0]]), np.array([1.0, 0.0]),
                          IntegrationPlan(0.0, 200.0, 0.1, transient=0.0))
    assert abs(est.exponent) < 0.01


def test_variational_lorenz(lorenz_variational):
    assert lorenz_variational.exponent == pytest.approx(0.90, abs=0.05)
    assert lorenz_variational.method == "variational"


def test_variational_independent_of_renormalization(lorenz):
    plan = IntegrationPlan(0.0, 300.0, 0.01, transient=20.0)
    a = lle_variational(lorenz, np.ones(3), plan, renorm_interval=0.25)
    b = lle_variational(lorenz, np.ones(3), plan.with_tolerance(0.1), renorm_interval=1.0)
    assert a.exponent == pytest.approx(b.exponent, abs=0.05)


def test_series_lorenz_matches_variational(lorenz_x, lorenz_variational):
    est = lle_series(lorenz_x, EmbeddingParams(0.1, 4), **LORENZ_FIT)
    assert abs(est.exponent / lorenz_variational.exponent - 1) < 0.15
    assert certify(lorenz_x, EmbeddingParams(0.1, 4), **LORENZ_FIT).verdict == CHAOTIC


def test_series_lorenz_default_window_still_certifies(lorenz_x):
    assert certify(lorenz_x, EmbeddingParams(0.1, 4)).verdict == CHAOTIC


def test_henon_default_settings():
    est = lle_series(henon_series(), EmbeddingParams(1.0, 2), theiler=10, horizon=20)
    assert est.exponent == pytest.approx(0.419, rel=0.1)


def test_sinusoid_is_non_chaotic():
    s = TimeSeries(0.0, 1.0, np.sin(2 * np.pi * np.arange(20000) / 100))
    v = certify(s, EmbeddingParams(25.0, 4))
    assert abs(v.estimate.exponent) * 100 < 0.01
    assert v.verdict == NON_CHAOTIC


def test_periodic_flow_series_and_variational_agree():
    field = linear_field([[0.0, 2.0], [-2.0, 0.0]])
    plan = IntegrationPlan(0.0, 400.0, 0.05, transient=0.0)
    traj = integrate(field, np.array([1.0, 0.0]), plan)
    ser = lle_series(TimeSeries(0.0, 0.05, traj.states[:, 0]), EmbeddingParams(0.4, 4))
    var = lle_variational(field, np.array([1.0, 0.0]), plan)
    assert abs(ser.exponent - var.exponent) < 0.02


def test_short_fragment_is_rejected_or_inconclusive():
    s = TimeSeries(0.0, 1.0, np.random.default_rng(0).normal(size=200))
    try:
        v = certify(s, EmbeddingParams(1.0, 4))
    except InsufficientData:
        return
    assert v.verdict == INCONCLUSIVE


def test_scale_invariance():
    s = henon_series()
    a = lle_series(s, EmbeddingParams(1.0, 2), theiler=10, horizon=20)
    for c in (1e-3, 7.5, 1e4):
        b = lle_series(TimeSeries(0.0, 1.0, c * s.values), EmbeddingParams(1.0, 2), theiler=10, horizon=20)
        assert abs(a.exponent - b.exponent) < 1e-6


def test_time_unit_covariance(lorenz, lorenz_x):
    fine = integrate(lorenz, np.ones(3), IntegrationPlan(0.0, 1050.0, 0.005, transient=50.0))
    fx = TimeSeries(0.0, 0.005, fine.states[:, 0])
    a = lle_series(lorenz_x, EmbeddingParams(0.1, 4), **LORENZ_FIT)
    b = lle_series(fx, EmbeddingParams(0.1, 4), theiler=200, horizon=800, fit=(200, 600))
    assert abs(a.exponent - b.exponent) < 3 * math.hypot(a.stderr, b.stderr)


def test_bootstrap_is_seeded(lorenz_x):
    a = lle_series(lorenz_x, EmbeddingParams(0.1, 4), **LORENZ_FIT)
    b = lle_series(lorenz_x, EmbeddingParams(0.1, 4), **LORENZ_FIT)
    assert a.stderr == b.stderr and a.exponent == b.exponent


def test_too_few_points():
    with pytest.raises(InsufficientData):
        lle_series(TimeSeries(0.0, 1.0, np.random.default_rng(1).normal(size=400)), EmbeddingParams(1.0, 4))


def test_mean_period():
    x = np.sin(2 * np.pi * np.arange(1000) / 50)
    assert mean_period(x) == pytest.approx(50.0)


def _est(exponent, stderr, r2, span=10.0):
    times = np.linspace(0.0, span, 11)
    return LLEEstimate(exponent, (0, 11), r2, "series-based", stderr, r2 < 0.5, np.zeros(11), times)


@pytest.mark.parametrize("exponent,stderr,r2,verdict", [
    (0.5, 0.05, 0.9, CHAOTIC),
    (0.5, 0.05, 0.5, INCONCLUSIVE),
    (0.1, 0.05, 0.9, NON_CHAOTIC),
    (0.0, 0.01, 0.1, NON_CHAOTIC),
    (-0.3, 0.001, 0.99, NON_CHAOTIC),
    (1e-10, 0.0, 0.99, NON_CHAOTIC),
])
def test_decision_rule(exponent, stderr, r2, verdict):
    assert classify(_est(exponent, stderr, r2)) == verdict


def test_growth_without_headroom_is_inconclusive():
    times = np.linspace(0.0, 10.0, 11)
    curve = np.zeros(11)
    tight = LLEEstimate(0.5, (0, 11), 0.9, "series-based", 0.05, False, curve, times, 0, 1.0)
    roomy = LLEEstimate(0.5, (0, 11), 0.9, "series-based", 0.05, False, curve, times, 0, 6.0)
    assert classify(tight) == INCONCLUSIVE
    assert classify(roomy) == CHAOTIC


def test_headroom_reported(lorenz_x):
    est = lle_series(lorenz_x, EmbeddingParams(0.1, 4), **LORENZ_FIT)
    assert est.headroom > 3.0
