import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from optochaos.classical import Config2ClassicalParams
from optochaos.lindblad import (Config2QuantumParams, annihilator, check_density_matrices, fock,
                                lindblad_field, mean_photon, run_config2, vacuum)
from optochaos.simcore import IntegrationPlan, TimeSeries, integrate

FIG5Q = dict(delta_q=1.0, gamma_q=1.0, epsilon_q=0.01, g_q=0.1)
FIG5C = Config2ClassicalParams(delta_s=-1.0, gamma_s=1.0, epsilon_s=4.33, Omega=1.0, Gamma=1e-3, g_s=0.1)


def dense_rhs(rho, delta, gamma, eps, s, levels):
    """Literal matrix form of the master equation."""
    a = annihilator(levels)
    ad = a.conj().T
    h = (delta + s) * ad @ a + eps * (a + ad)
    return 1j * (rho @ h - h @ rho) + gamma * (a @ rho @ ad - 0.5 * (ad @ a @ rho + rho @ ad @ a))


def test_single_photon_rates():
    f = lindblad_field(Config2QuantumParams(0.0, 0.8, 0.0, 0.0))
    d = f.rhs(0.0, fock(1).ravel(), 0.0).reshape(3, 3)
    assert d[1, 1].real == pytest.approx(-0.8)
    assert d[0, 0].real == pytest.approx(0.8)


@given(st.integers(2, 5), st.floats(-3, 3), st.floats(0, 2), st.floats(-0.5, 0.5), st.floats(-2, 2),
       st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_kernel_matches_matrix_form(levels, delta, gamma, eps, s, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(levels, levels)) + 1j * rng.normal(size=(levels, levels))
    rho = m @ m.conj().T
    rho /= np.trace(rho)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        f = lindblad_field(Config2QuantumParams(delta, gamma, eps, 0.0), levels)
    got = f.rhs(0.0, rho.ravel(), s).reshape(levels, levels)
    assert np.abs(got - dense_rhs(rho, delta, gamma, eps, s, levels)).max() < 1e-12


def test_field_is_linear_in_rho():
    f = lindblad_field(Config2QuantumParams(**FIG5Q))
    r1, r2 = fock(1).ravel(), (0.5 * fock(0) + 0.5 * fock(2)).ravel()
    mix = 0.3 * r1 + 0.7 * r2
    lhs = f.rhs(0.0, mix, 0.4)
    rhs = 0.3 * f.rhs(0.0, r1, 0.4) + 0.7 * f.rhs(0.0, r2, 0.4)
    assert np.abs(lhs - rhs).max() < 1e-15


def test_single_photon_decay():
    gamma = 1.3
    f = lindblad_field(Config2QuantumParams(0.0, gamma, 0.0, 0.0))
    plan = IntegrationPlan(0.0, 5.0, 0.05, transient=0.0, rtol=1e-11, atol=1e-13)
    traj = integrate(f, fock(1).ravel(), plan)
    lam = traj.states[:, 4].real
    assert np.abs(lam - np.exp(-gamma * traj.times)).max() < 1e-8


def test_no_drive_keeps_vacuum():
    plan = IntegrationPlan(0.0, 50.0, 0.1)
    res = run_config2(FIG5C, Config2QuantumParams(1.0, 1.0, 0.0, 0.1), plan)
    assert np.all(res.populations.values == 0.0)


def test_weak_drive_steady_state():
    q = Config2QuantumParams(**FIG5Q)
    expected = q.epsilon_q ** 2 / (q.delta_q ** 2 + q.gamma_q ** 2 / 4)
    assert expected == pytest.approx(8e-5)
    plan = IntegrationPlan(0.0, 60.0, 0.5, transient=50.0, rtol=1e-11, atol=1e-14)
    signal = TimeSeries(0.0, 0.5, np.zeros(121))
    res = run_config2(FIG5C, q, plan, signal=signal)
    lam = res.populations.values[-1]
    assert lam == pytest.approx(expected, rel=0.01)
    _, residue = mean_photon(res.rho[-1])
    assert residue < 1e-7


def test_mean_photon_examples():
    assert mean_photon(vacuum())[0] == 0.0
    assert mean_photon(fock(1))[0] == pytest.approx(1.0)
    n, res = mean_photon(fock(2))
    assert n == pytest.approx(2.0) and res == pytest.approx(2.0)


def test_cascade_ordering_and_monotone_decay():
    f = lindblad_field(Config2QuantumParams(0.5, 1.0, 0.0, 0.0))
    plan = IntegrationPlan(0.0, 8.0, 0.02, transient=0.0, rtol=1e-10, atol=1e-12)
    rho0 = np.diag([0.2, 0.3, 0.5]).astype(complex)
    pops = integrate(f, rho0.ravel(), plan).states.reshape(-1, 3, 3).diagonal(axis1=1, axis2=2).real
    assert pops[:, 1].max() > 0.3 + 1e-3  # two-photon loss feeds the one-photon level first
    excited = pops[:, 1] + 2 * pops[:, 2]
    assert np.all(np.diff(excited) < 0)
    assert np.all(np.diff(pops[:, 0]) > 0)


def test_physicality_report_flags_bad_matrices():
    assert check_density_matrices(vacuum()).ok
    bad = np.diag([1.1, -0.1, 0.0]).astype(complex)
    rep = check_density_matrices(bad)
    assert not rep.ok and rep.min_eigenvalue < -0.05


def test_strong_drive_warns():
    with pytest.warns(UserWarning):
        Config2QuantumParams(1.0, 1.0, 0.5, 0.1)


def test_matches_scipy_integration_of_matrix_form():
    # an independent scipy integration of the literal matrix equation with a time-dependent drive
    q = Config2QuantumParams(**FIG5Q)
    t = np.arange(0.0, 30.0001, 0.05)
    s = 0.3 * np.sin(0.9 * t)
    signal = TimeSeries(0.0, 0.05, s)

    def rhs(tt, v):
        rho = v.reshape(3, 3)
        return dense_rhs(rho, q.delta_q, q.gamma_q, q.epsilon_q, np.interp(tt, t, s), 3).ravel()

    ref = solve_ivp(rhs, (0, 30), vacuum().ravel(), t_eval=t[::20], rtol=1e-11, atol=1e-14, method="DOP853")
    plan = IntegrationPlan(0.0, 30.0, 1.0, transient=0.0, rtol=1e-11, atol=1e-14)
    res = run_config2(FIG5C, q, plan, signal=signal)
    assert np.abs(res.populations.values - ref.y[4].real).max() < 1e-9
