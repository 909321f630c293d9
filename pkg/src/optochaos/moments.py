"""Configuration I: second moments of the linearized cavity/membrane fluctuations.

The fluctuations evolve under

    H = Delta_q a^dag a + [Omega_q + g_1 |alpha_1(t)|^2] b^dag b + G_q (a + a^dag)(b + b^dag)

with cavity loss ``gamma_q`` into vacuum and mechanical loss ``Gamma_q`` into a
thermal bath whose occupation follows the classical intensity.  Being
quadratic, the model closes on six second moments, stored as a complex
vector ``(<a^dag a>, <b^dag b>, <a^2>, <b^2>, <a b>, <a^dag b>)``; the two
occupations are real.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np
from scipy import constants

from .classical import (Config1ClassicalParams, config1_field, config1_initial_state,
                        extract_drive)
from .simcore import IntegrationPlan, TimeSeries, Trajectory, VectorField, integrate

__all__ = [
    "Config1QuantumParams",
    "PhysicalityError",
    "NA", "NB", "AA", "BB", "AB", "ADB",
    "thermal_occupation",
    "moment_field",
    "occupation_rate_literal",
    "sigma_x",
    "sigma_p",
    "vacuum_moments",
    "thermal_moments",
    "Config1Run",
    "run_config1",
    "simulate_config1",
]

# slots in the moment vector
NA, NB, AA, BB, AB, ADB = range(6)

RADICAND_TOL = 1e-9


class PhysicalityError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Config1QuantumParams:
    """Quantum-side parameters, rates in reference units.

    ``reference_frequency`` is the physical angular frequency (rad/s) of one
    reference unit; it converts the bath temperature into an occupation.
    """

    delta_q: float
    gamma_q: float
    Omega_q: float
    Gamma_q: float
    g_1: float
    G_q: float
    T: float
    reference_frequency: float

    def __post_init__(self):
        for name in ("gamma_q", "Gamma_q", "Omega_q", "T"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not self.reference_frequency > 0:
            raise ValueError("reference_frequency must be positive")

    @property
    def thermal_scale(self) -> float:
        """k_B T / hbar in reference units."""
        return constants.k * self.T / constants.hbar / self.reference_frequency

    def as_array(self) -> np.ndarray:
        return np.array([self.delta_q, self.gamma_q, self.Omega_q, self.Gamma_q,
                         self.g_1, self.G_q, self.thermal_scale])


def thermal_occupation(intensity, params: Config1QuantumParams):
    """Bath occupation ``k_B T / hbar (Omega_q + g_1 intensity)``."""
    w = params.Omega_q + params.g_1 * np.asarray(intensity, dtype=float)
    if np.any(w <= 0):
        raise ValueError("effective mechanical frequency must be positive")
    n = params.thermal_scale / w
    return float(n) if np.ndim(n) == 0 else n


@numba.njit(cache=True)
def _moment_kernel(t, y, drive, p, out):
    z = y.view(np.complex128)
    o = out.view(np.complex128)
    delta, gam, om, Gam, g1, G, kt = p[0], p[1], p[2], p[3], p[4], p[5], p[6]
    na, nb, A, B, C, D = z[0], z[1], z[2], z[3], z[4], z[5]
    w = om + g1 * drive
    nth = kt / w
    o[0] = -gam * na + 1j * G * (C - C.conjugate() + D.conjugate() - D)
    o[1] = (-1j * G * (-D + D.conjugate() + C.conjugate() - C)
            - Gam * nb + Gam * nth)
    o[2] = -(2j * delta + gam) * A - 2j * G * (C + D.conjugate())
    o[3] = -(2j * w + Gam) * B - 2j * G * (C + D)
    o[4] = (-(1j * (delta + w) + 0.5 * (gam + Gam)) * C
            - 1j * G * (B + nb + A + na + 1.0))
    o[5] = ((1j * (delta - w) - 0.5 * (gam + Gam)) * D
            + 1j * G * (B + nb) - 1j * G * (na + A.conjugate()))


def moment_field(params: Config1QuantumParams) -> VectorField:
    """Closed moment dynamics; the drive is the classical intensity ``|alpha_1|^2``."""
    return VectorField(6, _moment_kernel, params.as_array(), True, "config1-moments")


def occupation_rate_literal(state, params: Config1QuantumParams, intensity: float) -> float:
    """``d<b^dag b>/dt`` written term by term as the closed-form occupation equation."""
    G, Gam = params.G_q, params.Gamma_q
    adb, ab, nb = state[ADB], state[AB], state[NB].real
    rate = (-1j * G * (-adb + np.conj(adb) + np.conj(ab) - ab)
            - Gam * nb + Gam * thermal_occupation(intensity, params))
    return rate.real


def vacuum_moments() -> np.ndarray:
    return np.zeros(6, dtype=complex)


def thermal_moments(n_b: float, n_a: float = 0.0) -> np.ndarray:
    m = np.zeros(6, dtype=complex)
    m[NA] = n_a
    m[NB] = n_b
    return m


def _radicand(nb, bb, sign):
    return 0.5 + np.real(nb) + sign * np.real(bb)


def _deviation(state, sign):
    state = np.asarray(state)
    r = _radicand(state[..., NB], state[..., BB], sign)
    if np.any(r < -RADICAND_TOL):
        bad = float(np.min(r))
        raise PhysicalityError(f"negative variance {bad:.3e}; integration is unphysical")
    return np.sqrt(np.maximum(r, 0.0))


def sigma_x(state):
    """Position spread ``sqrt(1/2 + <b^dag b> + Re<b^2>)``; accepts one state or a stack."""
    return _deviation(state, +1.0)


def sigma_p(state):
    """Momentum spread ``sqrt(1/2 + <b^dag b> - Re<b^2>)``."""
    return _deviation(state, -1.0)


@dataclass(frozen=True)
class Config1Run:
    classical: Trajectory
    intensity: TimeSeries
    moments: Trajectory
    sigma_x: TimeSeries


def run_config1(classical: Config1ClassicalParams, quantum: Config1QuantumParams,
                plan: IntegrationPlan, warmup: float = 0.0,
                perturbation: float = 1e-3, initial_moments: Optional[np.ndarray] = None,
                classical_trajectory: Optional[Trajectory] = None) -> Config1Run:
    """Classical chain -> intensity drive -> moments -> sigma_x.

    The classical chain is first run for ``warmup`` time units, then recorded
    over the whole plan window.  The moments start in the thermal state of the
    initial bath occupation unless ``initial_moments`` is given, and the plan's
    transient is discarded from the moment record.  A precomputed
    ``classical_trajectory`` (same grid) skips the classical run.
    """
    if classical_trajectory is None:
        classical_trajectory = simulate_config1_classical(classical, plan, warmup, perturbation)
    intensity = extract_drive(classical_trajectory, "intensity", "config1")
    thermal_occupation(intensity.values, quantum)  # domain check on the whole drive
    if initial_moments is None:
        initial_moments = thermal_moments(thermal_occupation(intensity.values[0], quantum))
    mom = integrate(moment_field(quantum), initial_moments, plan, drive=intensity)
    sx = sigma_x(mom.states)
    dt = plan.dt_out
    return Config1Run(classical_trajectory, intensity, mom, TimeSeries(float(mom.times[0]), dt, sx))


def simulate_config1_classical(classical: Config1ClassicalParams, plan: IntegrationPlan,
                               warmup: float = 0.0, perturbation: float = 1e-3) -> Trajectory:
    field = config1_field(classical)
    y0 = config1_initial_state(perturbation)
    if warmup > 0:
        pre = IntegrationPlan(0.0, warmup, warmup, transient=warmup,
                              rtol=plan.rtol, atol=plan.atol, max_step=plan.max_step)
        y0 = integrate(field, y0, pre).states[-1]
    full = IntegrationPlan(plan.t_start, plan.t_end, plan.dt_out, transient=0.0,
                           rtol=plan.rtol, atol=plan.atol, max_step=plan.max_step)
    return integrate(field, y0, full)


def simulate_config1(classical: Config1ClassicalParams, quantum: Config1QuantumParams,
                     plan: IntegrationPlan, warmup: float = 0.0,
                     perturbation: float = 1e-3) -> TimeSeries:
    """sigma_x(t) on the plan's recorded grid."""
    return run_config1(classical, quantum, plan, warmup, perturbation).sigma_x
