"""Classical optomechanical resonators and the drive signals they export.

All rates are expressed in units of the configuration's mechanical
frequency (``Omega_c`` for configuration I, ``Omega`` for configuration II),
so the mechanical frequency is normally 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, astuple

import numba
import numpy as np

from .simcore import TimeSeries, Trajectory, VectorField

__all__ = [
    "Config1ClassicalParams",
    "Config2ClassicalParams",
    "config1_field",
    "config2_field",
    "config1_initial_state",
    "config2_initial_state",
    "extract_drive",
    "linear_fixed_point",
]


@dataclass(frozen=True)
class Config1ClassicalParams:
    """Driven optomechanical cavity (alpha_c, beta_c) feeding cavity alpha_1."""

    delta_1: float
    gamma_1: float
    delta_c: float
    gamma_c: float
    epsilon_c: float
    Omega_c: float
    Gamma_c: float
    g_c: float
    epsilon_1: float = 0.0

    def __post_init__(self):
        for name in ("gamma_1", "gamma_c", "Gamma_c", "Omega_c"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def as_array(self) -> np.ndarray:
        return np.array([self.delta_1, self.gamma_1, self.epsilon_1, self.delta_c, self.gamma_c,
                         self.epsilon_c, self.Omega_c, self.Gamma_c, self.g_c])


@dataclass(frozen=True)
class Config2ClassicalParams:
    """Driven optomechanical cavity (alpha_s, beta)."""

    delta_s: float
    gamma_s: float
    epsilon_s: float
    Omega: float
    Gamma: float
    g_s: float

    def __post_init__(self):
        for name in ("gamma_s", "Gamma", "Omega"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


@numba.njit(cache=True)
def _config1_kernel(t, y, drive, p, out):
    z = y.view(np.complex128)
    o = out.view(np.complex128)
    a1, ac, bc = z[0], z[1], z[2]
    d1, g1, e1, dc, gc, ec, om, gm, g = p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], p[8]
    o[0] = -1j * d1 * a1 - 0.5 * g1 * a1 - math.sqrt(g1 * gc) * ac + e1
    o[1] = -1j * dc * ac - 0.5 * gc * ac - 1j * g * ac * (2.0 * bc.real) + ec
    o[2] = (-1j * om - 0.5 * gm) * bc - 1j * g * (ac.real * ac.real + ac.imag * ac.imag)


@numba.njit(cache=True)
def _config2_kernel(t, y, drive, p, out):
    z = y.view(np.complex128)
    o = out.view(np.complex128)
    a, b = z[0], z[1]
    ds, gs, es, om, gm, g = p[0], p[1], p[2], p[3], p[4], p[5]
    x = b.real
    o[0] = -1j * ds * a - 0.5 * gs * a - 2j * g * a * x + es
    o[1] = (-1j * om - 0.5 * gm) * b - 1j * g * (a.real * a.real + a.imag * a.imag)


def config1_field(params: Config1ClassicalParams) -> VectorField:
    """State ``(alpha_1, alpha_c, beta_c)``.

    ``alpha_1`` is fed one-way by ``alpha_c`` through ``-sqrt(gamma_1 gamma_c) alpha_c``
    and receives the additive drive ``epsilon_1`` (zero in the reference sets).
    """
    return VectorField(3, _config1_kernel, params.as_array(), True, "config1-classical")


def config2_field(params: Config2ClassicalParams) -> VectorField:
    """State ``(alpha_s, beta)``."""
    return VectorField(2, _config2_kernel, params.as_array(), True, "config2-classical")


def config1_initial_state(perturbation: float = 1e-3) -> np.ndarray:
    return np.array([0.0, perturbation, 0.0], dtype=complex)


def config2_initial_state(perturbation: float = 1e-3) -> np.ndarray:
    return np.array([perturbation, 0.0], dtype=complex)


def linear_fixed_point(detuning: float, damping: float, drive: float) -> complex:
    """Steady amplitude of a driven damped mode without optomechanical coupling."""
    return drive / (1j * detuning + 0.5 * damping)


def extract_drive(traj: Trajectory, kind: str, configuration: str, g_q: float = 0.0) -> TimeSeries:
    """Turn a classical trajectory into the signal fed to the quantum part.

    ``kind="intensity"`` returns ``|alpha_1|^2`` (configuration I);
    ``kind="displacement"`` returns ``s = 2 g_q Re(beta)`` (configuration II).
    """
    if kind == "intensity":
        if configuration != "config1":
            raise ValueError("intensity drive requires a configuration I trajectory")
        a1 = traj.states[:, 0]
        values = a1.real ** 2 + a1.imag ** 2
    elif kind == "displacement":
        if configuration != "config2":
            raise ValueError("displacement drive requires a configuration II trajectory")
        values = 2.0 * g_q * traj.states[:, 1].real
    else:
        raise ValueError(f"unknown drive kind {kind!r}")
    times = traj.times
    dt = (times[-1] - times[0]) / (len(times) - 1) if len(times) > 1 else 1.0
    return TimeSeries(float(times[0]), float(dt), np.ascontiguousarray(values))
