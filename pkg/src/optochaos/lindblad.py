"""Configuration II: weakly driven quantum cavity on a truncated Fock space.

    d rho/dt = i[rho, H(t)] + gamma_q (a rho a^dag - {a^dag a, rho}/2),
    H(t) = [Delta_q + s(t)] a^dag a + epsilon_q (a + a^dag),

where ``s(t) = 2 g_q x(t)`` comes from the classical mechanical mode.  The
state vector is the row-major flattening of the ``d x d`` density matrix
(``d = 3`` keeps photon numbers 0, 1, 2).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .classical import (Config2ClassicalParams, config2_field, config2_initial_state,
                        extract_drive)
from .moments import PhysicalityError
from .simcore import IntegrationPlan, TimeSeries, Trajectory, VectorField, integrate

__all__ = [
    "Config2QuantumParams",
    "lindblad_field",
    "annihilator",
    "vacuum",
    "fock",
    "mean_photon",
    "check_density_matrices",
    "PhysicalityReport",
    "Config2Run",
    "run_config2",
    "simulate_config2",
]

TRACE_TOL = 1e-8
HERMITIAN_TOL = 1e-10
EIGEN_TOL = 1e-8


@dataclass(frozen=True)
class Config2QuantumParams:
    delta_q: float
    gamma_q: float
    epsilon_q: float
    g_q: float

    def __post_init__(self):
        if self.gamma_q < 0:
            raise ValueError("gamma_q must be nonnegative")
        if abs(self.epsilon_q) > 0.1 * self.gamma_q:
            warnings.warn(f"epsilon_q={self.epsilon_q} is outside the weak-driving regime "
                          f"(> 0.1 gamma_q); a 3-level truncation may be inadequate",
                          stacklevel=3)

    def as_array(self) -> np.ndarray:
        return np.array([self.delta_q, self.gamma_q, self.epsilon_q])


@numba.njit(cache=True)
def _lindblad_kernel(t, y, drive, p, out):
    z = y.view(np.complex128)
    o = out.view(np.complex128)
    n = int(np.sqrt(z.shape[0]) + 0.5)
    freq = p[0] + drive
    gam = p[1]
    eps = p[2]
    for j in range(n):
        for k in range(n):
            r = z[j * n + k]
            # rho H - H rho with H tridiagonal
            comm = r * freq * (k - j)
            if k > 0:
                comm += z[j * n + k - 1] * eps * np.sqrt(k)
            if k < n - 1:
                comm += z[j * n + k + 1] * eps * np.sqrt(k + 1.0)
            if j > 0:
                comm -= eps * np.sqrt(j) * z[(j - 1) * n + k]
            if j < n - 1:
                comm -= eps * np.sqrt(j + 1.0) * z[(j + 1) * n + k]
            diss = -0.5 * gam * (j + k) * r
            if j < n - 1 and k < n - 1:
                diss += gam * np.sqrt((j + 1.0) * (k + 1.0)) * z[(j + 1) * n + k + 1]
            o[j * n + k] = 1j * comm + diss


def lindblad_field(params: Config2QuantumParams, levels: int = 3) -> VectorField:
    """Master-equation right-hand side on ``levels`` Fock states; the drive is ``s(t)``."""
    if levels < 2:
        raise ValueError("need at least two levels")
    return VectorField(levels * levels, _lindblad_kernel, params.as_array(), True,
                       f"config2-lindblad-{levels}")


def annihilator(levels: int = 3) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, levels, dtype=float)), 1).astype(complex)


def fock(j: int, levels: int = 3) -> np.ndarray:
    rho = np.zeros((levels, levels), dtype=complex)
    rho[j, j] = 1.0
    return rho


def vacuum(levels: int = 3) -> np.ndarray:
    return fock(0, levels)


def mean_photon(rho) -> tuple[float, float]:
    """Mean photon number and its distance from the one-photon population.

    Returns ``(n_bar, |n_bar - rho_11|)``.
    """
    rho = np.asarray(rho)
    pops = np.real(np.diagonal(rho, axis1=-2, axis2=-1))
    n = pops @ np.arange(pops.shape[-1])
    return n, np.abs(n - pops[..., 1])


@dataclass(frozen=True)
class PhysicalityReport:
    trace_error: float
    hermitian_residue: float
    min_eigenvalue: float

    @property
    def ok(self) -> bool:
        return (self.trace_error < TRACE_TOL and self.hermitian_residue < HERMITIAN_TOL
                and self.min_eigenvalue > -EIGEN_TOL)


def check_density_matrices(rhos: np.ndarray) -> PhysicalityReport:
    """Worst-case trace, Hermiticity and positivity over a stack of matrices."""
    rhos = np.asarray(rhos)
    if rhos.ndim == 2:
        rhos = rhos[None]
    tr = np.abs(np.trace(rhos, axis1=1, axis2=2) - 1.0).max()
    herm = np.abs(rhos - np.conj(np.swapaxes(rhos, 1, 2))).max()
    # eigenvalues of the Hermitian part; the anti-Hermitian part is bounded separately above
    hpart = 0.5 * (rhos + np.conj(np.swapaxes(rhos, 1, 2)))
    mineig = np.linalg.eigvalsh(hpart).min()
    return PhysicalityReport(float(tr), float(herm), float(mineig))


@dataclass(frozen=True)
class Config2Run:
    classical: Trajectory
    signal: TimeSeries
    rho: np.ndarray
    times: np.ndarray
    populations: TimeSeries
    physicality: PhysicalityReport


def simulate_config2_classical(classical: Config2ClassicalParams, plan: IntegrationPlan,
                               warmup: float = 0.0, perturbation: float = 1e-3) -> Trajectory:
    field = config2_field(classical)
    y0 = config2_initial_state(perturbation)
    if warmup > 0:
        pre = IntegrationPlan(0.0, warmup, warmup, transient=warmup,
                              rtol=plan.rtol, atol=plan.atol, max_step=plan.max_step)
        y0 = integrate(field, y0, pre).states[-1]
    full = IntegrationPlan(plan.t_start, plan.t_end, plan.dt_out, transient=0.0,
                           rtol=plan.rtol, atol=plan.atol, max_step=plan.max_step)
    return integrate(field, y0, full)


def run_config2(classical: Config2ClassicalParams, quantum: Config2QuantumParams,
                plan: IntegrationPlan, warmup: float = 0.0, perturbation: float = 1e-3,
                levels: int = 3, signal: Optional[TimeSeries] = None,
                classical_trajectory: Optional[Trajectory] = None) -> Config2Run:
    """Classical resonator -> ``s(t)`` -> master equation from vacuum.

    ``signal`` overrides the classical drive (used for analytic checks).

    Raises
    ------
    PhysicalityError
        Trace, Hermiticity or positivity violated beyond tolerance.
    """
    if signal is None:
        if classical_trajectory is None:
            classical_trajectory = simulate_config2_classical(classical, plan, warmup, perturbation)
        signal = extract_drive(classical_trajectory, "displacement", "config2", g_q=quantum.g_q)
    field = lindblad_field(quantum, levels)
    traj = integrate(field, vacuum(levels).ravel(), plan, drive=signal)
    rho = traj.states.reshape(-1, levels, levels)
    report = check_density_matrices(rho)
    if not report.ok:
        raise PhysicalityError(
            f"density matrix left the physical set: |tr-1|={report.trace_error:.2e}, "
            f"hermiticity={report.hermitian_residue:.2e}, min eig={report.min_eigenvalue:.2e}")
    pops = TimeSeries(float(traj.times[0]), plan.dt_out, np.ascontiguousarray(rho[:, 1, 1].real))
    return Config2Run(classical_trajectory, signal, rho, traj.times, pops, report)


def simulate_config2(classical: Config2ClassicalParams, quantum: Config2QuantumParams,
                     plan: IntegrationPlan, warmup: float = 0.0,
                     perturbation: float = 1e-3) -> TimeSeries:
    """One-photon population ``lambda_11(t)`` on the plan's recorded grid."""
    return run_config2(classical, quantum, plan, warmup, perturbation).populations
