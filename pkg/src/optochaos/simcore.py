"""Integration engine for complex, drive-dependent ODE systems.

Every vector field is evaluated through a *kernel* operating on the real
representation of the state (complex components interleaved as re/im pairs,
which is exactly the memory layout of ``complex128``).  Kernels have the
signature ``kernel(t, y, drive, params, out)`` and write the derivative into
``out``.  Kernels compiled with :func:`numba.njit` run inside a compiled
stepping loop; plain Python kernels run through the very same loop
uncompiled, which keeps test fields trivial to write.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numba
import numpy as np

__all__ = [
    "VectorField",
    "IntegrationPlan",
    "TimeSeries",
    "Trajectory",
    "IntegrationError",
    "StepSizeUnderflow",
    "DivergenceError",
    "DriveRangeError",
    "integrate",
    "resample_drive",
    "from_function",
]

DEFAULT_TRANSIENT_FRACTION = 0.2
GRID_TOL = 1e-9

_OK = 0
_UNDERFLOW = 1
_NONFINITE = 2


class IntegrationError(RuntimeError):
    """Base class for numerical failures; carries the failing time."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class StepSizeUnderflow(IntegrationError):
    pass


class DivergenceError(IntegrationError):
    pass


class DriveRangeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class VectorField:
    """Right-hand side of an ODE system.

    Parameters
    ----------
    dimension : int
        Number of state components (complex components if ``is_complex``).
    kernel : callable
        ``kernel(t, y, drive, params, out)`` on the real representation.
    params : ndarray
        Float parameter vector handed to the kernel.
    is_complex : bool
        Whether the state components are complex.
    name : str
        Label used in diagnostics.
    """

    dimension: int
    kernel: Callable
    params: np.ndarray = dc_field(default_factory=lambda: np.zeros(0))
    is_complex: bool = True
    name: str = "field"

    def __post_init__(self):
        if self.dimension <= 0:
            raise ValueError("dimension must be positive")
        object.__setattr__(self, "params", np.ascontiguousarray(self.params, dtype=np.float64))

    @property
    def real_dimension(self) -> int:
        return 2 * self.dimension if self.is_complex else self.dimension

    @property
    def compiled(self) -> bool:
        return hasattr(self.kernel, "py_func")

    def to_real(self, y) -> np.ndarray:
        y = np.asarray(y)
        if y.shape != (self.dimension,):
            raise ValueError(f"{self.name}: state has shape {y.shape}, expected ({self.dimension},)")
        if self.is_complex:
            return np.ascontiguousarray(y, dtype=np.complex128).view(np.float64).copy()
        return np.array(y, dtype=np.float64)

    def from_real(self, z: np.ndarray) -> np.ndarray:
        z = np.ascontiguousarray(z, dtype=np.float64)
        if self.is_complex:
            return z.view(np.complex128).copy()
        return z.copy()

    def rhs(self, t: float, y, drive: float = 0.0) -> np.ndarray:
        """Evaluate the derivative in the natural (complex or real) form."""
        z = self.to_real(y)
        out = np.empty_like(z)
        self.kernel(float(t), z, float(drive), self.params, out)
        return self.from_real(out)


def from_function(fn: Callable, dimension: int, is_complex: bool = True, name: str = "field") -> VectorField:
    """Wrap a Python function ``fn(t, y, drive) -> dy`` as a :class:`VectorField`.

    Runs uncompiled; meant for tests and small problems.
    """

    def kernel(t, z, drive, params, out):
        y = z.view(np.complex128) if is_complex else z
        dy = np.asarray(fn(t, y, drive), dtype=np.complex128 if is_complex else np.float64)
        if is_complex:
            out[:] = dy.view(np.float64)
        else:
            out[:] = dy

    return VectorField(dimension, kernel, np.zeros(0), is_complex, name)


@dataclass(frozen=True)
class IntegrationPlan:
    """Time window, output grid and error targets of one integration.

    ``transient=None`` discards the first 20% of the run.
    """

    t_start: float
    t_end: float
    dt_out: float
    transient: Optional[float] = None
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float = math.inf

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")
        if not self.dt_out > 0:
            raise ValueError("dt_out must be positive")
        if self.transient is not None and self.transient < 0:
            raise ValueError("transient must be nonnegative")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")

    @property
    def discard(self) -> float:
        if self.transient is None:
            return DEFAULT_TRANSIENT_FRACTION * (self.t_end - self.t_start)
        return self.transient

    def output_times(self) -> np.ndarray:
        """Grid anchored at ``t_start``; stamps inside the transient are dropped."""
        span = self.t_end - self.t_start
        n = int(math.floor(span / self.dt_out * (1 + GRID_TOL) + GRID_TOL))
        k0 = int(math.ceil(self.discard / self.dt_out * (1 - GRID_TOL) - GRID_TOL))
        k = np.arange(max(k0, 0), n + 1)
        return self.t_start + k * self.dt_out

    def with_tolerance(self, factor: float) -> "IntegrationPlan":
        return IntegrationPlan(self.t_start, self.t_end, self.dt_out, self.transient,
                               self.rtol * factor, self.atol * factor, self.max_step)


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled scalar signal."""

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "values", np.asarray(self.values))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self.values)) * self.dt

    @property
    def t_last(self) -> float:
        return self.t0 + (len(self.values) - 1) * self.dt

    @classmethod
    def from_samples(cls, times, values) -> "TimeSeries":
        times = np.asarray(times, dtype=float)
        if len(times) < 2:
            raise ValueError("need at least two samples")
        dt = (times[-1] - times[0]) / (len(times) - 1)
        if np.max(np.abs(np.diff(times) - dt)) > GRID_TOL * max(abs(dt), 1.0) * 10:
            raise ValueError("samples are not uniformly spaced")
        return cls(float(times[0]), float(dt), np.asarray(values))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    steps: int = 0

    def __len__(self) -> int:
        return len(self.times)

    def component(self, i: int) -> np.ndarray:
        return self.states[:, i]


# ---------------------------------------------------------------------------
# drive interpolation


@numba.njit(cache=True)
def _interp(t, t0, dt, values):
    x = (t - t0) / dt
    n = values.shape[0]
    if x <= 0.0:
        return values[0]
    if x >= n - 1:
        return values[n - 1]
    i = int(math.floor(x))
    w = x - i
    if w == 0.0:
        return values[i]
    return values[i] + w * (values[i + 1] - values[i])


def resample_drive(series: TimeSeries, t: float) -> float:
    """Linear interpolation of ``series`` at ``t``; exact on sample points."""
    lo, hi = series.t0, series.t_last
    slack = GRID_TOL * max(series.dt, abs(hi))
    if t < lo - slack or t > hi + slack:
        raise DriveRangeError(f"t={t} outside drive range [{lo}, {hi}]")
    return float(_interp(float(t), series.t0, series.dt, np.asarray(series.values, dtype=np.float64)))


# ---------------------------------------------------------------------------
# stepping loops (same source used compiled and interpreted)

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# fifth minus embedded fourth order weights
_E1 = 71 / 57600
_E3 = -71 / 16695
_E4 = 71 / 1920
_E5 = -17253 / 339200
_E6 = 22 / 525
_E7 = -1 / 40


def _dopri_loop(kernel, params, y0, t0, out_times, rtol, atol, max_step, h0,
                drive_t0, drive_dt, drive_vals):
    n = y0.shape[0]
    m = out_times.shape[0]
    ys = np.empty((m, n))
    y = y0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    tmp = np.empty(n)
    ynew = np.empty(n)
    t = t0
    h = h0
    nsteps = 0
    bad_trial = False
    kernel(t, y, _interp(t, drive_t0, drive_dt, drive_vals), params, k1)
    for j in range(m):
        target = out_times[j]
        while t < target:
            hs = min(h, max_step)
            last = False
            # land on the grid point, absorbing a roundoff-sized remainder
            if t + hs * (1.0 + 1e-9) >= target:
                hs = target - t
                last = True
            if hs <= 1e-14 * max(1.0, abs(t)):
                if bad_trial:
                    return ys, _NONFINITE, t, nsteps
                return ys, _UNDERFLOW, t, nsteps
            for i in range(n):
                tmp[i] = y[i] + hs * _A21 * k1[i]
            tt = t + _C2 * hs
            kernel(tt, tmp, _interp(tt, drive_t0, drive_dt, drive_vals), params, k2)
            for i in range(n):
                tmp[i] = y[i] + hs * (_A31 * k1[i] + _A32 * k2[i])
            tt = t + _C3 * hs
            kernel(tt, tmp, _interp(tt, drive_t0, drive_dt, drive_vals), params, k3)
            for i in range(n):
                tmp[i] = y[i] + hs * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
            tt = t + _C4 * hs
            kernel(tt, tmp, _interp(tt, drive_t0, drive_dt, drive_vals), params, k4)
            for i in range(n):
                tmp[i] = y[i] + hs * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
            tt = t + _C5 * hs
            kernel(tt, tmp, _interp(tt, drive_t0, drive_dt, drive_vals), params, k5)
            for i in range(n):
                tmp[i] = y[i] + hs * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                                      + _A64 * k4[i] + _A65 * k5[i])
            tt = t + hs
            kernel(tt, tmp, _interp(tt, drive_t0, drive_dt, drive_vals), params, k6)
            for i in range(n):
                ynew[i] = y[i] + hs * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i]
                                       + _B5 * k5[i] + _B6 * k6[i])
            kernel(tt, ynew, _interp(tt, drive_t0, drive_dt, drive_vals), params, k7)
            err = 0.0
            for i in range(n):
                e = hs * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i]
                          + _E6 * k6[i] + _E7 * k7[i])
                sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
                err += (e / sc) ** 2
            err = math.sqrt(err / n)
            if not math.isfinite(err):
                # non-finite trial: reject; persisting down to underflow counts as divergence
                bad_trial = True
                h = 0.2 * hs
                continue
            bad_trial = False
            if err <= 1.0:
                t = target if last else t + hs
                for i in range(n):
                    y[i] = ynew[i]
                    k1[i] = k7[i]
                nsteps += 1
                fac = 10.0 if err == 0.0 else min(10.0, 0.9 * err ** -0.2)
                hn = hs * fac
                # a step shortened to land on the grid must not shrink the next one
                h = max(hn, h) if last else hn
            else:
                h = hs * max(0.2, 0.9 * err ** -0.2)
        for i in range(n):
            if not math.isfinite(y[i]):
                return ys, _NONFINITE, t, nsteps
            ys[j, i] = y[i]
    return ys, _OK, t, nsteps


def _rk4_loop(kernel, params, y0, t0, out_times, max_step,
              drive_t0, drive_dt, drive_vals):
    n = y0.shape[0]
    m = out_times.shape[0]
    ys = np.empty((m, n))
    y = y0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    t = t0
    nsteps = 0
    for j in range(m):
        span = out_times[j] - t
        if span > 0.0:
            nsub = int(math.ceil(span / max_step - 1e-9))
            if nsub < 1:
                nsub = 1
            hs = span / nsub
            for s in range(nsub):
                ts = t + s * hs
                kernel(ts, y, _interp(ts, drive_t0, drive_dt, drive_vals), params, k1)
                for i in range(n):
                    tmp[i] = y[i] + 0.5 * hs * k1[i]
                tt = ts + 0.5 * hs
                dv = _interp(tt, drive_t0, drive_dt, drive_vals)
                kernel(tt, tmp, dv, params, k2)
                for i in range(n):
                    tmp[i] = y[i] + 0.5 * hs * k2[i]
                kernel(tt, tmp, dv, params, k3)
                for i in range(n):
                    tmp[i] = y[i] + hs * k3[i]
                tt = ts + hs
                kernel(tt, tmp, _interp(tt, drive_t0, drive_dt, drive_vals), params, k4)
                for i in range(n):
                    y[i] += hs / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                nsteps += 1
            t = out_times[j]
        for i in range(n):
            if not math.isfinite(y[i]):
                return ys, _NONFINITE, t, nsteps
            ys[j, i] = y[i]
    return ys, _OK, t, nsteps


_dopri_jit = numba.njit(_dopri_loop)
_rk4_jit = numba.njit(_rk4_loop)


def integrate(field: VectorField, y0, plan: IntegrationPlan,
              drive: Optional[TimeSeries] = None, method: str = "dopri5") -> Trajectory:
    """Integrate ``field`` from ``y0`` and record it on the plan's output grid.

    Parameters
    ----------
    field : VectorField
    y0 : array_like
        Initial state at ``plan.t_start``.
    plan : IntegrationPlan
    drive : TimeSeries, optional
        External signal handed to the kernel, linearly interpolated.
    method : {"dopri5", "rk4"}
        Adaptive Dormand-Prince 5(4), or classical fixed-step RK4 with step
        ``min(max_step, dt_out)`` (cross-check mode).

    Raises
    ------
    StepSizeUnderflow
        Adaptive step collapsed below round-off.
    DivergenceError
        A state component became non-finite.
    DriveRangeError
        The drive does not cover ``[t_start, t_end]``.
    """
    z0 = field.to_real(y0)
    if not np.all(np.isfinite(z0)):
        raise DivergenceError(f"{field.name}: non-finite initial state", plan.t_start)
    if drive is not None:
        slack = GRID_TOL * max(abs(drive.t_last), drive.dt, 1.0)
        if drive.t0 > plan.t_start + slack or drive.t_last < plan.t_end - slack:
            raise DriveRangeError(
                f"drive covers [{drive.t0}, {drive.t_last}], plan needs [{plan.t_start}, {plan.t_end}]")
        d_t0, d_dt = float(drive.t0), float(drive.dt)
        d_vals = np.ascontiguousarray(drive.values, dtype=np.float64)
    else:
        d_t0, d_dt, d_vals = 0.0, 1.0, np.zeros(1)

    times = plan.output_times()
    t0 = float(plan.t_start)
    if method == "dopri5":
        h0 = min(plan.dt_out, plan.max_step, 1e-3 * (plan.t_end - plan.t_start))
        loop = _dopri_jit if field.compiled else _dopri_loop
        ys, status, t_fail, nsteps = loop(field.kernel, field.params, z0, t0, times,
                                          plan.rtol, plan.atol, plan.max_step, h0,
                                          d_t0, d_dt, d_vals)
    elif method == "rk4":
        max_step = min(plan.max_step, plan.dt_out)
        loop = _rk4_jit if field.compiled else _rk4_loop
        ys, status, t_fail, nsteps = loop(field.kernel, field.params, z0, t0, times, max_step,
                                          d_t0, d_dt, d_vals)
    else:
        raise ValueError(f"unknown method {method!r}")

    if status == _UNDERFLOW:
        raise StepSizeUnderflow(f"{field.name}: step size underflow at t={t_fail:.9g}", t_fail)
    if status == _NONFINITE:
        raise DivergenceError(f"{field.name}: non-finite state at t={t_fail:.9g}", t_fail)
    states = ys.view(np.complex128) if field.is_complex else ys
    return Trajectory(times, states, nsteps)
