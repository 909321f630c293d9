"""Largest Lyapunov exponent: from a scalar series and from a known flow.

The series estimator follows the nearest-neighbour divergence idea: every
reference point of the delay reconstruction is paired with its closest point
outside a Theiler window, both are followed forward, and the slope of the
mean log-separation gives the exponent.  The flow estimator evolves one
tangent vector alongside the trajectory (finite-difference directional
derivatives) and renormalizes it periodically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numba
import numpy as np

from .reconstruct import EmbeddingParams, SeriesTooShort, delay_lag, embed_array
from .simcore import IntegrationPlan, TimeSeries, VectorField, integrate

__all__ = [
    "LLEEstimate",
    "Verdict",
    "InsufficientData",
    "MIN_POINTS",
    "mean_period",
    "divergence_curves",
    "lle_series",
    "lle_variational",
    "tangent_field",
    "certify",
    "classify",
    "CHAOTIC",
    "NON_CHAOTIC",
    "INCONCLUSIVE",
]

MIN_POINTS = 500
R2_TARGET = 0.7
# relative change in separation below which the data cannot resolve growth
LOG_RESOLUTION = 1e-8
# nats between the initial neighbour separation and the attractor size below
# which exponential growth cannot be told apart from saturation
MIN_HEADROOM = 2.0
CHAOTIC = "chaotic"
NON_CHAOTIC = "non-chaotic"
INCONCLUSIVE = "inconclusive"


class InsufficientData(SeriesTooShort):
    pass


@dataclass(frozen=True)
class LLEEstimate:
    """Exponent in inverse time units of the input.

    ``fit_window`` is the half-open index range of the fitted curve (divergence
    samples for the series method, renormalization segments for the flow
    method); ``curve`` holds that curve with its time axis ``curve_times``.
    """

    exponent: float
    fit_window: tuple[int, int]
    r2: float
    method: str
    stderr: float = math.nan
    low_confidence: bool = False
    curve: np.ndarray = dc_field(default=None, repr=False)
    curve_times: np.ndarray = dc_field(default=None, repr=False)
    theiler: int = 0
    headroom: float = math.nan


@dataclass(frozen=True)
class Verdict:
    verdict: str
    estimate: LLEEstimate

    def as_dict(self) -> dict:
        e = self.estimate
        return {"exponent": e.exponent, "stderr": e.stderr, "r2": e.r2,
                "verdict": self.verdict, "method": e.method, "headroom": e.headroom}


# ---------------------------------------------------------------------------
# helpers


def _linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope and coefficient of determination (clipped to [0, 1])."""
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx == 0:
        return 0.0, 0.0
    slope = np.sum((x - xm) * (y - ym)) / sxx
    ss_tot = np.sum((y - ym) ** 2)
    if ss_tot == 0:
        return float(slope), 1.0
    ss_res = np.sum((y - ym - slope * (x - xm)) ** 2)
    return float(slope), float(min(1.0, max(0.0, 1.0 - ss_res / ss_tot)))


def mean_period(x: np.ndarray) -> float:
    """Mean period in samples: reciprocal of the power-weighted mean frequency."""
    y = np.asarray(x, dtype=float) - np.mean(x)
    spec = np.abs(np.fft.rfft(y)) ** 2
    if len(spec) < 3 or not np.any(spec[1:] > 0):
        return float(len(y))
    k = np.arange(len(spec))
    return len(y) * float(np.sum(spec[1:])) / float(np.sum(k[1:] * spec[1:]))


@numba.njit(cache=True)
def _nearest_neighbours(points, refs, theiler, limit, floor):
    n_refs = refs.shape[0]
    dim = points.shape[1]
    out = np.full(n_refs, -1, dtype=np.int64)
    for r in range(n_refs):
        i = refs[r]
        best = np.inf
        for j in range(limit):
            if abs(i - j) <= theiler:
                continue
            d = 0.0
            for c in range(dim):
                diff = points[i, c] - points[j, c]
                d += diff * diff
                if d >= best:
                    break
            if d < best and d > floor:
                best = d
                out[r] = j
    return out


def divergence_curves(points: np.ndarray, theiler: int, horizon: int,
                      max_refs: int = 2000) -> np.ndarray:
    """Log-separation of neighbour pairs, one row per reference point.

    Returns an array of shape ``(n_refs, horizon + 1)``; entries where the
    separation vanished are NaN.
    """
    n = len(points)
    limit = n - horizon
    if limit <= 2 * theiler + 1:
        raise InsufficientData(
            f"{n} points leave no neighbours outside a Theiler window of {theiler} "
            f"with a horizon of {horizon}")
    refs = np.unique(np.linspace(0, limit - 1, min(max_refs, limit)).astype(np.int64))
    scale = float(np.mean(np.std(points, axis=0)))
    # separations below this are integration/round-off noise, not geometry
    floor = (1e-8 * scale) ** 2
    nbrs = _nearest_neighbours(np.ascontiguousarray(points), refs, theiler, limit, floor)
    keep = nbrs >= 0
    refs, nbrs = refs[keep], nbrs[keep]
    if len(refs) < 10:
        raise InsufficientData("too few reference points found a neighbour")
    k = np.arange(horizon + 1)
    sep = np.linalg.norm(points[refs[:, None] + k] - points[nbrs[:, None] + k], axis=2)
    with np.errstate(divide="ignore"):
        logs = np.log(sep)
    logs[~np.isfinite(logs)] = np.nan
    return logs


def _fit_window(times, curve, dt, fit_end_max, start=1):
    """Default fit range ``start .. start + 0.5 Lyapunov times``, shrunk until r2 reaches the target."""
    start = int(min(max(1, start), max(1, fit_end_max // 2)))

    def fit(end):
        return _linear_fit(times[start:end + 1], curve[start:end + 1])

    end = fit_end_max
    # iterate the Lyapunov-time estimate to a fixed point
    for _ in range(10):
        slope, _ = fit(end)
        if slope <= 0:
            break
        new_end = int(min(fit_end_max, max(start + 2, start + round(0.5 / slope / dt))))
        if new_end == end:
            break
        end = new_end
    slope, r2 = fit(end)
    while r2 < R2_TARGET and end > start + 2:
        end = max(start + 2, start + int((end - start) * 0.8))
        slope, r2 = fit(end)
    return start, end + 1


# ---------------------------------------------------------------------------
# series method


def lle_series(series: TimeSeries, embed_params: EmbeddingParams, theiler: Optional[int] = None,
               fit: Optional[tuple[int, int]] = None, horizon: Optional[int] = None,
               max_refs: int = 2000, n_boot: int = 200, seed: int = 0,
               snap: bool = False) -> LLEEstimate:
    """Largest Lyapunov exponent of a scalar series via neighbour divergence.

    Parameters
    ----------
    series : TimeSeries
    embed_params : EmbeddingParams
    theiler : int, optional
        Temporal exclusion (samples). Defaults to one mean period.
    fit : (int, int), optional
        Half-open index range of the divergence curve to fit. Defaults to
        ``1 .. 0.5 Lyapunov times``, shrunk until ``r2 >= 0.7``.
    horizon : int, optional
        Length of the divergence curve (samples). Defaults to four Theiler windows.
    max_refs : int
        Reference points used (evenly spaced).
    n_boot : int
        Bootstrap resamples of the reference set for the standard error.

    Raises
    ------
    InsufficientData
        Fewer than 500 embedded points, or no admissible neighbours.
    """
    x = np.asarray(series.values, dtype=float)
    lag = delay_lag(embed_params.tau, series.dt, snap)
    n_points = len(x) - (embed_params.m - 1) * lag
    if n_points < MIN_POINTS:
        raise InsufficientData(f"{max(n_points, 0)} embedded points; at least {MIN_POINTS} needed")
    points = embed_array(x, lag, embed_params.m)
    if theiler is None:
        theiler = int(round(mean_period(x)))
        theiler = max(1, min(theiler, n_points // 10))
    if horizon is None:
        horizon = max(4 * theiler, 20)
    horizon = min(horizon, n_points // 4)
    logs = divergence_curves(points, theiler, horizon, max_refs)
    curve = np.nanmean(logs, axis=0)
    times = np.arange(horizon + 1) * series.dt
    if fit is None:
        fit = _fit_window(times, curve, series.dt, horizon)
    lo, hi = fit
    if not (0 <= lo < hi <= horizon + 1) or hi - lo < 2:
        raise ValueError(f"fit range {fit} does not fit a curve of {horizon + 1} samples")
    slope, r2 = _linear_fit(times[lo:hi], curve[lo:hi])

    rng = np.random.default_rng(seed)
    boots = np.empty(n_boot)
    for b in range(n_boot):
        pick = rng.integers(0, len(logs), len(logs))
        c = np.nanmean(logs[pick, lo:hi], axis=0)
        boots[b] = _linear_fit(times[lo:hi], c)[0]
    stderr = float(np.std(boots, ddof=1)) if n_boot > 1 else math.nan
    size = 0.5 * math.log(float(np.sum(np.var(points, axis=0))))
    headroom = size - float(curve[0])
    return LLEEstimate(slope, (lo, hi), r2, "series-based", stderr, r2 < 0.5,
                       curve, times, theiler, headroom)


# ---------------------------------------------------------------------------
# flow method


def _tangent_kernel_source(kernel, n, fd_step):
    def tangent(t, z, drive, params, out):
        kernel(t, z[:n], drive, params, out[:n])
        vn = 0.0
        yn = 0.0
        for i in range(n):
            vn += z[n + i] * z[n + i]
            yn += z[i] * z[i]
        vn = math.sqrt(vn)
        if vn == 0.0:
            for i in range(n):
                out[n + i] = 0.0
            return
        h = fd_step * max(1.0, math.sqrt(yn))
        yp = np.empty(n)
        for i in range(n):
            yp[i] = z[i] + h * z[n + i] / vn
        fp = np.empty(n)
        kernel(t, yp, drive, params, fp)
        for i in range(n):
            out[n + i] = (fp[i] - out[i]) * vn / h

    return tangent


def tangent_field(field: VectorField, fd_step: float = 1e-7) -> VectorField:
    """Base state plus one tangent vector, evolved by forward-difference Jacobian products.

    The augmented field is real; its state is ``(y_real, v)``.
    """
    n = field.real_dimension
    src = _tangent_kernel_source(field.kernel, n, fd_step)
    kernel = numba.njit(src) if field.compiled else src
    return VectorField(2 * n, kernel, field.params, False, field.name + "+tangent")


def lle_variational(field: VectorField, y0, plan: IntegrationPlan,
                    renorm_interval: Optional[float] = None, fd_step: float = 1e-7,
                    drive: Optional[TimeSeries] = None, seed: int = 0) -> LLEEstimate:
    """Largest exponent of a flow by tangent-vector growth with renormalization.

    The base trajectory is first advanced through ``plan.discard``; the
    exponent is the time average of log growth over the remaining window.
    ``renorm_interval`` defaults to ``plan.dt_out``.
    """
    interval = renorm_interval or plan.dt_out
    t = plan.t_start
    z = field.to_real(y0)
    if plan.discard > 0:
        pre = IntegrationPlan(t, t + plan.discard, plan.discard, transient=plan.discard,
                              rtol=plan.rtol, atol=plan.atol, max_step=plan.max_step)
        z = field.to_real(integrate(field, y0, pre, drive).states[-1])
        t += plan.discard
    n = len(z)
    v = np.random.default_rng(seed).normal(size=n)
    v /= np.linalg.norm(v)
    aug = tangent_field(field, fd_step)
    nseg = int(math.floor((plan.t_end - t) / interval + 1e-9))
    if nseg < 2:
        raise InsufficientData("window shorter than two renormalization intervals")
    logs = np.empty(nseg)
    state = np.concatenate([z, v])
    for k in range(nseg):
        seg = IntegrationPlan(t, t + interval, interval, transient=interval,
                              rtol=plan.rtol, atol=plan.atol, max_step=plan.max_step)
        state = integrate(aug, state, seg, drive).states[-1].copy()
        norm = np.linalg.norm(state[n:])
        logs[k] = math.log(norm)
        state[n:] /= norm
        t += interval
    total = np.cumsum(logs)
    times = interval * np.arange(1, nseg + 1)
    exponent = float(total[-1] / times[-1])
    _, r2 = _linear_fit(times, total)
    nb = min(10, nseg)
    batches = np.array([b.sum() / (len(b) * interval) for b in np.array_split(logs, nb)])
    stderr = float(np.std(batches, ddof=1) / math.sqrt(nb)) if nb > 1 else math.nan
    return LLEEstimate(exponent, (0, nseg), r2, "variational", stderr, False, total, times)


# ---------------------------------------------------------------------------
# decision rule


def certify(series: TimeSeries, embed_params: EmbeddingParams, **kwargs) -> Verdict:
    """Chaotic iff the exponent exceeds three standard errors with ``r2 >= 0.7``;
    non-chaotic iff it does not exceed three standard errors (zero or
    contracting); inconclusive when it is significantly positive but the fit
    is poor, or when neighbours start within ``MIN_HEADROOM`` nats of the
    attractor size so that growth cannot be resolved.

    The band is widened by the smallest resolvable slope, a relative
    separation change of ``LOG_RESOLUTION`` across the fit window.
    """
    est = lle_series(series, embed_params, **kwargs)
    return Verdict(classify(est), est)


def classify(est: LLEEstimate) -> str:
    lo, hi = est.fit_window
    span = est.curve_times[hi - 1] - est.curve_times[lo] if est.curve_times is not None else 0.0
    band = 3.0 * est.stderr + (LOG_RESOLUTION / span if span > 0 else 0.0)
    resolvable = not est.headroom < MIN_HEADROOM  # NaN (flow method) passes
    if est.exponent > band and est.r2 >= R2_TARGET and resolvable:
        return CHAOTIC
    if est.exponent <= band:
        return NON_CHAOTIC
    return INCONCLUSIVE
