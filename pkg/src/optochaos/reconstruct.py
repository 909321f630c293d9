"""Delay-coordinate reconstruction of scalar observables."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .simcore import TimeSeries

__all__ = [
    "EmbeddingParams",
    "EmbeddedOrbit",
    "EmbeddingError",
    "SeriesTooShort",
    "AlignmentError",
    "DegenerateSeries",
    "delay_lag",
    "embed",
    "embed_array",
    "mutual_information",
    "suggest_delay",
]

ALIGN_TOL = 1e-9


class EmbeddingError(ValueError):
    pass


class SeriesTooShort(EmbeddingError):
    pass


class AlignmentError(EmbeddingError):
    pass


class DegenerateSeries(EmbeddingError):
    pass


@dataclass(frozen=True)
class EmbeddingParams:
    """Delay ``tau`` (series time units) and embedding dimension ``m``."""

    tau: float
    m: int = 4

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.m < 2:
            raise ValueError("embedding dimension must be at least 2")


@dataclass(frozen=True)
class EmbeddedOrbit:
    """Delay vectors ``(s_i, s_{i+L}, ..., s_{i+(m-1)L})`` in time order.

    ``tau_requested - tau`` is the snap applied to land on the sample grid.
    """

    points: np.ndarray
    lag: int
    tau: float
    tau_requested: float
    t0: float
    dt: float

    def __len__(self) -> int:
        return len(self.points)

    @property
    def m(self) -> int:
        return self.points.shape[1]

    @property
    def snap(self) -> float:
        return self.tau - self.tau_requested


def delay_lag(tau: float, dt: float, snap: bool = False) -> int:
    """Delay in samples; raises unless ``tau`` is a sample multiple or ``snap`` is set."""
    ratio = tau / dt
    lag = int(round(ratio))
    if not snap and abs(ratio - lag) > ALIGN_TOL * max(1.0, ratio):
        raise AlignmentError(f"tau={tau} is not a multiple of the sampling interval {dt}")
    if lag < 1:
        raise AlignmentError(f"tau={tau} is shorter than one sample ({dt})")
    return lag


def embed_array(x: np.ndarray, lag: int, m: int) -> np.ndarray:
    x = np.asarray(x)
    n = len(x) - (m - 1) * lag
    if n <= 0:
        raise SeriesTooShort(f"{len(x)} samples cannot hold a delay vector of span {(m - 1) * lag}")
    idx = np.arange(n)[:, None] + lag * np.arange(m)[None, :]
    return x[idx]


def embed(series: TimeSeries, params: EmbeddingParams, snap: bool = False) -> EmbeddedOrbit:
    """Sliding-window delay embedding of ``series``.

    Raises
    ------
    AlignmentError
        ``tau`` is not a multiple of the sampling interval (unless ``snap``).
    SeriesTooShort
        Fewer samples than one delay vector needs.
    """
    lag = delay_lag(params.tau, series.dt, snap)
    if len(series) <= (params.m - 1) * lag:
        raise SeriesTooShort(
            f"{len(series)} samples cannot hold a delay vector of span {(params.m - 1) * lag}")
    points = embed_array(np.asarray(series.values, dtype=float), lag, params.m)
    tau = lag * series.dt
    if abs(params.tau / series.dt - lag) <= ALIGN_TOL * max(1.0, lag):
        tau = params.tau  # already on the grid; keep the requested value exactly
    return EmbeddedOrbit(points, lag, tau, params.tau, series.t0, series.dt)


def mutual_information(x: np.ndarray, lag: int, bins: int = 32, smoothing: float = 2.0) -> float:
    """Histogram estimate (nats) of the information shared by ``x_t`` and ``x_{t+lag}``.

    The joint histogram is blurred by a Gaussian of ``smoothing`` bins, which
    suppresses lattice artifacts on strongly periodic signals.
    """
    a = x[:-lag] if lag else x
    b = x[lag:]
    edges = np.linspace(x.min(), x.max(), bins + 1)
    joint, _, _ = np.histogram2d(a, b, bins=[edges, edges])
    if smoothing > 0:
        joint = gaussian_filter(joint, smoothing, mode="constant")
    pxy = joint / joint.sum()
    px = pxy.sum(axis=1)
    py = pxy.sum(axis=0)
    nz = pxy > 0
    return float(np.sum(pxy[nz] * np.log(pxy[nz] / np.outer(px, py)[nz])))


def suggest_delay(series: TimeSeries, bins: int = 32, smoothing: float = 2.0,
                  seed: int = 0) -> float:
    """Delay at the first minimum of the lagged mutual information.

    If the lag-1 information is already within 50% of a shuffled-surrogate
    floor the series decorrelates immediately and one sample is returned.
    Without a minimum below ``N/4`` the first zero crossing of the
    autocorrelation is used instead.

    Returns
    -------
    float
        Delay in the series' time units (a multiple of ``series.dt``).
    """
    x = np.asarray(series.values, dtype=float)
    n = len(x)
    if n < 100:
        raise SeriesTooShort("delay selection needs at least 100 samples")
    if not np.ptp(x) > 0:
        raise DegenerateSeries("constant series carries no delay information")
    shuffled = np.random.default_rng(seed).permutation(x)
    floor = mutual_information(shuffled, 1, bins, smoothing)
    prev = mutual_information(x, 1, bins, smoothing)
    if prev <= 1.5 * floor:
        return series.dt
    for lag in range(1, n // 4):
        nxt = mutual_information(x, lag + 1, bins, smoothing)
        if nxt >= prev:
            return lag * series.dt
        prev = nxt
    return _first_acf_zero(x) * series.dt


def _first_acf_zero(x: np.ndarray) -> int:
    y = x - x.mean()
    nfft = 1 << int(math.ceil(math.log2(2 * len(y))))
    f = np.fft.rfft(y, nfft)
    acf = np.fft.irfft(f * np.conj(f), nfft)[: len(y)]
    below = np.nonzero(acf <= 0)[0]
    return int(below[0]) if len(below) else len(y) // 4
