"""Scenario orchestration: unit conversion, end-to-end runs and parameter sweeps.

Each configuration is integrated in units of its mechanical frequency
(``Omega_c`` or ``Omega`` equal to 1).  One reference time unit is
``1 / (2 pi f)`` ns with ``f`` the tabulated frequency over ``2 pi`` in GHz, so
``t_ns = t_units / (2 pi f)``.  Series handed to the analysis stage are on the
nanosecond axis, and exponents are reported per ns.
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .classical import Config1ClassicalParams, Config2ClassicalParams
from .config import ConfigError, ScenarioConfig
from .lindblad import Config2QuantumParams, run_config2, simulate_config2_classical
from .lyapunov import Verdict, certify
from .moments import Config1QuantumParams, run_config1, simulate_config1_classical
from .reconstruct import EmbeddedOrbit, EmbeddingParams, embed
from .simcore import IntegrationPlan, TimeSeries, Trajectory

__all__ = [
    "Scenario",
    "RunResult",
    "SweepRow",
    "build",
    "classical_trajectory",
    "simulate",
    "run",
    "sweep",
    "parse_grid",
    "CLASSICAL_SECTIONS",
]

# parameters whose change alters the classical trajectory
CLASSICAL_SECTIONS = ("scenario", "classical", "run")


@dataclass(frozen=True)
class Scenario:
    """A scenario converted to integration units.

    ``rate`` is the reference angular frequency in rad/ns: one time unit of
    the integration equals ``1 / rate`` ns.
    """

    config: ScenarioConfig
    configuration: str
    model: str
    rate: float
    classical: Union[Config1ClassicalParams, Config2ClassicalParams]
    quantum: Union[Config1QuantumParams, Config2QuantumParams, None]
    plan: IntegrationPlan
    warmup: float
    perturbation: float
    embedding: EmbeddingParams
    analysis: dict = field(default_factory=dict)

    def to_ns(self, t):
        return np.asarray(t) / self.rate if np.ndim(t) else float(t) / self.rate


def _gamma_q_rad_per_ns(cfg: ScenarioConfig) -> float:
    g = cfg["quantum.Gamma_q"]
    return g if cfg["scenario.rate_convention"] == "angular" else 2.0 * math.pi * g


def build(cfg: ScenarioConfig) -> Scenario:
    """Convert tabulated ratios and ns quantities into integration units."""
    conf = cfg.configuration
    model = cfg["scenario.classical_model"] if conf == "classical-only" else conf
    if model == "config1":
        rate = 2.0 * math.pi * cfg["classical.Omega_c_over_2pi"]
        ratio_q = cfg["quantum.Omega_q_over_2pi"] / cfg["classical.Omega_c_over_2pi"]
        classical = Config1ClassicalParams(
            delta_1=cfg["classical.delta_1"] * ratio_q,
            gamma_1=cfg["classical.gamma_1"] * ratio_q,
            delta_c=cfg["classical.delta_c"],
            gamma_c=cfg["classical.gamma_c"],
            epsilon_c=cfg["classical.epsilon_c"],
            Omega_c=1.0,
            Gamma_c=cfg["classical.Gamma_c"],
            g_c=cfg["classical.g_c"],
            epsilon_1=cfg.get("classical.epsilon_1", 0.0),
        )
        quantum = None
        if conf == "config1":
            quantum = Config1QuantumParams(
                delta_q=cfg["quantum.delta_q"] * ratio_q,
                gamma_q=cfg["quantum.gamma_q"] * ratio_q,
                Omega_q=ratio_q,
                Gamma_q=_gamma_q_rad_per_ns(cfg) / rate,
                g_1=cfg["quantum.g_1"] * ratio_q,
                G_q=cfg["quantum.G_q"] * ratio_q,
                T=cfg["quantum.T"],
                reference_frequency=rate * 1e9,
            )
    else:
        rate = 2.0 * math.pi * cfg["classical.Omega_over_2pi"]
        classical = Config2ClassicalParams(
            delta_s=cfg["classical.delta_s"],
            gamma_s=cfg["classical.gamma_s"],
            epsilon_s=cfg["classical.epsilon_s"],
            Omega=1.0,
            Gamma=cfg["classical.Gamma"],
            g_s=cfg["classical.g_s"],
        )
        quantum = None
        if conf == "config2":
            quantum = Config2QuantumParams(
                delta_q=cfg["quantum.delta_q"],
                gamma_q=cfg["quantum.gamma_q"],
                epsilon_q=cfg["quantum.epsilon_q"],
                g_q=cfg["quantum.g_q"],
            )
    t_end = cfg["run.t_end"] * rate
    transient = cfg.get("run.transient")
    rtol = cfg["run.tolerance"]
    atol = cfg.get("run.atol", rtol * 1e-2)
    plan = IntegrationPlan(0.0, t_end, cfg["run.dt_out"] * rate,
                           transient=None if transient is None else transient * rate,
                           rtol=rtol, atol=atol)
    analysis = {}
    for key in ("theiler", "horizon", "max_refs"):
        if cfg.get(f"analysis.{key}") is not None:
            analysis[key] = cfg[f"analysis.{key}"]
    lo, hi = cfg.get("analysis.fit_start"), cfg.get("analysis.fit_end")
    if (lo is None) != (hi is None):
        raise ConfigError("analysis.fit_end" if hi is None else "analysis.fit_start",
                          "fit_start and fit_end must be given together")
    if lo is not None:
        analysis["fit"] = (lo, hi)
    return Scenario(cfg, conf, model, rate, classical, quantum, plan,
                    cfg["run.warmup"] * rate, cfg["scenario.perturbation"],
                    EmbeddingParams(cfg["embedding.tau_ns"], cfg["embedding.m"]), analysis)


@functools.lru_cache(maxsize=8)
def _classical_cached(model, classical, plan, warmup, perturbation) -> Trajectory:
    sim = simulate_config1_classical if model == "config1" else simulate_config2_classical
    return sim(classical, plan, warmup, perturbation)


def classical_trajectory(scn: Scenario) -> Trajectory:
    """Classical record over the whole plan window (memoized per process)."""
    return _classical_cached(scn.model, scn.classical, scn.plan, scn.warmup, scn.perturbation)


def _series_ns(scn: Scenario, times: np.ndarray, values: np.ndarray) -> TimeSeries:
    return TimeSeries(float(times[0]) / scn.rate, scn.config["run.dt_out"], np.ascontiguousarray(values))


@dataclass(frozen=True)
class Simulation:
    series: TimeSeries
    diagnostics: dict


def simulate(scn: Scenario, classical: Optional[Trajectory] = None) -> Simulation:
    """Scalar observable of the scenario on the ns axis, transient removed."""
    if classical is None:
        classical = classical_trajectory(scn)
    diagnostics = {}
    if scn.configuration == "config1":
        res = run_config1(scn.classical, scn.quantum, scn.plan, classical_trajectory=classical)
        series = _series_ns(scn, res.moments.times, res.sigma_x.values)
        diagnostics["observable"] = "sigma_x"
    elif scn.configuration == "config2":
        res = run_config2(scn.classical, scn.quantum, scn.plan, classical_trajectory=classical)
        series = _series_ns(scn, res.times, res.populations.values)
        diagnostics["observable"] = "lambda_11"
        diagnostics["max_trace_error"] = res.physicality.trace_error
        diagnostics["max_hermitian_residue"] = res.physicality.hermitian_residue
        diagnostics["min_eigenvalue"] = res.physicality.min_eigenvalue
    else:
        keep = classical.times >= scn.plan.discard - 1e-9 * max(1.0, scn.plan.discard)
        if scn.model == "config1":
            a1 = classical.states[keep, 0]
            values = a1.real ** 2 + a1.imag ** 2
            diagnostics["observable"] = "intensity"
        else:
            values = classical.states[keep, 1].real
            diagnostics["observable"] = "displacement"
        series = _series_ns(scn, classical.times[keep], values)
    return Simulation(series, diagnostics)


@dataclass(frozen=True)
class RunResult:
    scenario: Scenario
    series: TimeSeries
    orbit: EmbeddedOrbit
    verdict: Verdict
    diagnostics: dict


def run(cfg: ScenarioConfig, classical: Optional[Trajectory] = None) -> RunResult:
    """Simulate, embed (snapping tau to the grid) and certify one scenario."""
    scn = build(cfg)
    sim = simulate(scn, classical)
    orbit = embed(sim.series, scn.embedding, snap=True)
    verdict = certify(sim.series, scn.embedding, snap=True, **scn.analysis)
    diag = dict(sim.diagnostics)
    diag.update(lag=orbit.lag, tau_ns=orbit.tau, tau_snap_ns=orbit.snap, samples=len(sim.series))
    return RunResult(scn, sim.series, orbit, verdict, diag)


# ---------------------------------------------------------------------------
# sweeps


def parse_grid(text: str) -> list[float]:
    """``a,b,c`` or ``log:lo:hi:n`` (``n`` log-spaced points, ends included)."""
    text = text.strip()
    try:
        if text.startswith("log:"):
            _, lo, hi, n = text.split(":")
            lo, hi, n = float(lo), float(hi), int(n)
            if lo <= 0 or hi <= 0 or n < 1:
                raise ValueError
            return [float(v) for v in np.geomspace(lo, hi, n)] if n > 1 else [lo]
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError("grid", f"cannot parse {text!r}") from None
    if not values:
        raise ConfigError("grid", "empty grid")
    return values


@dataclass(frozen=True)
class SweepRow:
    value: float
    exponent: float
    stderr: float
    r2: float
    verdict: str
    message: str = ""


def _sweep_one(cfg: ScenarioConfig, path: str, value: float,
               classical: Optional[Trajectory]) -> SweepRow:
    try:
        res = run(cfg.with_value(path, value), classical)
    except Exception as exc:  # any failure marks the row, the sweep goes on
        return SweepRow(value, math.nan, math.nan, math.nan, "failed",
                        f"{type(exc).__name__}: {exc}")
    v = res.verdict
    return SweepRow(value, v.estimate.exponent, v.estimate.stderr, v.estimate.r2, v.verdict)


def sweep(cfg: ScenarioConfig, param: str, grid: Sequence[float], workers: int = 1) -> list[SweepRow]:
    """Independent runs over ``grid`` values of ``param``; rows sorted by value.

    When ``param`` does not affect the classical side, the classical
    trajectory is computed once and shared by all runs.
    """
    path = cfg.find(param)
    grid = sorted(float(v) for v in grid)
    if not grid:
        raise ConfigError("grid", "empty grid")
    classical = None
    if path.split(".", 1)[0] not in CLASSICAL_SECTIONS:
        classical = classical_trajectory(build(cfg))
    if workers > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_one, cfg, path, v, classical) for v in grid]
            rows = [f.result() for f in futures]
    else:
        rows = [_sweep_one(cfg, path, v, classical) for v in grid]
    return sorted(rows, key=lambda r: r.value)
