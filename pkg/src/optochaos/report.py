"""Artifact writers and readers.

Every text artifact opens with ``#`` provenance lines (tool version plus the
resolved scenario or the command inputs).  Nothing time- or host-dependent is
written, so repeated runs produce identical bytes.  Figures are rendered with
matplotlib; SVG output is made reproducible by a fixed hash salt and an empty
date stamp, and carries the provenance in its metadata instead of ``#`` lines.
"""

from __future__ import annotations

import io
import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import __version__  # noqa: E402
from .config import ScenarioConfig, dumps  # noqa: E402
from .lyapunov import LLEEstimate, Verdict  # noqa: E402
from .reconstruct import EmbeddedOrbit  # noqa: E402
from .simcore import TimeSeries  # noqa: E402

__all__ = [
    "EmptyInput",
    "provenance",
    "write_series_csv",
    "read_series_csv",
    "write_orbit_csv",
    "read_orbit_csv",
    "write_verdict_json",
    "read_verdict_json",
    "write_sweep_csv",
    "render_orbit_svg",
    "render_divergence",
    "render_sweep",
]

SVG_HASHSALT = "optochaos"
MAX_MARKERS = 20000


class EmptyInput(ValueError):
    pass


def provenance(cfg: Optional[ScenarioConfig] = None, extra: Iterable[str] = ()) -> list[str]:
    """Header lines (without the leading ``# ``)."""
    lines = [f"optochaos {__version__}"]
    if cfg is not None:
        lines += [ln for ln in dumps(cfg).splitlines() if ln]
    lines += list(extra)
    return lines


def _header(lines: Sequence[str]) -> str:
    return "".join(f"# {ln}\n" for ln in lines)


def _write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


def write_series_csv(path, series: TimeSeries, header: Sequence[str]) -> Path:
    """Columns ``t_ns,value``; times are rebuilt from the grid, values round-trip exactly."""
    buf = io.StringIO()
    buf.write(_header(header))
    buf.write("t_ns,value\n")
    t = series.t0 + series.dt * np.arange(len(series))
    for ti, v in zip(t, np.asarray(series.values, dtype=float)):
        buf.write(f"{ti:.12g},{float(v)!r}\n")
    return _write(path, buf.getvalue())


def _read_table(path, columns: Sequence[str]) -> np.ndarray:
    path = Path(path)
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise EmptyInput(f"{path}: no header row")
    head = [c.strip() for c in lines[0].split(",")]
    if head != list(columns):
        raise ValueError(f"{path}: expected columns {','.join(columns)}, found {lines[0]}")
    if len(lines) == 1:
        return np.empty((0, len(columns)))
    return np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])


def read_series_csv(path) -> TimeSeries:
    data = _read_table(path, ("t_ns", "value"))
    if len(data) < 2:
        raise EmptyInput(f"{path}: a series needs at least two samples")
    return TimeSeries.from_samples(data[:, 0], data[:, 1])


def write_orbit_csv(path, orbit: EmbeddedOrbit, header: Sequence[str]) -> Path:
    """Columns ``z1..zm``, one row per delay vector."""
    if len(orbit) == 0:
        raise EmptyInput("empty orbit")
    buf = io.StringIO()
    buf.write(_header(header))
    buf.write(",".join(f"z{k + 1}" for k in range(orbit.m)) + "\n")
    for row in np.asarray(orbit.points, dtype=float):
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return _write(path, buf.getvalue())


def read_orbit_csv(path, m: int = 4) -> np.ndarray:
    return _read_table(path, tuple(f"z{k + 1}" for k in range(m)))


def _clean(v):
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, tuple):
        return list(v)
    return v


def write_verdict_json(path, verdict: Verdict, header: Sequence[str], extra: Optional[dict] = None) -> Path:
    """Verdict record; non-finite numbers are written as ``null``."""
    rec = {k: _clean(v) for k, v in verdict.as_dict().items()}
    e = verdict.estimate
    rec["units"] = "1/ns"
    rec["fit_window"] = list(e.fit_window)
    rec["theiler"] = int(e.theiler)
    for k, v in (extra or {}).items():
        rec[k] = _clean(v)
    return _write(path, _header(header) + json.dumps(rec, indent=2, sort_keys=True) + "\n")


def read_verdict_json(path) -> dict:
    text = "".join(ln for ln in Path(path).read_text().splitlines(True) if not ln.startswith("#"))
    return json.loads(text)


def write_sweep_csv(path, param: str, rows, header: Sequence[str]) -> Path:
    buf = io.StringIO()
    buf.write(_header(header))
    buf.write(f"{param},exponent,stderr,r2,verdict,message\n")
    for r in rows:
        msg = r.message.replace(",", ";").replace("\n", " ")
        nums = ",".join(repr(float(x)) for x in (r.value, r.exponent, r.stderr, r.r2))
        buf.write(f"{nums},{r.verdict},{msg}\n")
    return _write(path, buf.getvalue())


# ---------------------------------------------------------------------------
# figures


def _save_svg(fig, path, description: Sequence[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASHSALT, "svg.fonttype": "path"}):
        fig.savefig(path, format="svg",
                    metadata={"Date": None, "Creator": f"optochaos {__version__}",
                              "Description": "\n".join(description)})
    plt.close(fig)
    return path


def render_orbit_svg(path, orbit: EmbeddedOrbit, header: Sequence[str] = (),
                     max_markers: int = MAX_MARKERS) -> Path:
    """Scatter of ``(z1, z2)`` coloured linearly from ``min(z4)`` to ``max(z4)``.

    Orbits longer than ``max_markers`` are thinned by a uniform stride.
    """
    if len(orbit) == 0:
        raise EmptyInput("empty orbit")
    if orbit.m != 4:
        raise ValueError("the projection needs a 4-dimensional orbit")
    pts = np.asarray(orbit.points, dtype=float)
    stride = max(1, math.ceil(len(pts) / max_markers))
    pts = pts[::stride]
    lo, hi = pts[:, 3].min(), pts[:, 3].max()
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    sc = ax.scatter(pts[:, 0], pts[:, 1], c=pts[:, 3], s=2.0, cmap="viridis",
                    vmin=lo, vmax=hi, linewidths=0)
    ax.set_xlabel("$z_1$")
    ax.set_ylabel("$z_2$")
    fig.colorbar(sc, ax=ax, label="$z_4$")
    fig.tight_layout()
    return _save_svg(fig, path, header)


def render_divergence(path, est: LLEEstimate, header: Sequence[str] = ()) -> Path:
    """Mean log-divergence curve with the fitted line over the fit window."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    t, c = est.curve_times, est.curve
    ax.plot(t, c, lw=1.0, color="0.2")
    lo, hi = est.fit_window
    tt = t[lo:hi]
    ax.plot(tt, c[lo:hi].mean() + est.exponent * (tt - tt.mean()), lw=1.5, color="C3",
            label=f"slope {est.exponent:.3g} /ns")
    ax.set_xlabel("time since neighbour match (ns)")
    ax.set_ylabel("mean log separation")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save_svg(fig, path, header)


def render_sweep(path, param: str, rows, header: Sequence[str] = ()) -> Path:
    """Exponent against the swept value, markers shaped by verdict."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    vals = np.array([r.value for r in rows])
    for verdict, marker in (("chaotic", "o"), ("non-chaotic", "s"), ("inconclusive", "^")):
        sel = [i for i, r in enumerate(rows) if r.verdict == verdict]
        if sel:
            ax.errorbar(vals[sel], [rows[i].exponent for i in sel],
                        yerr=[3 * rows[i].stderr for i in sel], fmt=marker, ms=4, capsize=2,
                        label=verdict)
    if len(vals) and vals.min() > 0 and vals.max() / vals.min() > 50:
        ax.set_xscale("log")
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.set_xlabel(param)
    ax.set_ylabel("largest exponent (1/ns)")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save_svg(fig, path, header)
