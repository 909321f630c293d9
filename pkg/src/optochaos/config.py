"""Scenario files: INI sections mirroring the reference parameter tables.

Dimensionless ratios are given exactly as tabulated (``delta_c`` means
``Delta_c / Omega_c``, ``delta_q`` means ``Delta_q / Omega_q``, ...).  Times in
the ``[run]`` and ``[embedding]`` sections are in nanoseconds.  The only rate
quoted in absolute units without a ``2 pi`` (``Gamma_q``, in GHz) is read as an
angular rate by default; ``rate_convention = ordinary`` multiplies it by 2 pi.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Union

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "SCHEMA",
    "PRESETS",
    "load",
    "loads",
    "dumps",
    "preset_path",
    "resolve",
]

CONFIGURATIONS = ("config1", "config2", "classical-only")
RATE_CONVENTIONS = ("angular", "ordinary")


class ConfigError(ValueError):
    """Schema violation; the message starts with the offending ``section.key``."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# section -> key -> (type, required-for, default)
#   required-for: set of configurations needing the key (empty = optional everywhere)
_C1 = frozenset({"config1"})
_C2 = frozenset({"config2"})
_ANY = frozenset()

SCHEMA: dict[str, dict[str, tuple[type, frozenset, object]]] = {
    "scenario": {
        "configuration": (str, frozenset(CONFIGURATIONS), None),
        "name": (str, _ANY, "scenario"),
        "rate_convention": (str, _ANY, "angular"),
        "classical_model": (str, _ANY, None),
        "perturbation": (float, _ANY, 1e-3),
    },
    "classical": {
        "delta_c": (float, _C1, None),
        "gamma_c": (float, _C1, None),
        "g_c": (float, _C1, None),
        "epsilon_c": (float, _C1, None),
        "Gamma_c": (float, _C1, None),
        "Omega_c_over_2pi": (float, _C1, None),
        "delta_1": (float, _C1, None),
        "gamma_1": (float, _C1, None),
        "epsilon_1": (float, _ANY, None),
        "delta_s": (float, _C2, None),
        "gamma_s": (float, _C2, None),
        "g_s": (float, _C2, None),
        "epsilon_s": (float, _C2, None),
        "Gamma": (float, _C2, None),
        "Omega_over_2pi": (float, _C2, None),
    },
    "quantum": {
        "delta_q": (float, _C1 | _C2, None),
        "gamma_q": (float, _C1 | _C2, None),
        "g_1": (float, _C1, None),
        "G_q": (float, _C1, None),
        "Gamma_q": (float, _C1, None),
        "Omega_q_over_2pi": (float, _C1, None),
        "T": (float, _C1, None),
        "g_q": (float, _C2, None),
        "epsilon_q": (float, _C2, None),
    },
    "run": {
        "t_end": (float, frozenset(CONFIGURATIONS), None),
        "dt_out": (float, frozenset(CONFIGURATIONS), None),
        "transient": (float, _ANY, None),
        "warmup": (float, _ANY, 0.0),
        "tolerance": (float, _ANY, 1e-8),
        "atol": (float, _ANY, None),
    },
    "embedding": {
        "tau_ns": (float, frozenset(CONFIGURATIONS), None),
        "m": (int, _ANY, 4),
    },
    "analysis": {
        "theiler": (int, _ANY, None),
        "fit_start": (int, _ANY, None),
        "fit_end": (int, _ANY, None),
        "horizon": (int, _ANY, None),
        "max_refs": (int, _ANY, 2000),
    },
}

PRESETS = ("fig3a", "fig3b", "fig3c", "fig5")


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved scenario: every schema key with its value (``None`` if unset)."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, path: str):
        return self.values[path]

    def get(self, path: str, default=None):
        v = self.values.get(path)
        return default if v is None else v

    @property
    def configuration(self) -> str:
        return self.values["scenario.configuration"]

    @property
    def name(self) -> str:
        return self.values["scenario.name"]

    def with_value(self, path: str, value) -> "ScenarioConfig":
        return self.with_values({path: value})

    def with_values(self, updates: dict) -> "ScenarioConfig":
        """Copy with several ``section.key`` values replaced, validated together."""
        new = dict(self.values)
        for path, value in updates.items():
            if path not in self.values:
                raise ConfigError(path, "unknown parameter")
            section, key = path.split(".", 1)
            new[path] = _coerce(path, SCHEMA[section][key][0], value)
        return _validate(new)

    def find(self, name: str) -> str:
        """Full ``section.key`` path of a bare or dotted parameter name."""
        if name in self.values:
            return name
        hits = [p for p in self.values if p.split(".", 1)[1] == name]
        if len(hits) != 1:
            raise ConfigError(name, "unknown parameter" if not hits else "ambiguous parameter")
        return hits[0]

    def active_keys(self) -> list[str]:
        """Keys that carry a value, in schema order."""
        return [p for p in _schema_paths() if self.values.get(p) is not None]


def _schema_paths():
    for section, keys in SCHEMA.items():
        for key in keys:
            yield f"{section}.{key}"


def _coerce(path, typ, raw):
    if raw is None:
        return None
    if typ is str:
        return str(raw).strip()
    try:
        if typ is int:
            v = float(raw)
            if v != int(v):
                raise ValueError
            return int(v)
        v = float(raw)
    except (TypeError, ValueError):
        raise ConfigError(path, f"expected {typ.__name__}, got {raw!r}") from None
    if not math.isfinite(v):
        raise ConfigError(path, "must be finite")
    return v


def _validate(values: dict) -> ScenarioConfig:
    conf = values.get("scenario.configuration")
    if conf is None:
        raise ConfigError("scenario.configuration", "missing")
    if conf not in CONFIGURATIONS:
        raise ConfigError("scenario.configuration", f"must be one of {', '.join(CONFIGURATIONS)}")
    model = values.get("scenario.classical_model")
    if conf == "classical-only":
        if model not in ("config1", "config2"):
            raise ConfigError("scenario.classical_model", "must be config1 or config2 for classical-only")
        needs = {conf, model}
    else:
        needs = {conf}
    if values.get("scenario.rate_convention") not in RATE_CONVENTIONS:
        raise ConfigError("scenario.rate_convention", f"must be one of {', '.join(RATE_CONVENTIONS)}")
    for section, keys in SCHEMA.items():
        for key, (_, required, _) in keys.items():
            path = f"{section}.{key}"
            if values.get(path) is None and required & needs:
                if section == "quantum" and conf == "classical-only" and not (
                        model == "config1" and key == "Omega_q_over_2pi"):
                    continue
                raise ConfigError(path, "missing")
    for path in ("run.t_end", "run.dt_out", "run.tolerance", "embedding.tau_ns"):
        v = values.get(path)
        if v is not None and not v > 0:
            raise ConfigError(path, "must be positive")
    for path in ("run.transient", "run.warmup", "run.atol"):
        v = values.get(path)
        if v is not None and v < 0:
            raise ConfigError(path, "must be nonnegative")
    if values.get("run.transient") is not None and values["run.transient"] >= values["run.t_end"]:
        raise ConfigError("run.transient", "must be shorter than run.t_end")
    if values.get("embedding.m", 4) < 2:
        raise ConfigError("embedding.m", "must be at least 2")
    for path in ("classical.gamma_c", "classical.Gamma_c", "classical.gamma_1", "classical.gamma_s",
                 "classical.Gamma", "quantum.gamma_q", "quantum.Gamma_q", "quantum.T",
                 "classical.Omega_c_over_2pi", "classical.Omega_over_2pi", "quantum.Omega_q_over_2pi"):
        v = values.get(path)
        if v is not None and v < 0:
            raise ConfigError(path, "must be nonnegative")
    for path in ("classical.Omega_c_over_2pi", "classical.Omega_over_2pi", "quantum.Omega_q_over_2pi"):
        v = values.get(path)
        if v is not None and v == 0:
            raise ConfigError(path, "must be positive")
    return ScenarioConfig(values)


def loads(text: str) -> ScenarioConfig:
    """Parse and validate scenario text."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc).splitlines()[0]) from None
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(section, "unknown section")
        for key in parser[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
    values = {}
    for section, keys in SCHEMA.items():
        for key, (typ, _, default) in keys.items():
            path = f"{section}.{key}"
            raw = parser.get(section, key, fallback=None) if parser.has_section(section) else None
            values[path] = _coerce(path, typ, raw) if raw is not None else default
    return _validate(values)


def load(path: Union[str, Path]) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read ({exc.strerror})") from None
    return loads(text)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dumps(cfg: ScenarioConfig) -> str:
    """Canonical text of a resolved scenario; ``loads(dumps(c)) == c``."""
    out = io.StringIO()
    for section, keys in SCHEMA.items():
        lines = [f"{key} = {_fmt(cfg.values[f'{section}.{key}'])}"
                 for key in keys if cfg.values.get(f"{section}.{key}") is not None]
        if lines:
            out.write(f"[{section}]\n" + "\n".join(lines) + "\n\n")
    return out.getvalue().rstrip("\n") + "\n"


def preset_path(name: str) -> Path:
    ref = resources.files("optochaos") / "presets" / f"{name}.ini"
    return Path(str(ref))


def resolve(spec: Union[str, Path]) -> ScenarioConfig:
    """Load a scenario from a path, or a bundled preset by name."""
    p = Path(spec)
    if not p.exists() and str(spec) in PRESETS:
        p = preset_path(str(spec))
    return load(p)
