"""Scenario configuration: TOML documents with one table per section.

Every key is optional; an empty document gives the theta-flow scenario
(N = 201, r = 3, theta bump at i = 50, psi bump at i = 25, ds = 1e-3).
Unknown sections or keys are rejected.

Example::

    [flow]
    mode = "flat_polar"
    r = 3.0

    [theta0]
    kind = "gaussian"
    center = 50
    width = 8
    height = 1.0
"""

from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, field, fields
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .amplitude import gaussian_profile
from .errors import ConfigError, ConfigParseError
from .evolution import FlowState
from .lattice import EdgeMetric, Measure, integrate
from .velocity import PolarVelocity, VelocityField

__all__ = [
    "ScenarioConfig",
    "parse_config",
    "config_from_mapping",
    "apply_overrides",
    "parse_value",
    "build_initial_state",
]


def _opt(default, kind, key=None):
    return field(default=default, metadata={"kind": kind, "key": key})


@dataclass
class LatticeConfig:
    size: int = _opt(201, int)


@dataclass
class MetricConfig:
    kind: str = _opt("constant", str)
    value: float = _opt(1.0, float)
    values: list | None = _opt(None, list)
    ratio: float = _opt(1.0, float, key="lambda")
    g0: float = _opt(1.0, float)


@dataclass
class MeasureConfig:
    kind: str = _opt("from-metric", str)
    values: list | None = _opt(None, list)


@dataclass
class FlowConfig:
    mode: str = _opt("flat_polar", str)
    r: float = _opt(3.0, float)


@dataclass
class Theta0Config:
    kind: str = _opt("gaussian", str)
    center: float = _opt(50.0, float)
    width: float = _opt(8.0, float)
    height: float = _opt(1.0, float)
    value: float = _opt(0.0, float)


@dataclass
class Psi0Config:
    kind: str = _opt("gaussian", str)
    center: float = _opt(25.0, float)
    width: float = _opt(6.0, float)
    k: float = _opt(0.0, float)
    values: list | None = _opt(None, list)
    imag_values: list | None = _opt(None, list)
    normalize: bool = _opt(True, bool)


@dataclass
class IntegratorConfig:
    ds: float = _opt(1e-3, float)
    steps: int = _opt(15000, int)


@dataclass
class OutputConfig:
    dir: str = _opt("runs/latest", str)
    record_every: int = _opt(100, int)
    track: str = _opt("theta", str)
    window_start: float = _opt(0.2, float)
    window_end: float = _opt(0.8, float)


_SECTIONS = {
    "lattice": LatticeConfig,
    "metric": MetricConfig,
    "measure": MeasureConfig,
    "flow": FlowConfig,
    "theta0": Theta0Config,
    "psi0": Psi0Config,
    "integrator": IntegratorConfig,
    "output": OutputConfig,
}


@dataclass
class ScenarioConfig:
    lattice: LatticeConfig = field(default_factory=LatticeConfig)
    metric: MetricConfig = field(default_factory=MetricConfig)
    measure: MeasureConfig = field(default_factory=MeasureConfig)
    flow: FlowConfig = field(default_factory=FlowConfig)
    theta0: Theta0Config = field(default_factory=Theta0Config)
    psi0: Psi0Config = field(default_factory=Psi0Config)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict[str, dict[str, Any]]:
        """Nested mapping with the external key names; ``None`` entries dropped."""
        out = {}
        for name in _SECTIONS:
            section = getattr(self, name)
            out[name] = {
                _key(f): getattr(section, f.name)
                for f in fields(section)
                if getattr(section, f.name) is not None
            }
        return out


def _key(f) -> str:
    return f.metadata.get("key") or f.name


def _coerce(where: str, kind, value):
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(where, f"expected true/false, got {value!r}")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(where, f"expected an integer, got {value!r}")
        return int(value)
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(where, f"expected a number, got {value!r}")
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(where, f"expected a string, got {value!r}")
        return value
    if kind is list:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(where, f"expected a list of numbers, got {value!r}")
        out = []
        for j, v in enumerate(value):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{where}[{j}]", f"expected a number, got {v!r}")
            out.append(float(v))
        return out
    raise TypeError(kind)


def config_from_mapping(data: dict) -> ScenarioConfig:
    """Build and validate a config from nested mappings (parsed TOML or JSON)."""
    if not isinstance(data, dict):
        raise ConfigError("document", "top level must be a table")
    cfg = ScenarioConfig()
    for section_name, table in data.items():
        if section_name not in _SECTIONS:
            raise ConfigError(section_name, "unknown section")
        if not isinstance(table, dict):
            raise ConfigError(section_name, "section must be a table")
        section = getattr(cfg, section_name)
        by_key = {_key(f): f for f in fields(section)}
        for key, value in table.items():
            where = f"{section_name}.{key}"
            if key not in by_key:
                raise ConfigError(where, "unknown key")
            f = by_key[key]
            setattr(section, f.name, _coerce(where, f.metadata["kind"], value))
    validate(cfg)
    return cfg


def parse_config(text: str) -> ScenarioConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParseError(
            getattr(exc, "msg", str(exc)), getattr(exc, "lineno", None), getattr(exc, "colno", None)
        ) from exc
    return config_from_mapping(data)


def parse_value(raw: str):
    """Interpret a command-line value as a TOML value, else as a bare string."""
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw


def apply_overrides(cfg: ScenarioConfig, overrides: dict[str, Any]) -> ScenarioConfig:
    """Return a validated copy with dotted ``section.key`` overrides applied."""
    data = cfg.to_dict()
    for dotted, value in overrides.items():
        section, sep, key = dotted.partition(".")
        if not sep or not key:
            raise ConfigError(dotted, "override keys look like section.key")
        data.setdefault(section, {})[key] = value
    return config_from_mapping(copy.deepcopy(data))


def _positive_list(where: str, values: list | None, n: int) -> np.ndarray:
    if values is None:
        raise ConfigError(where, "required for this kind")
    if len(values) != n:
        raise ConfigError(where, f"expected {n} values (lattice.size), got {len(values)}")
    for j, v in enumerate(values):
        if not (v > 0 and np.isfinite(v)):
            raise ConfigError(f"{where}[{j}]", f"must be positive, got {v!r}")
    return np.array(values, dtype=float)


def _choice(where: str, value: str, options: tuple[str, ...]):
    if value not in options:
        raise ConfigError(where, f"must be one of {', '.join(options)}; got {value!r}")


def validate(cfg: ScenarioConfig) -> None:
    n = cfg.lattice.size
    if n < 3:
        raise ConfigError("lattice.size", f"must be at least 3, got {n}")

    m = cfg.metric
    _choice("metric.kind", m.kind, ("constant", "explicit", "geometric-open"))
    if m.kind == "constant" and not m.value > 0:
        raise ConfigError("metric.value", f"must be positive, got {m.value!r}")
    if m.kind == "explicit":
        _positive_list("metric.values", m.values, n)
    if m.kind == "geometric-open":
        if not m.ratio > 0:
            raise ConfigError("metric.lambda", f"must be positive, got {m.ratio!r}")
        if not m.g0 > 0:
            raise ConfigError("metric.g0", f"must be positive, got {m.g0!r}")

    _choice("measure.kind", cfg.measure.kind, ("from-metric", "explicit"))
    if cfg.measure.kind == "explicit":
        _positive_list("measure.values", cfg.measure.values, n)

    f = cfg.flow
    _choice("flow.mode", f.mode, ("flat_polar", "generic"))
    if not (f.r >= 0 and np.isfinite(f.r)):
        raise ConfigError("flow.r", f"must be a nonnegative number, got {f.r!r}")
    if f.mode == "flat_polar":
        if m.kind == "explicit" and len(set(m.values)) > 1:
            raise ConfigError(
                "metric.values",
                "flat_polar needs a divergence-compatible metric (constant ratio rho = 1), "
                "but these values are not constant",
            )
        if m.kind == "geometric-open":
            raise ConfigError(
                "metric.kind",
                "flat_polar needs a divergence-compatible metric with rho = 1 on a periodic "
                "window; geometric-open metrics are only for generic-mode diagnostics",
            )
        if cfg.measure.kind == "explicit":
            raise ConfigError("measure.kind", "flat_polar uses the metric measure mu = g")
    elif m.kind == "geometric-open" and cfg.measure.kind == "explicit":
        raise ConfigError("measure.kind", "open-window runs use the metric measure mu = g")

    t = cfg.theta0
    _choice("theta0.kind", t.kind, ("constant", "gaussian"))
    if t.kind == "gaussian" and not t.width > 0:
        raise ConfigError("theta0.width", f"must be positive, got {t.width!r}")

    p = cfg.psi0
    _choice("psi0.kind", p.kind, ("gaussian", "plane-wave", "explicit"))
    if p.kind == "gaussian" and not p.width > 0:
        raise ConfigError("psi0.width", f"must be positive, got {p.width!r}")
    if p.kind == "explicit":
        if p.values is None or len(p.values) != n:
            raise ConfigError("psi0.values", f"expected {n} values (lattice.size)")
        if p.imag_values is not None and len(p.imag_values) != n:
            raise ConfigError("psi0.imag_values", f"expected {n} values (lattice.size)")
        if not any(p.values) and not any(p.imag_values or []) and p.normalize:
            raise ConfigError("psi0.values", "cannot normalize an identically zero amplitude")

    i = cfg.integrator
    if not (i.ds > 0 and np.isfinite(i.ds)):
        raise ConfigError("integrator.ds", f"must be positive, got {i.ds!r}")
    if i.steps < 1:
        raise ConfigError("integrator.steps", f"must be at least 1, got {i.steps}")

    o = cfg.output
    if o.record_every < 1:
        raise ConfigError("output.record_every", f"must be at least 1, got {o.record_every}")
    _choice("output.track", o.track, ("theta", "psi"))
    if not 0 <= o.window_start < o.window_end <= 1:
        raise ConfigError("output.window_start", "need 0 <= window_start < window_end <= 1")


def build_metric(cfg: ScenarioConfig) -> EdgeMetric:
    n = cfg.lattice.size
    m = cfg.metric
    if m.kind == "constant":
        return EdgeMetric.constant(n, m.value)
    if m.kind == "explicit":
        return EdgeMetric(np.array(m.values))
    return EdgeMetric.geometric(n, m.ratio, m.g0)


def build_measure(cfg: ScenarioConfig, metric: EdgeMetric) -> Measure:
    if cfg.measure.kind == "explicit":
        return Measure(np.array(cfg.measure.values))
    return Measure.from_metric(metric)


def build_theta0(cfg: ScenarioConfig) -> np.ndarray:
    t = cfg.theta0
    n = cfg.lattice.size
    if t.kind == "constant":
        return np.full(n, t.value)
    return gaussian_profile(n, t.center, t.width, t.height)


def build_psi0(cfg: ScenarioConfig, measure: Measure) -> tuple[np.ndarray, float]:
    """Initial amplitude and its norm before any normalization."""
    p = cfg.psi0
    n = cfg.lattice.size
    i = np.arange(n, dtype=float)
    if p.kind == "gaussian":
        psi = gaussian_profile(n, p.center, p.width).astype(complex)
        if p.k != 0:
            psi = psi * np.exp(1j * p.k * i)
    elif p.kind == "plane-wave":
        psi = np.exp(1j * p.k * i)
    else:
        psi = np.array(p.values, dtype=complex)
        if p.imag_values is not None:
            psi = psi + 1j * np.array(p.imag_values)
    raw_norm = float(np.real(integrate(np.abs(psi) ** 2, measure)))
    if p.normalize:
        psi = psi / np.sqrt(raw_norm)
    return psi, raw_norm


def build_initial_state(cfg: ScenarioConfig) -> tuple[FlowState, dict[str, Any]]:
    """Initial flow state plus bookkeeping (``psi0_raw_norm``)."""
    metric = build_metric(cfg)
    measure = build_measure(cfg, metric)
    theta0 = build_theta0(cfg)
    psi0, raw_norm = build_psi0(cfg, measure)
    r = cfg.flow.r
    if cfg.flow.mode == "flat_polar":
        velocity = PolarVelocity(r, theta0)
    else:
        velocity = VelocityField.real_partner(r * np.exp(1j * theta0), measure)
    state = FlowState(0.0, cfg.flow.mode, velocity, psi0, metric, measure)
    return state, {"psi0_raw_norm": raw_norm}
