"""Run a scenario and write ``fields.csv``, ``summary.csv`` and ``run.json``."""

from __future__ import annotations

import json
import logging
import os
import platform
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .amplitude import boundary_fraction, peak_velocity
from .config import ScenarioConfig, apply_overrides, build_initial_state, config_from_mapping, parse_config
from .errors import ConfigParseError, DivergenceError
from .evolution import Trajectory, evolve

__all__ = [
    "FIELDS_COLUMNS",
    "SUMMARY_COLUMNS",
    "SEAM_TOLERANCE",
    "RunResult",
    "run_scenario",
    "load_config_file",
    "resolve_output_dir",
]

log = logging.getLogger(__name__)

FIELDS_COLUMNS = ("s", "i", "theta", "kappa", "re_psi", "im_psi", "abs2_psi")
SUMMARY_COLUMNS = (
    "s",
    "norm",
    "norm_drift",
    "imag_mass",
    "peak_pos",
    "peak_velocity_estimate",
    "max_aux_residual",
    "max_reality_residual",
)
SEAM_TOLERANCE = 1e-10
FLOAT_FORMAT = "%.17g"


@dataclass
class RunResult:
    config: ScenarioConfig
    output_dir: Path
    trajectory: Trajectory
    peak_velocity: float
    diagnostics: dict[str, Any]
    warnings: list[str] = field(default_factory=list)


def load_config_file(path: str | Path) -> ScenarioConfig:
    """Read a TOML scenario, or the ``config`` block of a previous ``run.json``."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigParseError(exc.msg, exc.lineno, exc.colno) from exc
        if isinstance(data, dict) and "config" in data:
            data = data["config"]
        return config_from_mapping(data)
    return parse_config(text)


def resolve_output_dir(cfg: ScenarioConfig, out_dir: str | Path | None = None) -> Path:
    """Explicit argument, then ``$OUTPUT_DIR``, then ``output.dir``."""
    return Path(out_dir or os.environ.get("OUTPUT_DIR") or cfg.output.dir)


def _software() -> dict[str, str]:
    return {
        "package": "latticegeo",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


def _write_json(path: Path, payload: dict) -> None:
    with path.open("w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, allow_nan=True)
        handle.write("\n")


def _write_csv(path: Path, columns, table: np.ndarray) -> None:
    np.savetxt(path, table, fmt=FLOAT_FORMAT, delimiter=",", header=",".join(columns), comments="")


def _fields_table(traj: Trajectory) -> np.ndarray:
    k, n = traj.psi.shape
    psi = traj.psi.reshape(-1)
    return np.column_stack(
        [
            np.repeat(traj.s, n),
            np.tile(np.arange(n, dtype=float), k),
            traj.theta.reshape(-1),
            np.real(traj.kappa).reshape(-1),
            psi.real,
            psi.imag,
            np.abs(psi) ** 2,
        ]
    )


def _summary_table(traj: Trajectory, peaks: np.ndarray, velocity: float) -> np.ndarray:
    return np.column_stack(
        [
            traj.s,
            traj.norm,
            traj.norm_drift,
            traj.imag_mass,
            peaks,
            np.full(len(traj.s), velocity),
            traj.max_aux_residual,
            traj.max_reality_residual,
        ]
    )


def _nan_to_none(value):
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def _seam_warning(label: str, fraction: float) -> str | None:
    if fraction > SEAM_TOLERANCE:
        return (
            f"{label}: {fraction:.3g} of the norm sits on the sites next to the periodic seam "
            f"(threshold {SEAM_TOLERANCE:g}); move bumps further from i = 0 and i = N-1"
        )
    return None


def run_scenario(
    cfg: ScenarioConfig,
    out_dir: str | Path | None = None,
    preset: str | None = None,
) -> RunResult:
    """Integrate ``cfg`` and write the three output files into the output directory.

    On numerical divergence ``run.json`` is still written, with
    ``status = "diverged"`` and the last good ``s``, before the
    :class:`DivergenceError` propagates.
    """
    out = resolve_output_dir(cfg, out_dir)
    cfg = apply_overrides(cfg, {"output.dir": str(out)})
    out.mkdir(parents=True, exist_ok=True)

    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    state0, info = build_initial_state(cfg)
    warnings: list[str] = []
    msg = _seam_warning("initial amplitude", boundary_fraction(state0.psi, state0.measure))
    if msg:
        warnings.append(msg)

    meta = {
        "status": "ok",
        "preset": preset,
        "config": cfg.to_dict(),
        "software": _software(),
        "started_at": started,
    }
    try:
        traj = evolve(state0, cfg.integrator.ds, cfg.integrator.steps, cfg.output.record_every)
    except DivergenceError as exc:
        meta.update(
            status="diverged",
            error=str(exc),
            last_good_s=exc.last_good_s,
            wall_clock_seconds=time.perf_counter() - t0,
            warnings=warnings,
        )
        _write_json(out / "run.json", meta)
        raise

    warnings.extend(traj.warnings)
    final = traj.final_state
    msg = _seam_warning("final amplitude", boundary_fraction(final.psi, final.measure))
    if msg:
        warnings.append(msg)
    for w in warnings:
        log.warning(w)

    peaks = traj.theta_peak if cfg.output.track == "theta" else traj.psi_peak
    velocity = peak_velocity(
        traj.s, peaks, traj.n_sites, (cfg.output.window_start, cfg.output.window_end)
    )

    _write_csv(out / "fields.csv", FIELDS_COLUMNS, _fields_table(traj))
    _write_csv(out / "summary.csv", SUMMARY_COLUMNS, _summary_table(traj, peaks, velocity))

    diagnostics = {
        "final_s": float(traj.s[-1]),
        "samples": int(len(traj.s)),
        "final_norm": float(traj.norm[-1]),
        "max_abs_norm_drift": float(np.max(np.abs(traj.norm_drift))),
        "norm_drift_warning": traj.norm_drift_warning,
        "final_imag_mass": float(traj.imag_mass[-1]),
        "tracked": cfg.output.track,
        "peak_velocity": _nan_to_none(velocity),
        "max_aux_residual": _nan_to_none(float(np.nanmax(traj.max_aux_residual)))
        if np.any(np.isfinite(traj.max_aux_residual))
        else None,
        "max_reality_residual": float(np.max(traj.max_reality_residual)),
        "psi0_raw_norm": info["psi0_raw_norm"],
        "psi0_normalized": cfg.psi0.normalize,
    }
    meta.update(
        diagnostics=diagnostics,
        warnings=warnings,
        wall_clock_seconds=time.perf_counter() - t0,
    )
    _write_json(out / "run.json", meta)
    return RunResult(cfg, out, traj, velocity, diagnostics, warnings)

