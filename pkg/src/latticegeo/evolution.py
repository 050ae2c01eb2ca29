"""Fixed-step integration of the coupled velocity/amplitude system.

Two modes:

``flat_polar``
    Constant metric on a periodic window. The velocity field is kept in polar
    form, so only ``theta`` and ``psi`` evolve; ``r`` is a fixed parameter.

``generic``
    ``X^+``, ``X^-`` and ``psi`` evolve together under the full velocity
    equations. Reality of ``X`` is *not* enforced; the residual is recorded
    so that its growth can be inspected. An open-window metric selects the
    constant-ratio formulas, and sites next to the seam are then left out of
    the residual norms.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .amplitude import _amplitude_kernel, _amplitude_polar_kernel, profile_peak
from .errors import DivergenceError, PreconditionError, UndefinedPeakError
from .lattice import EdgeMetric, Measure, _check_same_length, constant_ratio, interior_mask, rho
from .velocity import (
    PolarVelocity,
    VelocityField,
    _aux_kernel,
    _kappa_measure,
    _kappa_polar_kernel,
    _kappa_ratio,
    _reality_kernel,
    _theta_kernel,
    _velocity_kernel,
)

__all__ = [
    "FlowState",
    "Trajectory",
    "rk4_step",
    "euler_step",
    "evolve",
    "euler_oracle",
    "DIVERGENCE_THRESHOLD",
    "NORM_DRIFT_WARNING",
]

log = logging.getLogger(__name__)

MODES = ("flat_polar", "generic")
DIVERGENCE_THRESHOLD = 1e12
NORM_DRIFT_WARNING = 1e-6
SEAM_MARGIN = 2


@dataclass(frozen=True)
class FlowState:
    s: float
    mode: str
    velocity: PolarVelocity | VelocityField
    psi: np.ndarray
    metric: EdgeMetric
    measure: Measure

    def __post_init__(self):
        if self.mode not in MODES:
            raise PreconditionError(f"unknown mode {self.mode!r}")
        psi = np.array(self.psi, dtype=np.complex128)
        psi.setflags(write=False)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "s", float(self.s))
        if self.mode == "flat_polar":
            if not isinstance(self.velocity, PolarVelocity):
                raise PreconditionError("flat_polar mode needs a PolarVelocity")
            if not self.metric.periodic:
                raise PreconditionError("flat_polar mode needs a periodic metric")
            ratio = constant_ratio(self.metric)
            if abs(ratio - 1.0) > 1e-12:
                raise PreconditionError("flat_polar mode needs rho = 1")
            if not np.allclose(self.measure.mu, self.metric.g, rtol=1e-14, atol=0):
                raise PreconditionError("flat_polar mode needs the metric measure mu = g")
            n = self.velocity.size
        else:
            if not isinstance(self.velocity, VelocityField):
                raise PreconditionError("generic mode needs a VelocityField")
            if not self.metric.periodic:
                constant_ratio(self.metric)
            n = self.velocity.size
        _check_same_length(np.empty(n), psi, self.metric.g, self.measure.mu)

    @property
    def size(self) -> int:
        return len(self.psi)


class _System:
    """Array-level view of a FlowState: packing, right-hand side, observers."""

    def __init__(self, state: FlowState):
        self.mode = state.mode
        self.metric = state.metric
        self.measure = state.measure
        self.mu = state.measure.mu
        n = state.size
        self.mask = None if state.metric.periodic else interior_mask(n, SEAM_MARGIN)
        if self.mode == "flat_polar":
            self.r = state.velocity.r
            self.aux_ratio = 1.0
        else:
            self.r = None
            if state.metric.periodic:
                self.rho_plus, self.rho_minus = rho(state.metric)
                try:
                    self.aux_ratio = constant_ratio(state.metric)
                except PreconditionError:
                    self.aux_ratio = None
                self.open_ratio = None
            else:
                self.open_ratio = constant_ratio(state.metric)
                self.aux_ratio = self.open_ratio

    def pack(self, state: FlowState) -> tuple[np.ndarray, ...]:
        if self.mode == "flat_polar":
            return (np.array(state.velocity.theta), np.array(state.psi))
        return (np.array(state.velocity.x_plus), np.array(state.velocity.x_minus), np.array(state.psi))

    def unpack(self, arrays, s: float) -> FlowState:
        if self.mode == "flat_polar":
            theta, psi = arrays
            velocity = PolarVelocity(self.r, theta)
        else:
            xp, xm, psi = arrays
            velocity = VelocityField(xp, xm)
        return FlowState(s, self.mode, velocity, psi, self.metric, self.measure)

    def kappa(self, arrays) -> np.ndarray:
        if self.mode == "flat_polar":
            return _kappa_polar_kernel(self.r, arrays[0])
        xp, xm = arrays[0], arrays[1]
        if self.open_ratio is None:
            return _kappa_measure(xp, xm, self.mu)
        return _kappa_ratio(xp, xm, self.open_ratio)

    def rhs(self, arrays):
        kappa = self.kappa(arrays)
        if self.mode == "flat_polar":
            theta, psi = arrays
            return (_theta_kernel(self.r, theta), _amplitude_polar_kernel(psi, self.r, theta, kappa))
        xp, xm, psi = arrays
        if self.open_ratio is None:
            xp_dot, xm_dot = _velocity_kernel(xp, xm, kappa, self.rho_plus, self.rho_minus)
        else:
            xp_dot, xm_dot = _velocity_kernel(xp, xm, kappa, self.open_ratio, 1.0 / self.open_ratio)
        return (xp_dot, xm_dot, _amplitude_kernel(psi, xp, xm, kappa))

    def field_arrays(self, arrays):
        if self.mode == "flat_polar":
            phase = np.exp(1j * arrays[0])
            return self.r * phase, -self.r * np.conj(np.roll(phase, 1))
        return arrays[0], arrays[1]

    def theta(self, arrays) -> np.ndarray:
        if self.mode == "flat_polar":
            return arrays[0]
        return np.angle(arrays[0])

    def _masked_max(self, values) -> float:
        if self.mask is not None:
            values = values[self.mask]
        return float(np.max(np.abs(values)))

    def observe(self, arrays) -> dict:
        psi = arrays[-1]
        xp, xm = self.field_arrays(arrays)
        theta = self.theta(arrays)
        density = np.abs(psi) ** 2
        res_plus, res_minus = _reality_kernel(xp, xm, self.mu)
        if self.aux_ratio is None:
            aux = float("nan")
        else:
            aux = self._masked_max(_aux_kernel(xp, xm, self.aux_ratio))
        return {
            "theta": theta,
            "x_plus": xp,
            "x_minus": xm,
            "kappa": self.kappa(arrays),
            "psi": psi,
            "norm": float(np.sum(density * self.mu)),
            "imag_mass": float(np.sum(np.imag(psi) ** 2 * self.mu)),
            "theta_peak": _safe_peak(theta),
            "psi_peak": _safe_peak(density),
            "max_aux_residual": aux,
            "max_reality_residual": max(self._masked_max(res_plus), self._masked_max(res_minus)),
        }


def _safe_peak(values) -> float:
    try:
        return profile_peak(values)
    except UndefinedPeakError:
        return float("nan")


def _rk4(system: _System, y, ds):
    k1 = system.rhs(y)
    k2 = system.rhs(tuple(a + (0.5 * ds) * b for a, b in zip(y, k1)))
    k3 = system.rhs(tuple(a + (0.5 * ds) * b for a, b in zip(y, k2)))
    k4 = system.rhs(tuple(a + ds * b for a, b in zip(y, k3)))
    return tuple(
        a + (ds / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)
    )


def _euler(system: _System, y, ds):
    return tuple(a + ds * b for a, b in zip(y, system.rhs(y)))


def _check_finite(y, s_new: float, s_old: float):
    for a in y:
        if not np.all(np.isfinite(a)):
            raise DivergenceError(f"non-finite values at s = {s_new:.6g}", s_new, s_old)
        big = float(np.max(np.abs(a)))
        if big > DIVERGENCE_THRESHOLD:
            raise DivergenceError(
                f"component magnitude {big:.3g} exceeds {DIVERGENCE_THRESHOLD:.0e} at s = {s_new:.6g}",
                s_new,
                s_old,
            )


def _check_step(ds: float):
    if not ds > 0:
        raise ValueError(f"ds must be positive, got {ds!r}")


def rk4_step(state: FlowState, ds: float) -> FlowState:
    """One classical Runge-Kutta step; ``kappa`` is rebuilt at every stage."""
    _check_step(ds)
    system = _System(state)
    y = _rk4(system, system.pack(state), ds)
    _check_finite(y, state.s + ds, state.s)
    return system.unpack(y, state.s + ds)


def euler_step(state: FlowState, ds: float) -> FlowState:
    _check_step(ds)
    system = _System(state)
    y = _euler(system, system.pack(state), ds)
    _check_finite(y, state.s + ds, state.s)
    return system.unpack(y, state.s + ds)


@dataclass
class Trajectory:
    """Sampled flow. Snapshot arrays have shape ``(samples, N)``.

    ``theta`` is the phase field in ``flat_polar`` mode and ``angle(X^+)`` in
    ``generic`` mode. ``kappa`` is stored complex; it is real whenever the
    velocity field is.
    """

    mode: str
    method: str
    s: np.ndarray
    theta: np.ndarray
    x_plus: np.ndarray
    x_minus: np.ndarray
    kappa: np.ndarray
    psi: np.ndarray
    norm: np.ndarray
    imag_mass: np.ndarray
    theta_peak: np.ndarray
    psi_peak: np.ndarray
    max_aux_residual: np.ndarray
    max_reality_residual: np.ndarray
    final_state: FlowState
    r: float | None = None
    norm_drift_warning: bool = False
    warnings: list[str] = field(default_factory=list)

    @property
    def n_sites(self) -> int:
        return self.psi.shape[1]

    @property
    def norm_drift(self) -> np.ndarray:
        if self.norm[0] == 0:
            return self.norm - self.norm[0]
        return (self.norm - self.norm[0]) / self.norm[0]


_SNAPSHOTS = ("theta", "x_plus", "x_minus", "kappa", "psi")
_SCALARS = ("norm", "imag_mass", "theta_peak", "psi_peak", "max_aux_residual", "max_reality_residual")


def _integrate(state0: FlowState, ds: float, n_steps: int, record_every: int, stepper, method: str):
    _check_step(ds)
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps!r}")
    if record_every < 1:
        raise ValueError(f"record_every must be >= 1, got {record_every!r}")
    system = _System(state0)
    y = system.pack(state0)
    times = [state0.s]
    records = [system.observe(y)]
    s = state0.s
    for step in range(1, n_steps + 1):
        s_new = state0.s + step * ds
        y = stepper(system, y, ds)
        _check_finite(y, s_new, s)
        s = s_new
        if step % record_every == 0 or step == n_steps:
            times.append(s)
            records.append(system.observe(y))

    data = {key: np.array([rec[key] for rec in records]) for key in _SNAPSHOTS + _SCALARS}
    traj = Trajectory(
        mode=state0.mode,
        method=method,
        s=np.array(times),
        final_state=system.unpack(y, s),
        r=system.r,
        **data,
    )
    drift = float(np.max(np.abs(traj.norm_drift)))
    if drift > NORM_DRIFT_WARNING:
        traj.norm_drift_warning = True
        msg = f"relative norm drift {drift:.3g} exceeds {NORM_DRIFT_WARNING:.0e}"
        traj.warnings.append(msg)
        log.warning(msg)
    return traj


def evolve(state0: FlowState, ds: float, n_steps: int, record_every: int = 1) -> Trajectory:
    """Integrate ``n_steps`` RK4 steps of size ``ds``.

    The initial state and every ``record_every``-th state are sampled, and
    the final state is always sampled. Identical inputs give bit-identical
    trajectories.
    """
    return _integrate(state0, ds, n_steps, record_every, _rk4, "rk4")


def euler_oracle(state0: FlowState, ds: float, n_steps: int, record_every: int = 1) -> Trajectory:
    """Forward-Euler counterpart of :func:`evolve`, for cross-checking only."""
    return _integrate(state0, ds, n_steps, record_every, _euler, "euler")
