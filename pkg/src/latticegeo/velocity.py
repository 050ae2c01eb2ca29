"""Geodesic velocity fields on the lattice line.

A vector field is written ``X = f_+ X^+ + f_- X^-`` in the basis dual to
``e^+, e^-``; we store the two component functions. The connection is the
quantum Levi-Civita connection of an edge-symmetric metric, which enters the
velocity equations only through the ratio derivatives ``rho_pm``.

Two families of formulas are provided:

* ``flat``: divergence-compatible metrics (``rho`` a scalar constant, with
  measure ``mu = g``). On a periodic window this means ``rho = 1``; constant
  ``rho != 1`` is only meaningful on an open window.
* ``generic``: arbitrary positive metric and measure, with the divergence
  defined by adjointness against ``integral X(df)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .lattice import (
    EdgeMetric,
    Measure,
    _check_same_length,
    _frozen,
    constant_ratio,
    lattice_function,
    rho,
)

__all__ = [
    "VelocityField",
    "PolarVelocity",
    "polar_to_field",
    "kappa_flat",
    "kappa_general",
    "kappa_polar",
    "reality_residual",
    "velocity_rhs",
    "aux_residual",
    "implicit_condition_residual",
    "theta_rhs",
]


@dataclass(frozen=True)
class VelocityField:
    x_plus: np.ndarray
    x_minus: np.ndarray

    def __post_init__(self):
        xp = lattice_function(self.x_plus).astype(np.complex128)
        xm = lattice_function(self.x_minus).astype(np.complex128)
        _check_same_length(xp, xm)
        if not (np.all(np.isfinite(xp)) and np.all(np.isfinite(xm))):
            raise ValueError("velocity field has non-finite entries")
        object.__setattr__(self, "x_plus", _frozen(xp))
        object.__setattr__(self, "x_minus", _frozen(xm))

    @classmethod
    def real_partner(cls, x_plus, measure: Measure) -> VelocityField:
        """Complete ``X^+`` to a field that is real with respect to ``measure``.

        Uses ``X^- = -conj(R_-(mu X^+)) / mu``; the condition on ``X^+`` then
        holds automatically.
        """
        xp = lattice_function(x_plus).astype(np.complex128)
        mu = measure.mu
        _check_same_length(xp, mu)
        return cls(xp, -np.conj(np.roll(mu * xp, 1)) / mu)

    @property
    def size(self) -> int:
        return len(self.x_plus)


@dataclass(frozen=True)
class PolarVelocity:
    """Flat-metric real field ``X^+ = r e^{i theta}``, ``X^- = -R_-(r e^{-i theta})``.

    ``r`` is a single nonnegative number: on a flat lattice the auxiliary
    equation forces ``|X^+|`` to be constant.
    """

    r: float
    theta: np.ndarray

    def __post_init__(self):
        r = float(self.r)
        if not (r >= 0 and np.isfinite(r)):
            raise ValueError(f"r must be a nonnegative finite number, got {self.r!r}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "theta", _frozen(lattice_function(self.theta, real=True)))

    @property
    def size(self) -> int:
        return len(self.theta)


def polar_to_field(p: PolarVelocity) -> VelocityField:
    phase = np.exp(1j * p.theta)
    return VelocityField(p.r * phase, -p.r * np.conj(np.roll(phase, 1)))


# Array kernels. The public functions validate and dispatch; the integrator
# calls these directly to avoid per-stage allocation of dataclasses.

def _kappa_measure(xp, xm, mu):
    # half of div_int(X) = -(1/mu) (d_-(mu X^+) + d_+(mu X^-))
    a = mu * xp
    b = mu * xm
    return -0.5 * (np.roll(a, 1) - a + np.roll(b, -1) - b) / mu


def _kappa_ratio(xp, xm, ratio):
    return 0.5 * ((xp - np.roll(xp, 1) / ratio) + (xm - ratio * np.roll(xm, -1)))


def _velocity_kernel(xp, xm, kappa, rho_plus, rho_minus):
    dp_xp = np.roll(xp, -1) - xp
    dm_xp = np.roll(xp, 1) - xp
    dp_xm = np.roll(xm, -1) - xm
    dm_xm = np.roll(xm, 1) - xm
    dp_k = np.roll(kappa, -1) - kappa
    dm_k = np.roll(kappa, 1) - kappa
    xp_dot = dp_k * xp + (1 - rho_plus) * xp * xp - rho_plus * dp_xp * xp - dm_xp * xm
    xm_dot = dm_k * xm + (1 - rho_minus) * xm * xm - rho_minus * dm_xm * xm - dp_xm * xp
    return xp_dot, xm_dot


def _theta_kernel(r, theta):
    s = np.sin(theta)
    return r * (np.roll(s, 1) - np.roll(s, -1))


def _kappa_polar_kernel(r, theta):
    c = np.cos(theta)
    return -r * (np.roll(c, 1) - c)


def _reality_kernel(xp, xm, mu):
    res_plus = np.conj(xp) + np.roll(mu * xm, -1) / mu
    res_minus = np.conj(xm) + np.roll(mu * xp, 1) / mu
    return res_plus, res_minus


def _aux_kernel(xp, xm, ratio):
    y = xp * np.roll(xm, -1)
    lhs = (np.roll(y, 1) - y) + ratio * (np.roll(y, -1) - y)
    if ratio == 1.0:
        return lhs
    rhs = (1 - ratio) * (np.roll(xp, -1) - np.roll(xp, 1) / ratio**2) * xp
    return lhs - rhs


def kappa_flat(field: VelocityField, metric: EdgeMetric, tol: float = 1e-12) -> np.ndarray:
    """``kappa = (1/2) div X`` for a divergence-compatible metric.

    ``kappa = 1/2 ((1 - R_-/rho) X^+ + (1 - rho R_+) X^-)``, which at
    ``rho = 1`` is ``-1/2 (d_- X^+ + d_+ X^-)``.
    """
    _check_same_length(field.x_plus, metric.g)
    ratio = constant_ratio(metric, tol)
    return _kappa_ratio(field.x_plus, field.x_minus, ratio)


def kappa_general(field: VelocityField, measure: Measure) -> np.ndarray:
    """Half the divergence of ``field`` with respect to ``measure``.

    The divergence is fixed by ``sum mu a div(X) + sum mu X(da) = 0`` for all
    ``a``, giving ``div X = -(1/mu)(d_-(mu X^+) + d_+(mu X^-))``.
    """
    _check_same_length(field.x_plus, measure.mu)
    return _kappa_measure(field.x_plus, field.x_minus, measure.mu)


def kappa_polar(p: PolarVelocity) -> np.ndarray:
    """``kappa = -r d_- cos(theta)`` for a polar field on the flat lattice."""
    return _kappa_polar_kernel(p.r, p.theta)


def reality_residual(field: VelocityField, measure: Measure) -> tuple[np.ndarray, np.ndarray]:
    """``res_pm = conj(X^pm) + R_pm(mu X^mp) / mu``; both vanish iff ``field``
    is real with respect to ``measure``."""
    _check_same_length(field.x_plus, measure.mu)
    return _reality_kernel(field.x_plus, field.x_minus, measure.mu)


def velocity_rhs(
    field: VelocityField,
    metric: EdgeMetric,
    mode: str = "flat",
    measure: Measure | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Time derivative ``(dX^+/ds, dX^-/ds)`` from the geodesic velocity equations.

    ``mode="flat"`` requires a constant ratio ``rho`` and uses ``rho_- = 1/rho``.
    ``mode="generic"`` uses the pointwise ``rho_pm`` of a periodic metric and
    ``kappa`` from :func:`kappa_general` with ``measure`` (default ``mu = g``).
    """
    xp, xm = field.x_plus, field.x_minus
    _check_same_length(xp, metric.g)
    if mode == "flat":
        ratio = constant_ratio(metric)
        kappa = _kappa_ratio(xp, xm, ratio)
        return _velocity_kernel(xp, xm, kappa, ratio, 1.0 / ratio)
    if mode == "generic":
        if not metric.periodic:
            raise PreconditionError("generic velocity equations need a periodic metric")
        mu = (measure or Measure.from_metric(metric)).mu
        _check_same_length(xp, mu)
        rho_plus, rho_minus = rho(metric)
        kappa = _kappa_measure(xp, xm, mu)
        return _velocity_kernel(xp, xm, kappa, rho_plus, rho_minus)
    raise PreconditionError(f"unknown mode {mode!r}; expected 'flat' or 'generic'")


def aux_residual(field: VelocityField, metric: EdgeMetric) -> np.ndarray:
    """Residual of the improved auxiliary equation for constant ``rho``.

    ``(d_- + rho d_+)(X^+ R_+X^-) - (1 - rho)((R_+ - R_-/rho^2) X^+) X^+``,
    which at ``rho = 1`` is the lattice Laplacian of ``X^+ R_+X^-``. For a
    field that is real, ``d/ds`` of the reality residual ``res_+`` equals
    ``-conj`` of this quantity.
    """
    _check_same_length(field.x_plus, metric.g)
    return _aux_kernel(field.x_plus, field.x_minus, constant_ratio(metric))


def implicit_condition_residual(field: VelocityField, metric: EdgeMetric) -> np.ndarray:
    """``(L X^+) X^+ - rho^2 R_+((L X^-) X^-)`` with ``L = R_+ - R_-/rho^2``.

    Diagnostic only; no attempt is made to parametrize its zero set.
    """
    ratio = constant_ratio(metric)

    def apply_l(f):
        return np.roll(f, -1) - np.roll(f, 1) / ratio**2

    xp, xm = field.x_plus, field.x_minus
    return apply_l(xp) * xp - ratio**2 * np.roll(apply_l(xm) * xm, -1)


def theta_rhs(p: PolarVelocity) -> np.ndarray:
    """Phase flow ``dtheta/ds = r (R_- - R_+) sin(theta)``; ``r`` is conserved."""
    return _theta_kernel(p.r, p.theta)
