"""Discrete calculus on a finite periodic window of the integer line.

A lattice function is a one-dimensional numpy array of length ``N >= 3``
whose index is read modulo ``N``. Shifts are ``R_+ f(i) = f(i+1)`` and
``R_- f(i) = f(i-1)``; the finite differences are ``d_pm = R_pm - id``.

Edge metrics assign a positive square length ``g(i)`` to the edge
``i -- i+1``. A metric may be flagged as an *open window* (``periodic=False``),
in which case quantities that would need values across the seam between
site ``N-1`` and site ``0`` are reported as NaN. Open windows exist so that
geometric metrics ``g(i) = g0 * lam**i``, which cannot close up on a cycle,
can still be inspected.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import DimensionError, PreconditionError

if TYPE_CHECKING:
    from .velocity import VelocityField

__all__ = [
    "MIN_SITES",
    "EdgeMetric",
    "Measure",
    "OneForm",
    "lattice_function",
    "shift",
    "finite_diff",
    "laplacian",
    "integrate",
    "rho",
    "constant_ratio",
    "is_divergence_compatible",
    "div_basis",
    "measure_shift_ratios",
    "exterior_d",
    "eval_field",
    "interior_mask",
]

MIN_SITES = 3


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def lattice_function(values, *, real: bool = False) -> np.ndarray:
    """Validate ``values`` as a lattice function and return a fresh array.

    Real data is stored as ``float64`` (imaginary part exactly zero by
    construction); everything else as ``complex128``.
    """
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise DimensionError(f"lattice function must be one-dimensional, got shape {arr.shape}")
    if arr.shape[0] < MIN_SITES:
        raise DimensionError(f"lattice needs at least {MIN_SITES} sites, got {arr.shape[0]}")
    if real or not np.iscomplexobj(arr):
        if np.iscomplexobj(arr):
            if np.any(arr.imag != 0):
                raise ValueError("real lattice function has nonzero imaginary part")
            arr = arr.real
        return np.array(arr, dtype=np.float64)
    return np.array(arr, dtype=np.complex128)


def _check_same_length(*arrays: np.ndarray) -> int:
    n = len(arrays[0])
    for a in arrays[1:]:
        if len(a) != n:
            raise DimensionError(f"length mismatch: {n} vs {len(a)}")
    return n


def _direction(direction) -> int:
    if direction in (1, "+"):
        return 1
    if direction in (-1, "-"):
        return -1
    raise ValueError(f"direction must be +1/'+' or -1/'-', got {direction!r}")


@dataclass(frozen=True)
class EdgeMetric:
    """Edge-symmetric metric: ``g[i]`` is the square length of edge ``i -- i+1``."""

    g: np.ndarray
    periodic: bool = True

    def __post_init__(self):
        g = lattice_function(self.g, real=True)
        bad = np.flatnonzero(~(g > 0) | ~np.isfinite(g))
        if bad.size:
            i = int(bad[0])
            raise ValueError(f"metric value g[{i}] = {g[i]!r} is not a positive finite number")
        object.__setattr__(self, "g", _frozen(g))

    @classmethod
    def constant(cls, n: int, value: float = 1.0) -> EdgeMetric:
        return cls(np.full(n, float(value)))

    @classmethod
    def geometric(cls, n: int, ratio: float, g0: float = 1.0) -> EdgeMetric:
        """Open-window metric ``g(i) = g0 * ratio**i``."""
        return cls(g0 * float(ratio) ** np.arange(n), periodic=False)

    @property
    def size(self) -> int:
        return len(self.g)


@dataclass(frozen=True)
class Measure:
    """Positive weights defining ``integral f = sum_i f(i) mu(i)``."""

    mu: np.ndarray

    def __post_init__(self):
        mu = lattice_function(self.mu, real=True)
        bad = np.flatnonzero(~(mu > 0) | ~np.isfinite(mu))
        if bad.size:
            i = int(bad[0])
            raise ValueError(f"measure weight mu[{i}] = {mu[i]!r} is not a positive finite number")
        object.__setattr__(self, "mu", _frozen(mu))

    @classmethod
    def uniform(cls, n: int, weight: float = 1.0) -> Measure:
        return cls(np.full(n, float(weight)))

    @classmethod
    def from_metric(cls, metric: EdgeMetric) -> Measure:
        return cls(metric.g)

    @property
    def size(self) -> int:
        return len(self.mu)


@dataclass(frozen=True)
class OneForm:
    """``omega = plus * e^+ + minus * e^-``."""

    plus: np.ndarray
    minus: np.ndarray

    def __post_init__(self):
        plus = lattice_function(self.plus)
        minus = lattice_function(self.minus)
        _check_same_length(plus, minus)
        object.__setattr__(self, "plus", _frozen(plus))
        object.__setattr__(self, "minus", _frozen(minus))


def shift(f: np.ndarray, direction) -> np.ndarray:
    """``R_+ f(i) = f(i+1)``, ``R_- f(i) = f(i-1)`` with indices mod ``N``."""
    return np.roll(f, -_direction(direction))


def finite_diff(f: np.ndarray, direction) -> np.ndarray:
    return shift(f, direction) - f


def laplacian(f: np.ndarray) -> np.ndarray:
    """``f(i+1) + f(i-1) - 2 f(i)``."""
    return np.roll(f, -1) + np.roll(f, 1) - 2 * f


def integrate(f: np.ndarray, measure: Measure | np.ndarray):
    mu = measure.mu if isinstance(measure, Measure) else np.asarray(measure)
    _check_same_length(f, mu)
    return np.sum(f * mu)


def interior_mask(n: int, margin: int) -> np.ndarray:
    """Boolean mask that is False within ``margin`` sites of the seam."""
    mask = np.ones(n, dtype=bool)
    if margin > 0:
        mask[:margin] = False
        mask[n - margin:] = False
    return mask


def rho(metric: EdgeMetric) -> tuple[np.ndarray, np.ndarray]:
    """Ratio derivatives ``rho_+(i) = g(i+1)/g(i)`` and ``rho_-(i) = g(i-2)/g(i-1)``.

    On an open window the entries that straddle the seam (``rho_+`` at
    ``N-1``; ``rho_-`` at ``0`` and ``1``) are NaN.
    """
    g = metric.g
    rho_plus = np.roll(g, -1) / g
    g_prev = np.roll(g, 1)
    rho_minus = np.roll(g, 2) / g_prev
    if not metric.periodic:
        rho_plus[-1] = np.nan
        rho_minus[:2] = np.nan
    return rho_plus, rho_minus


def _ratio_spread(metric: EdgeMetric) -> tuple[float, float]:
    rho_plus = rho(metric)[0]
    vals = rho_plus[np.isfinite(rho_plus)]
    mean = float(np.mean(vals))
    return mean, float(np.max(np.abs(vals - mean)))


def is_divergence_compatible(metric: EdgeMetric, tol: float = 1e-12) -> bool:
    """True iff ``rho_+`` is constant to relative tolerance ``tol``.

    On a periodic window this can only happen for a constant metric
    (``prod rho_+ = 1`` forces the constant to be 1).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    mean, spread = _ratio_spread(metric)
    return spread <= tol * mean


def constant_ratio(metric: EdgeMetric, tol: float = 1e-12) -> float:
    """The scalar ``rho`` of a divergence-compatible metric.

    Raises :class:`PreconditionError` if ``rho_+`` is not constant.
    """
    mean, spread = _ratio_spread(metric)
    if spread > tol * mean:
        raise PreconditionError(
            f"metric is not divergence-compatible: rho_+ varies by {spread:.3g} around {mean:.6g}"
        )
    return mean


def div_basis(metric: EdgeMetric) -> tuple[np.ndarray, np.ndarray]:
    """Divergences of the dual basis: ``div f_+ = 1 - g(i-1)/g(i)`` and
    ``div f_- = 1 - g(i)/g(i-1)``."""
    g = metric.g
    g_prev = np.roll(g, 1)
    div_plus = 1 - g_prev / g
    div_minus = 1 - g / g_prev
    if not metric.periodic:
        div_plus[0] = np.nan
        div_minus[0] = np.nan
    return div_plus, div_minus


def measure_shift_ratios(measure: Measure, periodic: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """``(R_+ mu / mu, R_- mu / mu)``; seam entries are NaN on an open window."""
    mu = measure.mu
    up = np.roll(mu, -1) / mu
    down = np.roll(mu, 1) / mu
    if not periodic:
        up[-1] = np.nan
        down[0] = np.nan
    return up, down


def exterior_d(f: np.ndarray) -> OneForm:
    return OneForm(finite_diff(f, +1), finite_diff(f, -1))


def eval_field(omega: OneForm, field: VelocityField) -> np.ndarray:
    """Pair a 1-form with a vector field: ``omega_+ X^+ + omega_- X^-``."""
    _check_same_length(omega.plus, field.x_plus)
    return omega.plus * field.x_plus + omega.minus * field.x_minus
