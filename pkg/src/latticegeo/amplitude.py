"""Amplitude flow ``dpsi/ds = -X(d psi) - psi kappa`` and diagnostics on psi."""

from __future__ import annotations

import numpy as np

from .errors import UndefinedPeakError
from .lattice import Measure, _check_same_length, integrate
from .velocity import PolarVelocity, VelocityField

__all__ = [
    "amplitude_rhs",
    "amplitude_rhs_polar",
    "norm",
    "imaginary_mass",
    "boundary_fraction",
    "profile_peak",
    "peak_position",
    "peak_velocity",
    "gaussian_profile",
]


def _amplitude_kernel(psi, xp, xm, kappa):
    return -(np.roll(psi, -1) - psi) * xp - (np.roll(psi, 1) - psi) * xm - psi * kappa


def _amplitude_polar_kernel(psi, r, theta, kappa):
    phase = np.exp(1j * theta)
    return (
        -r * (np.roll(psi, -1) - psi) * phase
        + r * (np.roll(psi, 1) - psi) * np.conj(np.roll(phase, 1))
        - psi * kappa
    )


def amplitude_rhs(psi: np.ndarray, field: VelocityField, kappa: np.ndarray) -> np.ndarray:
    """``-(d_+ psi) X^+ - (d_- psi) X^- - psi kappa``."""
    _check_same_length(psi, field.x_plus, kappa)
    return _amplitude_kernel(psi, field.x_plus, field.x_minus, kappa)


def amplitude_rhs_polar(psi: np.ndarray, p: PolarVelocity, kappa: np.ndarray) -> np.ndarray:
    """Amplitude flow written directly in ``(r, theta)``.

    Agrees with ``amplitude_rhs(psi, polar_to_field(p), kappa)`` up to
    rounding; ``kappa`` should be ``kappa_polar(p)``.
    """
    _check_same_length(psi, p.theta, kappa)
    return _amplitude_polar_kernel(psi, p.r, p.theta, kappa)


def norm(psi: np.ndarray, measure: Measure) -> float:
    return float(integrate(np.abs(psi) ** 2, measure))


def imaginary_mass(psi: np.ndarray, measure: Measure) -> float:
    return float(integrate(np.imag(psi) ** 2, measure))


def boundary_fraction(psi: np.ndarray, measure: Measure) -> float:
    """Share of ``norm`` carried by the two sites adjacent to the seam."""
    density = np.abs(psi) ** 2 * measure.mu
    total = float(np.sum(density))
    if total == 0:
        return 0.0
    return float((density[0] + density[-1]) / total)


def profile_peak(values: np.ndarray) -> float:
    """Sub-site location of the maximum of a real profile.

    A parabola is fitted through the maximum site and its two periodic
    neighbours. The result lies in ``[0, N)``.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    top = np.max(values)
    hits = np.flatnonzero(values == top)
    if hits.size != 1:
        raise UndefinedPeakError(f"profile has {hits.size} maximal sites")
    k = int(hits[0])
    left, mid, right = values[k - 1], values[k], values[(k + 1) % n]
    curvature = left - 2 * mid + right
    offset = 0.5 * (left - right) / curvature if curvature != 0 else 0.0
    return float((k + offset) % n)


def peak_position(psi: np.ndarray) -> float:
    """Peak of the density ``|psi|^2``."""
    return profile_peak(np.abs(psi) ** 2)


def peak_velocity(
    s: np.ndarray,
    peaks: np.ndarray,
    n_sites: int,
    window: tuple[float, float] = (0.2, 0.8),
) -> float:
    """Least-squares slope of peak position against ``s``.

    Positions are unwrapped across the periodic seam first. Only samples with
    ``s`` inside the given fraction of the run enter the fit (default: the
    middle 60%). Returns NaN if fewer than two usable samples remain.
    """
    s = np.asarray(s, dtype=float)
    peaks = np.asarray(peaks, dtype=float)
    ok = np.isfinite(peaks)
    s, peaks = s[ok], peaks[ok]
    if s.size < 2:
        return float("nan")
    unwrapped = np.unwrap(peaks, period=n_sites)
    span = s[-1] - s[0]
    lo, hi = s[0] + window[0] * span, s[0] + window[1] * span
    sel = (s >= lo) & (s <= hi)
    if np.count_nonzero(sel) < 2:
        return float("nan")
    slope, _ = np.polyfit(s[sel], unwrapped[sel], 1)
    return float(slope)


def gaussian_profile(n: int, center: float, width: float, height: float = 1.0) -> np.ndarray:
    """``height * exp(-(i - center)^2 / (2 width^2))`` for ``i = 0..n-1``."""
    i = np.arange(n, dtype=float)
    return height * np.exp(-((i - center) ** 2) / (2 * width**2))
