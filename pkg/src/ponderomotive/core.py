"""Mechanical oscillator, thermal noise and quadrature algebra.

All PSDs are one-sided in ordinary frequency; internal maths uses angular
frequency.  Functions accept scalars or numpy arrays for ``omega``.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import constants

from ._kernels import kernels
from .errors import DomainError, ValidationError

K_B = constants.k
HBAR = constants.hbar
C_LIGHT = constants.c

# Tolerance for ratios that exceed one by rounding only.
RATIO_TOL = 1e-9


@dataclass(frozen=True)
class MechanicalOscillator:
    effective_mass: float
    resonance_angular_frequency: float
    quality_factor: float

    def __post_init__(self):
        for name in ("effective_mass", "resonance_angular_frequency", "quality_factor"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValidationError(f"{name} must be finite and > 0, got {value!r}")
        if self.quality_factor < 1:
            raise ValidationError(f"quality_factor must be >= 1, got {self.quality_factor!r}")

    @classmethod
    def from_frequency(cls, mass, resonance_hz, quality_factor):
        return cls(mass, 2 * np.pi * resonance_hz, quality_factor)

    @property
    def resonance_hz(self):
        return self.resonance_angular_frequency / (2 * np.pi)

    @property
    def linewidth_hz(self):
        """Full width of the displacement peak, f_M / Q."""
        return self.resonance_hz / self.quality_factor


@dataclass(frozen=True)
class ClassicalInjection:
    center_frequency: float
    bandwidth: float
    force_psd_over_thermal: float  # dB

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValidationError(f"injection bandwidth must be > 0, got {self.bandwidth!r}")
        if not self.center_frequency > 0:
            raise ValidationError(f"injection center_frequency must be > 0, got {self.center_frequency!r}")


@dataclass(frozen=True)
class NoiseEnvironment:
    bath_temperature: float
    classical_injection: Optional[ClassicalInjection] = None
    boltzmann_constant: float = K_B

    def __post_init__(self):
        if not np.isfinite(self.bath_temperature) or self.bath_temperature <= 0:
            raise ValidationError(f"bath_temperature must be > 0, got {self.bath_temperature!r}")

    @property
    def kt(self):
        return self.boltzmann_constant * self.bath_temperature


@dataclass(frozen=True)
class QuadraturePair:
    """Amplitude/phase PSDs and their cross spectrum (arrays or scalars)."""

    amplitude_psd: np.ndarray
    phase_psd: np.ndarray
    cross_psd: np.ndarray


def _as_omega(omega):
    arr = np.atleast_1d(np.asarray(omega, dtype=float))
    return np.ascontiguousarray(arr)


def _restore(result, omega):
    return result if np.ndim(omega) else result[0]


def susceptibility(osc, omega):
    """Complex compliance 1 / (m (w_M^2 - w^2 - i w w_M / Q)) in m/N."""
    w = _as_omega(omega)
    if not np.all(np.isfinite(w)):
        raise DomainError("omega must be finite")
    chi = kernels.susceptibility(w, osc.effective_mass, osc.resonance_angular_frequency,
                                 osc.quality_factor)
    return _restore(chi, omega)


def _require_positive(omega):
    w = _as_omega(omega)
    if np.any(~(w > 0)) or not np.all(np.isfinite(w)):
        raise DomainError("omega must be finite and > 0")
    return w


def thermal_displacement_psd(osc, env, omega):
    """(4kT/w) Im chi(w), m^2/Hz."""
    w = _require_positive(omega)
    psd = kernels.thermal_displacement(w, osc.effective_mass, osc.resonance_angular_frequency,
                                       osc.quality_factor, env.kt)
    return _restore(psd, omega)


def thermal_force_psd(osc, env, omega):
    """-(4kT/w) Im(1/chi) = 4 k T m w_M / Q, N^2/Hz; white for viscous damping."""
    w = _require_positive(omega)
    level = 4.0 * env.kt * osc.effective_mass * osc.resonance_angular_frequency / osc.quality_factor
    return _restore(np.full(w.shape, level), omega)


def mix_quadratures(q, phi):
    """PSD of X1 cos(phi) - X2 sin(phi)."""
    c = np.cos(phi)
    s = np.sin(phi)
    return (np.asarray(q.amplitude_psd) * c * c
            + np.asarray(q.phase_psd) * s * s
            - 2.0 * c * s * np.real(q.cross_psd))


def homodyne_angle_from_offset_ratio(ratio):
    """Invert S_inf(V)/S_inf(0) = cos^2(phi); returns |phi| in [0, pi/2].

    The sign of phi cannot be recovered from the ratio alone.
    """
    r = float(ratio)
    if not np.isfinite(r) or r < 0 or r > 1 + RATIO_TOL:
        raise DomainError(f"offset ratio must lie in [0, 1], got {ratio!r}")
    return float(np.arccos(np.sqrt(min(r, 1.0))))


def angle_is_ambiguous(phi_abs):
    """True unless the quadrature is pure amplitude or pure phase."""
    return bool(0.0 < phi_abs < np.pi / 2)
