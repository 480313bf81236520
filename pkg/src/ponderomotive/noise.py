"""Homodyne quadrature noise of the reflected field.

Each noise source enters as an independent input whose contribution to the
detected quadratures is a fixed linear response.  PSDs are expressed in units
of the vacuum (shot-noise) level of the detected beam, one-sided.  The
resulting two-quadrature covariance is positive by construction and mixes
with ``core.mix_quadratures``.

Model summary (``w`` angular frequency, ``eps`` overall detection efficiency):

* amplitude input with PSD ``A + A_inj``: row ``(1, K)``, where
  ``K = chi * S_ba * |L|^2 / hbar`` and ``L`` is the cavity pole;
* phase vacuum: row ``(0, 1)``;
* displacement-like noises ``S_x`` (thermal, frequency, wideband): phase
  row with PSD ``G^2 S_x``, ``G^2 = S_ba |L|^2 / hbar^2``;
* cavity losses and detection losses: uncorrelated vacuum admixtures.
"""
from dataclasses import dataclass, field, replace
from typing import Dict, Optional

import numpy as np

from . import cavity as cav_mod
from ._kernels import N_SOURCES, SOURCE_ORDER, kernels
from .cavity import LaserDrive, OpticalCavity
from .core import (HBAR, MechanicalOscillator, NoiseEnvironment, QuadraturePair,
                   thermal_displacement_psd, thermal_force_psd)
from .errors import DomainError, ValidationError

SOURCES = SOURCE_ORDER
REFERENCE_MODES = ("vacuum", "classical")


@dataclass(frozen=True)
class DetectionChain:
    detection_loss: float = 0.0
    signal_to_lo_power_ratio: float = 0.01
    homodyne_angle: float = 0.0
    wideband_displacement_noise_psd: float = 0.0

    def __post_init__(self):
        if not 0 <= self.detection_loss < 1:
            raise ValidationError("detection_loss must lie in [0, 1)")
        if not self.signal_to_lo_power_ratio > 0:
            raise ValidationError("signal_to_lo_power_ratio must be > 0")
        if not -np.pi / 2 < self.homodyne_angle <= np.pi / 2:
            raise ValidationError("homodyne_angle must lie in (-pi/2, pi/2]")
        if not self.wideband_displacement_noise_psd >= 0:
            raise ValidationError("wideband_displacement_noise_psd must be >= 0")


@dataclass(frozen=True)
class Scenario:
    """Every parameter record needed to synthesise a spectrum.

    ``reference`` selects the 0 dB level for squeezing metrics: ``vacuum`` is
    the quantum shot-noise level; ``classical`` is the noise of the same
    quadrature with the optomechanical coupling removed (the role played by
    the amplitude noise in a classically driven experiment).
    ``frequency_noise_displacement_psd`` overrides the rigid-cavity
    conversion of laser frequency noise when given.
    """

    oscillator: MechanicalOscillator
    environment: NoiseEnvironment
    cavity: OpticalCavity
    laser: LaserDrive
    detection: DetectionChain = field(default_factory=DetectionChain)
    reference: str = "vacuum"
    frequency_noise_displacement_psd: Optional[float] = None

    def __post_init__(self):
        if self.reference not in REFERENCE_MODES:
            raise ValidationError(f"reference must be one of {REFERENCE_MODES}")
        if self.frequency_noise_displacement_psd is not None and self.frequency_noise_displacement_psd < 0:
            raise ValidationError("frequency_noise_displacement_psd must be >= 0")

    def replace(self, **changes):
        return replace(self, **changes)

    @property
    def derived(self):
        return cav_mod.derive_cavity(self.cavity, self.laser)

    @property
    def margin(self):
        return cav_mod.quantum_regime_margin(self.oscillator, self.environment, self.cavity, self.laser)

    @property
    def displacement_equivalent_frequency_noise(self):
        if self.frequency_noise_displacement_psd is not None:
            return self.frequency_noise_displacement_psd
        return cav_mod.frequency_noise_displacement_psd(self.cavity, self.laser)


@dataclass
class QuadratureSpectrum:
    frequency: np.ndarray
    phi: float
    per_source: Dict[str, np.ndarray]
    total: np.ndarray
    reference: np.ndarray
    reference_mode: str = "vacuum"

    def relative(self):
        return self.total / self.reference

    def relative_sources(self):
        return {name: arr / self.reference for name, arr in self.per_source.items()}


@dataclass(frozen=True)
class SqueezingReport:
    min_relative_psd_db: float
    at_frequency: float
    side: str
    max_relative_psd_db: float
    phi: float = 0.0

    def as_dict(self):
        return {
            "phi_rad": self.phi,
            "phi_deg": float(np.degrees(self.phi)),
            "min_relative_psd_db": self.min_relative_psd_db,
            "at_frequency_hz": self.at_frequency,
            "side": self.side,
            "max_relative_psd_db": self.max_relative_psd_db,
        }


def inject_classical_noise(env, osc):
    """Top-hat force PSD (N^2/Hz) of the configured intensity-noise injection.

    Returns a function of frequency in Hz.  The level is the thermal force
    PSD raised by the configured number of dB inside the band.
    """
    inj = env.classical_injection
    if inj is None:
        raise ValidationError("no classical injection configured")
    lo = inj.center_frequency - inj.bandwidth / 2
    hi = inj.center_frequency + inj.bandwidth / 2
    if not lo <= osc.resonance_hz <= hi:
        raise ValidationError(
            f"injection band [{lo:.1f}, {hi:.1f}] Hz does not cover the resonance at {osc.resonance_hz:.1f} Hz")
    level = thermal_force_psd(osc, env, osc.resonance_angular_frequency) * 10 ** (inj.force_psd_over_thermal / 10)

    def force_psd(f_hz):
        f = np.asarray(f_hz, dtype=float)
        return np.where((f >= lo) & (f <= hi), level, 0.0)

    return force_psd


def _check_grid(frequency):
    f = np.ascontiguousarray(np.asarray(frequency, dtype=float))
    if f.ndim != 1 or f.size == 0:
        raise DomainError("frequency grid must be a non-empty 1-D array")
    if not np.all(np.isfinite(f)) or np.any(f <= 0):
        raise DomainError("frequency grid must be finite and positive")
    if np.any(np.diff(f) <= 0):
        raise DomainError("frequency grid must be strictly increasing")
    return f


def _kernel_args(scn, omega):
    osc = scn.oscillator
    s_ba = cav_mod.backaction_force_psd(scn.cavity, scn.laser)
    kappa = scn.derived.half_linewidth_angular
    s_th = thermal_force_psd(osc, scn.environment, osc.resonance_angular_frequency)
    eps_d = (1 - scn.detection.detection_loss) * scn.cavity.mode_matching
    eps = scn.derived.coupling_ratio * eps_d
    if scn.environment.classical_injection is not None:
        # injected amplitude noise in vacuum units, so that the intracavity
        # force PSD equals the configured top-hat exactly
        pole2 = 1.0 / (1.0 + (omega / kappa) ** 2)
        a_inj = inject_classical_noise(scn.environment, osc)(omega / (2 * np.pi)) / (s_ba * pole2)
    else:
        a_inj = np.zeros_like(omega)
    return dict(
        omega=np.ascontiguousarray(omega), m=osc.effective_mass, wm=osc.resonance_angular_frequency,
        q=osc.quality_factor, s_th=s_th, s_ba=s_ba, kappa=kappa, hbar=HBAR,
        amp=scn.laser.amplitude_noise_factor,
        s_xf=scn.displacement_equivalent_frequency_noise,
        s_wb=scn.detection.wideband_displacement_noise_psd,
        eps=eps, eps_d=eps_d, a_inj=np.ascontiguousarray(a_inj, dtype=float),
    )


def _moments(args):
    moment_args = dict(args)
    moment_args.pop("eps_d")
    return kernels.quadrature_moments(**moment_args)


def build_quadrature_pair(scn, omega):
    """Detected amplitude/phase covariance at angular frequencies ``omega``."""
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(~(w > 0)) or not np.all(np.isfinite(w)):
        raise DomainError("omega must be finite and > 0")
    s11, s22, s12r, s12i = _moments(_kernel_args(scn, w))
    s12 = s12r + 1j * s12i
    if np.ndim(omega) == 0:
        return QuadraturePair(s11[0], s22[0], s12[0])
    return QuadraturePair(s11, s22, s12)


def _reference_level(args, phi, mode):
    if mode == "vacuum":
        return np.ones_like(args["omega"])
    c2 = np.cos(phi) ** 2
    s2 = np.sin(phi) ** 2
    eps = args["eps"]
    return eps * ((args["amp"] + args["a_inj"]) * c2 + s2) + (1 - eps)


def synthesize_spectrum(scn, frequency, phi=None):
    """Per-source and total quadrature PSD at homodyne angle ``phi`` (rad)."""
    f = _check_grid(frequency)
    if phi is None:
        phi = scn.detection.homodyne_angle
    args = _kernel_args(scn, 2 * np.pi * f)
    contrib = kernels.source_contributions(phi=float(phi), **args)
    s11, s22, s12r, s12i = _moments(args)
    c, s = np.cos(phi), np.sin(phi)
    total = s11 * c * c + s22 * s * s - 2 * c * s * s12r
    per_source = {name: np.asarray(contrib[i]) for i, name in enumerate(SOURCES)}
    return QuadratureSpectrum(
        frequency=f,
        phi=float(phi),
        per_source=per_source,
        total=total,
        reference=_reference_level(args, phi, scn.reference),
        reference_mode=scn.reference,
    )


def squeezing_metrics(spec, f_m):
    f = spec.frequency
    if f[0] > f_m / 2 or f[-1] < 2 * f_m:
        raise DomainError(f"grid [{f[0]:.1f}, {f[-1]:.1f}] Hz must cover [f_M/2, 2 f_M] = "
                          f"[{f_m / 2:.1f}, {2 * f_m:.1f}] Hz")
    rel_db = 10 * np.log10(spec.relative())
    i = int(np.argmin(rel_db))
    return SqueezingReport(
        min_relative_psd_db=float(rel_db[i]),
        at_frequency=float(f[i]),
        side="below_resonance" if f[i] < f_m else "above_resonance",
        max_relative_psd_db=float(np.max(rel_db)),
        phi=spec.phi,
    )


def displacement_spectrum(scn, frequency):
    """Displacement PSD seen by the PDH channel, m^2/Hz.

    Thermal motion, motion driven by radiation pressure (quantum and injected)
    and the wideband floor.
    """
    f = _check_grid(frequency)
    osc, env = scn.oscillator, scn.environment
    omega = 2 * np.pi * f
    chi2 = 1.0 / (osc.effective_mass ** 2 * ((osc.resonance_angular_frequency ** 2 - omega ** 2) ** 2
                                             + (omega * osc.resonance_angular_frequency / osc.quality_factor) ** 2))
    pole2 = 1.0 / (1.0 + (omega / scn.derived.half_linewidth_angular) ** 2)
    force = cav_mod.backaction_force_psd(scn.cavity, scn.laser, include_excess=True) * pole2
    if env.classical_injection is not None:
        force = force + inject_classical_noise(env, osc)(f)
    return (thermal_displacement_psd(osc, env, omega) + chi2 * force
            + scn.detection.wideband_displacement_noise_psd)


def frequency_grid(f_m, q, f_min=None, f_max=None, log_points=2000,
                   refine_linewidths=20.0, refine_points=401, window_hz=0.0, window_points=0):
    """Log grid plus linear refinement around the resonance.

    The refinement spans +-``refine_linewidths`` mechanical linewidths with
    ``refine_points`` samples; an optional extra linear window of half-width
    ``window_hz`` resolves features further from the peak.
    """
    f_min = f_m / 4 if f_min is None else f_min
    f_max = 4 * f_m if f_max is None else f_max
    if not 0 < f_min < f_m < f_max:
        raise ValidationError("grid must satisfy 0 < f_min < f_M < f_max")
    parts = [np.geomspace(f_min, f_max, int(log_points))]
    lw = f_m / q
    half = refine_linewidths * lw
    parts.append(np.linspace(max(f_min, f_m - half), min(f_max, f_m + half), int(refine_points)))
    if window_hz > 0 and window_points > 0:
        parts.append(np.linspace(max(f_min, f_m - window_hz), min(f_max, f_m + window_hz), int(window_points)))
    grid = np.unique(np.concatenate(parts))
    # drop near-duplicates that would break strict monotonicity after rounding
    keep = np.concatenate([[True], np.diff(grid) > grid[1:] * 1e-14])
    return grid[keep]


def optimal_angle(scn, frequency, phis):
    """Angle among ``phis`` (refined locally) giving the deepest minimum."""
    from scipy.optimize import minimize_scalar

    f_m = scn.oscillator.resonance_hz

    def depth(phi):
        return squeezing_metrics(synthesize_spectrum(scn, frequency, phi), f_m).min_relative_psd_db

    phis = np.asarray(phis, dtype=float)
    depths = np.array([depth(p) for p in phis])
    i = int(np.argmin(depths))
    lo = phis[max(i - 1, 0)]
    hi = phis[min(i + 1, len(phis) - 1)]
    best_phi, best = phis[i], depths[i]
    if hi > lo:
        res = minimize_scalar(depth, bounds=(lo, hi), method="bounded", options={"xatol": 1e-4})
        if res.fun < best:
            best_phi, best = float(res.x), float(res.fun)
    return best_phi, squeezing_metrics(synthesize_spectrum(scn, frequency, best_phi), f_m)


def budget_at_minimum(spec):
    """Per-source values (relative to the reference) at the argmin of the total."""
    i = int(np.argmin(spec.relative()))
    rel = spec.relative_sources()
    row = {name: float(rel[name][i]) for name in SOURCES}
    row["total"] = float(spec.relative()[i])
    row["frequency_hz"] = float(spec.frequency[i])
    return row


__all__ = [
    "SOURCES", "DetectionChain", "Scenario", "QuadratureSpectrum", "SqueezingReport",
    "inject_classical_noise", "build_quadrature_pair", "synthesize_spectrum",
    "squeezing_metrics", "displacement_spectrum", "frequency_grid", "optimal_angle",
    "budget_at_minimum", "N_SOURCES",
]
