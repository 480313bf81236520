"""Fabry-Perot figures of merit and the optical transduction chain.

High-finesse, on-resonance relations only.  Powers and transmissivities are
power quantities; PSDs are one-sided.
"""
from dataclasses import dataclass

import numpy as np

from .core import C_LIGHT, HBAR
from .errors import ValidationError

HIGH_FINESSE_LIMIT = 0.01


@dataclass(frozen=True)
class OpticalCavity:
    length: float
    input_transmissivity: float
    roundtrip_excess_loss: float
    mode_matching: float = 1.0

    def __post_init__(self):
        if not self.length > 0:
            raise ValidationError(f"length must be > 0, got {self.length!r}")
        if not 0 < self.input_transmissivity < 1:
            raise ValidationError("input_transmissivity must lie in (0, 1)")
        if not self.roundtrip_excess_loss >= 0:
            raise ValidationError("roundtrip_excess_loss must be >= 0")
        if not self.input_transmissivity + self.roundtrip_excess_loss < HIGH_FINESSE_LIMIT:
            raise ValidationError("input_transmissivity + roundtrip_excess_loss must be < 0.01")
        if not 0 < self.mode_matching <= 1:
            raise ValidationError("mode_matching must lie in (0, 1]")

    @property
    def total_loss(self):
        return self.input_transmissivity + self.roundtrip_excess_loss


@dataclass(frozen=True)
class LaserDrive:
    wavelength: float
    input_power: float
    amplitude_noise_factor: float = 1.0
    frequency_noise_psd: float = 0.0  # Hz^2/Hz

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValidationError("wavelength must be > 0")
        if not self.input_power > 0:
            raise ValidationError("input_power must be > 0")
        if not self.amplitude_noise_factor >= 1:
            raise ValidationError("amplitude_noise_factor must be >= 1 (input cannot be sub-shot)")
        if not self.frequency_noise_psd >= 0:
            raise ValidationError("frequency_noise_psd must be >= 0")

    @property
    def optical_frequency(self):
        return C_LIGHT / self.wavelength

    @property
    def angular_frequency(self):
        return 2 * np.pi * C_LIGHT / self.wavelength


@dataclass(frozen=True)
class CavityDerived:
    free_spectral_range: float
    finesse: float
    linewidth_fwhm: float
    half_linewidth_angular: float
    coupling_ratio: float
    reflection_dip: float
    circulating_power: float


def derive_cavity(cav, laser):
    finesse = 2 * np.pi / cav.total_loss
    fsr = C_LIGHT / (2 * cav.length)
    fwhm = fsr / finesse
    eta = cav.input_transmissivity / cav.total_loss
    return CavityDerived(
        free_spectral_range=fsr,
        finesse=finesse,
        linewidth_fwhm=fwhm,
        half_linewidth_angular=np.pi * fwhm,
        coupling_ratio=eta,
        reflection_dip=cav.mode_matching * 4 * eta * (1 - eta),
        circulating_power=laser.input_power * cav.mode_matching * eta * 2 * finesse / np.pi,
    )


def excess_loss_for_finesse(finesse, input_transmissivity):
    """Round-trip loss besides the input coupler that yields ``finesse``."""
    return 2 * np.pi / finesse - input_transmissivity


def mode_matching_for_dip(dip, input_transmissivity, roundtrip_excess_loss):
    """Mode-matching efficiency reproducing a measured reflection dip."""
    eta = input_transmissivity / (input_transmissivity + roundtrip_excess_loss)
    ideal = 4 * eta * (1 - eta)
    mm = dip / ideal
    if not 0 < mm <= 1:
        raise ValidationError(f"a {dip:.3f} dip is unreachable (ideal dip {ideal:.3f})")
    return mm


def feasibility_lhs(cav, laser):
    """hbar w_L P_in (4/c^2) T^2 (F/pi)^4, with P_in weighted by mode matching."""
    finesse = 2 * np.pi / cav.total_loss
    return (HBAR * laser.angular_frequency * laser.input_power * cav.mode_matching
            * 4 / C_LIGHT ** 2 * cav.input_transmissivity ** 2 * (finesse / np.pi) ** 4)


def feasibility_rhs(osc, env):
    """2 k T m w_M / Q."""
    return 2 * env.kt * osc.effective_mass * osc.resonance_angular_frequency / osc.quality_factor


def backaction_force_psd(cav, laser, include_excess=False):
    """One-sided radiation-pressure force PSD below the cavity pole, N^2/Hz.

    Equals twice ``feasibility_lhs``: the one-sided power shot noise is
    2 hbar w_L P.  With ``include_excess`` the laser amplitude-noise factor
    multiplies the result.
    """
    psd = 2 * feasibility_lhs(cav, laser)
    if include_excess:
        psd *= laser.amplitude_noise_factor
    return psd


def cavity_pole_filter(omega, kappa):
    if not kappa > 0:
        raise ValidationError("kappa must be > 0")
    return 1.0 / (1.0 + 1j * np.asarray(omega, dtype=float) / kappa)


def displacement_to_phase_gain(derived, laser):
    """Reflected-phase slope on resonance, 8 F eta / lambda (rad/m)."""
    return 8 * derived.finesse * derived.coupling_ratio / laser.wavelength


def shot_phase_psd(cav, laser):
    """One-sided shot-noise phase PSD of the mode-matched input beam, rad^2/Hz."""
    return HBAR * laser.angular_frequency / (2 * laser.input_power * cav.mode_matching)


def chained_backaction_psd(cav, laser):
    """Back-action PSD rebuilt from the readout chain, hbar^2 G^2 / S_phi.

    Imprecision-backaction product of an ideal readout: equal to
    ``backaction_force_psd`` when the gain normalisation is right.
    """
    derived = derive_cavity(cav, laser)
    gain = displacement_to_phase_gain(derived, laser)
    return HBAR ** 2 * gain ** 2 / shot_phase_psd(cav, laser)


def frequency_noise_displacement_psd(cav, laser):
    """Rigid-cavity equivalent displacement PSD, (L / nu_L)^2 S_nu."""
    return (cav.length / laser.optical_frequency) ** 2 * laser.frequency_noise_psd


def quantum_regime_margin(osc, env, cav, laser):
    return feasibility_lhs(cav, laser) / feasibility_rhs(osc, env)

