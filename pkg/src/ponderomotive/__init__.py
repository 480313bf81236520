"""Suspended-mirror cavity optomechanics: quadrature noise synthesis and fits."""
from ._kernels import BACKEND
from .cavity import (CavityDerived, LaserDrive, OpticalCavity, backaction_force_psd,
                     cavity_pole_filter, derive_cavity, displacement_to_phase_gain,
                     quantum_regime_margin)
from .core import (ClassicalInjection, MechanicalOscillator, NoiseEnvironment, QuadraturePair,
                   homodyne_angle_from_offset_ratio, mix_quadratures, susceptibility,
                   thermal_displacement_psd, thermal_force_psd)
from .estimation import (FitResult, MeasuredSpectrum, calibrate_homodyne_angle,
                         fit_driven_response, fit_thermal_spectrum)
from .noise import (SOURCES, DetectionChain, QuadratureSpectrum, Scenario, SqueezingReport,
                    build_quadrature_pair, displacement_spectrum, inject_classical_noise,
                    squeezing_metrics, synthesize_spectrum)

__version__ = "0.1.0"
