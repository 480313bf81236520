"""Parameter extraction from measured spectra.

Thermal-spectrum fits work on log-PSD residuals with a damped Gauss-Newton
(Levenberg-Marquardt) iteration.  Parameters are internally
``(u, ln Q, ln m, ln floor)`` where the resonance is ``f_ref + u * lw_ref``
around the initial guess; this keeps the normal equations well scaled for
quality factors up to 1e6.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ._kernels import kernels
from .core import (K_B, MechanicalOscillator, angle_is_ambiguous,
                   homodyne_angle_from_offset_ratio, susceptibility,
                   thermal_displacement_psd)
from .errors import DegenerateDataError, DomainError, ValidationError

log = logging.getLogger(__name__)

MAX_ITER = 200
XTOL = 1e-10
FTOL = 1e-12


@dataclass
class MeasuredSpectrum:
    frequency: np.ndarray
    psd: np.ndarray
    weight: Optional[np.ndarray] = None

    def __post_init__(self):
        self.frequency = np.ascontiguousarray(self.frequency, dtype=float)
        self.psd = np.ascontiguousarray(self.psd, dtype=float)
        if self.frequency.ndim != 1 or self.frequency.shape != self.psd.shape:
            raise ValidationError("frequency and psd must be 1-D arrays of equal length")
        if self.frequency.size < 8:
            raise ValidationError("at least 8 spectral bins are required")
        if np.any(np.diff(self.frequency) <= 0):
            raise ValidationError("frequency must be strictly increasing")
        if np.any(self.frequency <= 0):
            raise ValidationError("frequency must be positive")
        if not np.all(np.isfinite(self.psd)) or np.any(self.psd <= 0):
            raise ValidationError("psd must be finite and positive")
        if self.weight is not None:
            self.weight = np.ascontiguousarray(self.weight, dtype=float)
            if self.weight.shape != self.psd.shape or np.any(self.weight < 0):
                raise ValidationError("weight must match psd and be non-negative")


@dataclass
class FitResult:
    parameters: Dict[str, Optional[float]]
    std_errors: Dict[str, Optional[float]]
    residual_norm: float
    converged: bool
    iterations: int
    message: str = ""
    mode: str = "thermal"

    @property
    def oscillator(self):
        p = self.parameters
        return MechanicalOscillator.from_frequency(p["m"], p["f_M"], p["Q"])

    def as_dict(self):
        return {
            "mode": self.mode,
            "parameters": dict(self.parameters),
            "std_errors": dict(self.std_errors),
            "residual_norm": self.residual_norm,
            "converged": self.converged,
            "iterations": self.iterations,
            "message": self.message,
        }


@dataclass
class LMResult:
    x: np.ndarray
    residual: np.ndarray
    jacobian: np.ndarray
    cost: float
    iterations: int
    converged: bool
    message: str
    costs: List[float] = field(default_factory=list)


def levenberg_marquardt(fun, x0, max_iter=MAX_ITER, xtol=XTOL, ftol=FTOL, damping=1e-3):
    """Minimise 0.5 |r(x)|^2 given ``fun(x) -> (r, J)``.

    Marquardt's diagonal scaling; a step is accepted only if it lowers the
    cost, so the recorded cost sequence is monotone.
    """
    x = np.array(x0, dtype=float)
    r, jac = fun(x)
    cost = 0.5 * float(r @ r)
    costs = [cost]
    lam = damping
    for it in range(1, max_iter + 1):
        a = jac.T @ jac
        g = jac.T @ r
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(g)):
            return LMResult(x, r, jac, cost, it - 1, False, "non-finite Jacobian", costs)
        diag = np.maximum(np.diag(a), 1e-300)
        while True:
            try:
                step = np.linalg.solve(a + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(a + lam * np.diag(diag), -g, rcond=None)[0]
            x_new = x + step
            r_new, jac_new = fun(x_new)
            cost_new = 0.5 * float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                break
            lam *= 10.0
            if lam > 1e16:
                return LMResult(x, r, jac, cost, it, cost == 0.0 or _small_gradient(g, cost),
                                "damping exhausted", costs)
        decrease = cost - cost_new
        x, r, jac, cost = x_new, r_new, jac_new, cost_new
        costs.append(cost)
        lam = max(lam / 10.0, 1e-15)
        if np.linalg.norm(step) <= xtol * (np.linalg.norm(x) + xtol):
            return LMResult(x, r, jac, cost, it, True, "relative step below tolerance", costs)
        if cost == 0.0 or decrease <= ftol * (cost + decrease):
            return LMResult(x, r, jac, cost, it, True, "relative cost decrease below tolerance", costs)
    return LMResult(x, r, jac, cost, max_iter, False, "maximum iterations reached", costs)


def _small_gradient(g, cost):
    return float(np.max(np.abs(g))) <= 1e-12 * max(cost, 1e-300) ** 0.5


def _covariance(lm, n_params):
    n = lm.residual.size
    dof = max(n - n_params, 1)
    s2 = 2.0 * lm.cost / dof
    try:
        cov = np.linalg.inv(lm.jacobian.T @ lm.jacobian) * s2
    except np.linalg.LinAlgError:
        cov = np.full((n_params, n_params), np.nan)
    return cov


def _half_power_width(f, y, i_peak, base):
    """Full width where ``y - base`` falls to half its peak value."""
    half = base + 0.5 * (y[i_peak] - base)
    left = i_peak
    while left > 0 and y[left] > half:
        left -= 1
    right = i_peak
    while right < len(y) - 1 and y[right] > half:
        right += 1

    def cross(i0, i1):
        y0, y1 = y[i0], y[i1]
        if y1 == y0:
            return f[i0]
        return f[i0] + (half - y0) * (f[i1] - f[i0]) / (y1 - y0)

    f_left = cross(left, left + 1) if left < i_peak else f[i_peak]
    f_right = cross(right - 1, right) if right > i_peak else f[i_peak]
    width = f_right - f_left
    if width <= 0:
        spacing = np.diff(f)
        width = spacing[min(i_peak, len(spacing) - 1)]
    return width


def initial_thermal_guess(data, bath_temperature):
    """Resonance from the argmax bin, Q from the half-power width, m from the peak."""
    f, y = data.frequency, data.psd
    floor = float(np.percentile(y, 10))
    i = int(np.argmax(y))
    if y[i] < 2.0 * floor:
        raise DegenerateDataError("no peak at least 3 dB above the floor")
    f_m = f[i]
    width = _half_power_width(f, y, i, floor)
    q = max(f_m / width, 1.0)
    wm = 2 * np.pi * f_m
    m = 4 * K_B * bath_temperature * q / ((y[i] - floor) * wm ** 3)
    return {"f_M": f_m, "Q": q, "m": m, "floor": floor}


def fit_thermal_spectrum(data, bath_temperature, initial_guess=None, max_iter=MAX_ITER,
                         xtol=XTOL, ftol=FTOL):
    """Fit S_x^th(f; f_M, Q, m) + floor to a displacement PSD in log space."""
    if not bath_temperature > 0:
        raise ValidationError("bath_temperature must be > 0")
    auto = initial_thermal_guess(data, bath_temperature)
    guess = dict(auto)
    if initial_guess:
        guess.update({k: v for k, v in initial_guess.items() if v is not None})
    f_ref = float(guess["f_M"])
    lw_ref = f_ref / float(guess["Q"])
    f = data.frequency
    if f[0] > f_ref - 10 * lw_ref or f[-1] < f_ref + 10 * lw_ref:
        raise DegenerateDataError("data must span at least +-10 linewidths around the peak")

    omega = np.ascontiguousarray(2 * np.pi * f)
    logy = np.ascontiguousarray(np.log(data.psd))
    weights = np.ones_like(f) if data.weight is None else np.sqrt(data.weight)
    weights = np.ascontiguousarray(weights)
    kt = K_B * bath_temperature

    def fun(x):
        return kernels.thermal_fit_eval(omega, logy, weights, f_ref, lw_ref,
                                        x[0], x[1], x[2], x[3], kt)

    x0 = np.array([0.0, np.log(guess["Q"]), np.log(guess["m"]), np.log(guess["floor"])])
    lm = levenberg_marquardt(fun, x0, max_iter=max_iter, xtol=xtol, ftol=ftol)
    u, log_q, log_m, log_floor = lm.x
    params = {
        "f_M": float(f_ref + u * lw_ref),
        "Q": float(np.exp(log_q)),
        "m": float(np.exp(log_m)),
        "floor": float(np.exp(log_floor)),
    }
    cov = _covariance(lm, 4)
    sd = np.sqrt(np.abs(np.diag(cov)))
    errors = {
        "f_M": float(sd[0] * lw_ref),
        "Q": float(sd[1] * params["Q"]),
        "m": float(sd[2] * params["m"]),
        "floor": float(sd[3] * params["floor"]),
    }
    if not lm.converged:
        log.warning("thermal fit did not converge: %s", lm.message)
    return FitResult(params, errors, float(np.linalg.norm(lm.residual)), lm.converged,
                     lm.iterations, lm.message, mode="thermal")


def initial_driven_guess(frequency, magnitude, force_calibration):
    chi_abs = magnitude / force_calibration
    i = int(np.argmax(chi_abs))
    power = chi_abs ** 2
    base = float(np.min(power))
    if power[i] < 2.0 * base:
        raise DegenerateDataError("no resonance in the driven response")
    width = _half_power_width(frequency, power, i, 0.0)
    f_m = frequency[i]
    q = max(f_m / width, 1.0)
    m = q / (chi_abs[i] * (2 * np.pi * f_m) ** 2)
    return {"f_M": f_m, "Q": q, "m": m}


def fit_driven_response(frequency, magnitude, force_calibration, phase=None, weight=None,
                        initial_guess=None, max_iter=MAX_ITER, xtol=XTOL, ftol=FTOL):
    """Fit |chi| (and arg chi when ``phase`` is given) to a driven transfer function.

    ``magnitude`` is displacement per modulation unit; ``force_calibration``
    converts modulation units to newtons, so chi = magnitude / calibration.
    """
    if not force_calibration > 0:
        raise ValidationError("force_calibration must be > 0")
    spec = MeasuredSpectrum(frequency, magnitude, weight)
    f = spec.frequency
    guess = initial_driven_guess(f, spec.psd, force_calibration)
    if initial_guess:
        guess.update({k: v for k, v in initial_guess.items() if v is not None})
    f_ref = float(guess["f_M"])
    lw_ref = f_ref / float(guess["Q"])
    omega = np.ascontiguousarray(2 * np.pi * f)
    logmag = np.ascontiguousarray(np.log(spec.psd / force_calibration))
    use_phase = phase is not None
    ph = np.ascontiguousarray(phase if use_phase else np.zeros_like(f), dtype=float)
    weights = np.ascontiguousarray(np.ones_like(f) if spec.weight is None else np.sqrt(spec.weight))

    def fun(x):
        return kernels.driven_fit_eval(omega, logmag, ph, weights, use_phase, f_ref, lw_ref,
                                       x[0], x[1], x[2])

    x0 = np.array([0.0, np.log(guess["Q"]), np.log(guess["m"])])
    lm = levenberg_marquardt(fun, x0, max_iter=max_iter, xtol=xtol, ftol=ftol)
    u, log_q, log_m = lm.x
    params = {"f_M": float(f_ref + u * lw_ref), "Q": float(np.exp(log_q)),
              "m": float(np.exp(log_m)), "floor": None}
    sd = np.sqrt(np.abs(np.diag(_covariance(lm, 3))))
    errors = {"f_M": float(sd[0] * lw_ref), "Q": float(sd[1] * params["Q"]),
              "m": float(sd[2] * params["m"]), "floor": None}
    return FitResult(params, errors, float(np.linalg.norm(lm.residual)), lm.converged,
                     lm.iterations, lm.message, mode="driven")


@dataclass(frozen=True)
class AngleCalibration:
    offset: float
    phi_abs: float
    ambiguous: bool

    @property
    def phi_signed(self):
        """|phi| carrying the sign of the applied offset."""
        return float(np.copysign(self.phi_abs, self.offset)) if self.offset else self.phi_abs


def calibrate_homodyne_angle(offset_sweep):
    """Homodyne angle per offset from far-off-resonance noise levels.

    ``offset_sweep`` is a sequence of ``(V_off, S_inf)`` pairs that must
    include ``V_off = 0``.
    """
    sweep = [(float(v), float(s)) for v, s in offset_sweep]
    refs = [s for v, s in sweep if v == 0.0]
    if not refs:
        raise ValidationError("offset sweep has no zero-offset reference")
    if any(not s > 0 for _, s in sweep):
        raise ValidationError("all S_inf values must be positive")
    ref = refs[0]
    out = []
    for v, s in sweep:
        ratio = s / ref
        try:
            phi = homodyne_angle_from_offset_ratio(ratio)
        except DomainError as exc:
            raise DomainError(f"offset {v}: ratio {ratio:.6g} > 1; excess noise at the zero-offset reference?") from exc
        out.append(AngleCalibration(v, phi, angle_is_ambiguous(phi)))
    return out


def synthetic_thermal_spectrum(osc, env, frequency, floor=0.0, noise=0.0, rng=None):
    """Thermal PSD plus floor with optional log-normal multiplicative noise."""
    f = np.asarray(frequency, dtype=float)
    psd = thermal_displacement_psd(osc, env, 2 * np.pi * f) + floor
    if noise > 0:
        rng = np.random.default_rng() if rng is None else rng
        psd = psd * np.exp(noise * rng.standard_normal(f.shape))
    return MeasuredSpectrum(f, psd)


def synthetic_driven_response(osc, frequency, force_calibration, noise=0.0, rng=None):
    """Magnitude and phase of x/u for a drive of ``force_calibration`` N per unit."""
    f = np.asarray(frequency, dtype=float)
    h = force_calibration * susceptibility(osc, 2 * np.pi * f)
    mag = np.abs(h)
    if noise > 0:
        rng = np.random.default_rng() if rng is None else rng
        mag = mag * np.exp(noise * rng.standard_normal(f.shape))
    return mag, np.angle(h)


def fit_grid(f_m, q, span_linewidths=30.0, n_linear=601, n_log=200, wing=3.0):
    """Frequency grid for peak fits: dense around the line, sparse log wings."""
    lw = f_m / q
    lo, hi = f_m / wing, f_m * wing
    lin = np.linspace(max(lo, f_m - span_linewidths * lw), min(hi, f_m + span_linewidths * lw), n_linear)
    wings = np.geomspace(lo, hi, n_log)
    grid = np.unique(np.concatenate([lin, wings]))
    keep = np.concatenate([[True], np.diff(grid) > grid[1:] * 1e-14])
    return grid[keep]
