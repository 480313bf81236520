"""Pointwise numeric kernels.

Every kernel exists twice: a numba ``@njit`` loop and a vectorised numpy
version with the same signature.  The numba path is used when numba imports
and ``PONDEROMOTIVE_DISABLE_NUMBA`` is unset (or ``0``); otherwise the numpy
path is bound.  Both implementations are always importable as
``numba_kernels`` / ``numpy_kernels`` so tests and the benchmark can compare
them directly.
"""
import os
from types import SimpleNamespace

import numpy as np

# Order of the rows returned by ``source_contributions``.
SOURCE_ORDER = (
    "shot",
    "backaction",
    "thermal",
    "laser_amplitude",
    "laser_frequency",
    "wideband_displacement",
    "loss_vacuum",
    "bs_vacuum",
    "injected_classical",
)
N_SOURCES = len(SOURCE_ORDER)


# --------------------------------------------------------------------------
# numpy implementations
# --------------------------------------------------------------------------

def _np_susceptibility(omega, m, wm, q):
    return 1.0 / (m * (wm * wm - omega * omega - 1j * omega * wm / q))


def _np_thermal_displacement(omega, m, wm, q, kt):
    chi = _np_susceptibility(omega, m, wm, q)
    return 4.0 * kt / omega * chi.imag


def _np_coupling(omega, m, wm, q, s_ba, kappa, hbar):
    chi = _np_susceptibility(omega, m, wm, q)
    pole2 = 1.0 / (1.0 + (omega / kappa) ** 2)
    k = chi * (s_ba * pole2 / hbar)
    g2 = s_ba * pole2 / (hbar * hbar)
    return chi, k, g2


def _np_quadrature_moments(omega, m, wm, q, s_th, s_ba, kappa, hbar,
                           amp, s_xf, s_wb, eps, a_inj):
    chi, k, g2 = _np_coupling(omega, m, wm, q, s_ba, kappa, hbar)
    n = amp + a_inj
    phase_extra = g2 * (np.abs(chi) ** 2 * s_th + s_xf + s_wb)
    s11 = eps * n + (1.0 - eps)
    s22 = eps * (n * np.abs(k) ** 2 + 1.0 + phase_extra) + (1.0 - eps)
    s12 = eps * n * np.conj(k)
    return s11, s22, s12.real, s12.imag


def _np_source_contributions(omega, m, wm, q, s_th, s_ba, kappa, hbar,
                             amp, s_xf, s_wb, eps, eps_d, a_inj, phi):
    chi, k, g2 = _np_coupling(omega, m, wm, q, s_ba, kappa, hbar)
    c = np.cos(phi)
    s = np.sin(phi)
    mixed = np.abs(c - k * s) ** 2
    out = np.empty((N_SOURCES, omega.shape[0]))
    out[0] = eps * (c * c + s * s)
    out[1] = eps * amp * (mixed - c * c)
    out[2] = eps * s * s * g2 * np.abs(chi) ** 2 * s_th
    out[3] = eps * (amp - 1.0) * c * c
    out[4] = eps * s * s * g2 * s_xf
    out[5] = eps * s * s * g2 * s_wb
    out[6] = eps_d - eps
    out[7] = 1.0 - eps_d
    out[8] = eps * a_inj * mixed
    return out


def _np_thermal_fit_eval(omega, logy, weights, f_ref, lw_ref, u, log_q, log_m,
                         log_floor, kt):
    wm = 2.0 * np.pi * (f_ref + u * lw_ref)
    q = np.exp(log_q)
    m = np.exp(log_m)
    floor = np.exp(log_floor)
    detune = wm * wm - omega * omega
    damp = omega * wm / q
    d = detune * detune + damp * damp
    sth = 4.0 * kt * wm / (m * q * d)
    model = sth + floor
    resid = weights * (np.log(model) - logy)
    frac = sth / model
    dln_wm = 1.0 / wm - (4.0 * detune * wm + 2.0 * damp * omega / q) / d
    jac = np.empty((omega.shape[0], 4))
    jac[:, 0] = weights * frac * dln_wm * 2.0 * np.pi * lw_ref
    jac[:, 1] = weights * frac * (-1.0 + 2.0 * damp * damp / d)
    jac[:, 2] = -weights * frac
    jac[:, 3] = weights * floor / model
    return resid, jac


def _np_driven_fit_eval(omega, logmag, phase, weights, use_phase, f_ref, lw_ref,
                        u, log_q, log_m):
    wm = 2.0 * np.pi * (f_ref + u * lw_ref)
    q = np.exp(log_q)
    detune = wm * wm - omega * omega
    damp = omega * wm / q
    d = detune * detune + damp * damp
    # |chi| = 1 / (m sqrt(d)),  arg chi = atan2(damp, detune)
    r_mag = weights * (-log_m - 0.5 * np.log(d) - logmag)
    dd_dwm = 4.0 * detune * wm + 2.0 * damp * omega / q
    dd_dlq = -2.0 * damp * damp
    n = omega.shape[0]
    npts = 2 * n if use_phase else n
    resid = np.empty(npts)
    jac = np.zeros((npts, 3))
    resid[:n] = r_mag
    jac[:n, 0] = -weights * 0.5 * dd_dwm / d * 2.0 * np.pi * lw_ref
    jac[:n, 1] = -weights * 0.5 * dd_dlq / d
    jac[:n, 2] = -weights
    if use_phase:
        arg = np.arctan2(damp, detune)
        diff = np.angle(np.exp(1j * (arg - phase)))
        resid[n:] = weights * diff
        # d arg / d wm and d arg / d log q
        darg_dwm = (detune * omega / q - damp * 2.0 * wm) / d
        darg_dlq = -damp * detune / d
        jac[n:, 0] = weights * darg_dwm * 2.0 * np.pi * lw_ref
        jac[n:, 1] = weights * darg_dlq
    return resid, jac


numpy_kernels = SimpleNamespace(
    susceptibility=_np_susceptibility,
    thermal_displacement=_np_thermal_displacement,
    quadrature_moments=_np_quadrature_moments,
    source_contributions=_np_source_contributions,
    thermal_fit_eval=_np_thermal_fit_eval,
    driven_fit_eval=_np_driven_fit_eval,
    name="numpy",
)


# --------------------------------------------------------------------------
# numba implementations
# --------------------------------------------------------------------------

def _build_numba():
    from numba import njit

    @njit(cache=True)
    def susceptibility(omega, m, wm, q):
        out = np.empty(omega.shape[0], dtype=np.complex128)
        for i in range(omega.shape[0]):
            w = omega[i]
            out[i] = 1.0 / (m * complex(wm * wm - w * w, -w * wm / q))
        return out

    @njit(cache=True)
    def thermal_displacement(omega, m, wm, q, kt):
        out = np.empty(omega.shape[0])
        for i in range(omega.shape[0]):
            w = omega[i]
            chi = 1.0 / (m * complex(wm * wm - w * w, -w * wm / q))
            out[i] = 4.0 * kt / w * chi.imag
        return out

    @njit(cache=True)
    def quadrature_moments(omega, m, wm, q, s_th, s_ba, kappa, hbar,
                           amp, s_xf, s_wb, eps, a_inj):
        n_pts = omega.shape[0]
        s11 = np.empty(n_pts)
        s22 = np.empty(n_pts)
        s12r = np.empty(n_pts)
        s12i = np.empty(n_pts)
        for i in range(n_pts):
            w = omega[i]
            chi = 1.0 / (m * complex(wm * wm - w * w, -w * wm / q))
            pole2 = 1.0 / (1.0 + (w / kappa) ** 2)
            k = chi * (s_ba * pole2 / hbar)
            g2 = s_ba * pole2 / (hbar * hbar)
            n = amp + a_inj[i]
            chi2 = chi.real * chi.real + chi.imag * chi.imag
            k2 = k.real * k.real + k.imag * k.imag
            s11[i] = eps * n + (1.0 - eps)
            s22[i] = eps * (n * k2 + 1.0 + g2 * (chi2 * s_th + s_xf + s_wb)) + (1.0 - eps)
            s12r[i] = eps * n * k.real
            s12i[i] = -eps * n * k.imag
        return s11, s22, s12r, s12i

    @njit(cache=True)
    def source_contributions(omega, m, wm, q, s_th, s_ba, kappa, hbar,
                             amp, s_xf, s_wb, eps, eps_d, a_inj, phi):
        n_pts = omega.shape[0]
        out = np.empty((9, n_pts))
        c = np.cos(phi)
        s = np.sin(phi)
        loss_vac = eps_d - eps
        for i in range(n_pts):
            w = omega[i]
            chi = 1.0 / (m * complex(wm * wm - w * w, -w * wm / q))
            pole2 = 1.0 / (1.0 + (w / kappa) ** 2)
            k = chi * (s_ba * pole2 / hbar)
            g2 = s_ba * pole2 / (hbar * hbar)
            re = c - k.real * s
            im = k.imag * s
            mixed = re * re + im * im
            chi2 = chi.real * chi.real + chi.imag * chi.imag
            out[0, i] = eps * (c * c + s * s)
            out[1, i] = eps * amp * (mixed - c * c)
            out[2, i] = eps * s * s * g2 * chi2 * s_th
            out[3, i] = eps * (amp - 1.0) * c * c
            out[4, i] = eps * s * s * g2 * s_xf
            out[5, i] = eps * s * s * g2 * s_wb
            out[6, i] = loss_vac
            out[7, i] = 1.0 - eps_d
            out[8, i] = eps * a_inj[i] * mixed
        return out

    @njit(cache=True)
    def thermal_fit_eval(omega, logy, weights, f_ref, lw_ref, u, log_q, log_m,
                         log_floor, kt):
        n_pts = omega.shape[0]
        wm = 2.0 * np.pi * (f_ref + u * lw_ref)
        q = np.exp(log_q)
        m = np.exp(log_m)
        floor = np.exp(log_floor)
        resid = np.empty(n_pts)
        jac = np.empty((n_pts, 4))
        for i in range(n_pts):
            w = omega[i]
            detune = wm * wm - w * w
            damp = w * wm / q
            d = detune * detune + damp * damp
            sth = 4.0 * kt * wm / (m * q * d)
            model = sth + floor
            wt = weights[i]
            resid[i] = wt * (np.log(model) - logy[i])
            frac = sth / model
            dln_wm = 1.0 / wm - (4.0 * detune * wm + 2.0 * damp * w / q) / d
            jac[i, 0] = wt * frac * dln_wm * 2.0 * np.pi * lw_ref
            jac[i, 1] = wt * frac * (-1.0 + 2.0 * damp * damp / d)
            jac[i, 2] = -wt * frac
            jac[i, 3] = wt * floor / model
        return resid, jac

    @njit(cache=True)
    def driven_fit_eval(omega, logmag, phase, weights, use_phase, f_ref, lw_ref,
                        u, log_q, log_m):
        n = omega.shape[0]
        wm = 2.0 * np.pi * (f_ref + u * lw_ref)
        q = np.exp(log_q)
        npts = 2 * n if use_phase else n
        resid = np.empty(npts)
        jac = np.zeros((npts, 3))
        for i in range(n):
            w = omega[i]
            wt = weights[i]
            detune = wm * wm - w * w
            damp = w * wm / q
            d = detune * detune + damp * damp
            resid[i] = wt * (-log_m - 0.5 * np.log(d) - logmag[i])
            dd_dwm = 4.0 * detune * wm + 2.0 * damp * w / q
            jac[i, 0] = -wt * 0.5 * dd_dwm / d * 2.0 * np.pi * lw_ref
            jac[i, 1] = wt * damp * damp / d
            jac[i, 2] = -wt
            if use_phase:
                arg = np.arctan2(damp, detune)
                diff = arg - phase[i]
                diff = np.arctan2(np.sin(diff), np.cos(diff))
                resid[n + i] = wt * diff
                jac[n + i, 0] = wt * (detune * w / q - damp * 2.0 * wm) / d * 2.0 * np.pi * lw_ref
                jac[n + i, 1] = -wt * damp * detune / d
        return resid, jac

    return SimpleNamespace(
        susceptibility=susceptibility,
        thermal_displacement=thermal_displacement,
        quadrature_moments=quadrature_moments,
        source_contributions=source_contributions,
        thermal_fit_eval=thermal_fit_eval,
        driven_fit_eval=driven_fit_eval,
        name="numba",
    )


def _numba_disabled():
    return os.environ.get("PONDEROMOTIVE_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")


try:
    numba_kernels = _build_numba()
except ImportError:  # pragma: no cover - numba is optional
    numba_kernels = None

if numba_kernels is None or _numba_disabled():
    kernels = numpy_kernels
else:
    kernels = numba_kernels

BACKEND = kernels.name
