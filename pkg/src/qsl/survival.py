"""Survival amplitude S(t) = <psi(0)|psi(t)> and its first zero."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .state_model import SpectralState, moments


def survival_amplitude(s: SpectralState, t):
    """Return S(t) = sum_n p_n exp(-2 pi i E_n t / h).

    ``t`` may be a scalar or an array; the result has the same shape.
    """
    t_arr = np.asarray(t, dtype=float)
    phase = np.exp(-2j * np.pi * np.multiply.outer(t_arr, s.energies) / s.h)
    out = phase @ s.probs
    return complex(out) if out.ndim == 0 else out


def _amplitude_derivative(s: SpectralState, t):
    t_arr = np.asarray(t, dtype=float)
    phase = np.exp(-2j * np.pi * np.multiply.outer(t_arr, s.energies) / s.h)
    return (-2j * np.pi / s.h) * (phase @ (s.probs * s.energies))


def survival_probability(s: SpectralState, t):
    return np.abs(survival_amplitude(s, t)) ** 2


def survival_prob_derivative(s: SpectralState, t):
    """d|S|^2/dt = 2 Re(conj(S) S'), evaluated analytically."""
    S = survival_amplitude(s, t)
    dS = _amplitude_derivative(s, t)
    out = 2.0 * np.real(np.conj(S) * dS)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ZeroFinderConfig:
    tolerance: float = 1e-9
    oversample: int = 64
    horizon_factor: float = 8.0
    refine_tolerance: float = 1e-13
    horizon: float | None = None  # absolute override of horizon_factor

    def __post_init__(self):
        for name in ("tolerance", "horizon_factor", "refine_tolerance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if int(self.oversample) != self.oversample or self.oversample < 8:
            raise ValueError("oversample must be an integer >= 8")
        if self.horizon is not None and not self.horizon > 0:
            raise ValueError("horizon must be positive")


@dataclass(frozen=True)
class OrthoResult:
    found: bool
    tau: float | None
    min_overlap: float
    argmin_time: float
    horizon: float
    tolerance: float

    @property
    def status(self) -> str:
        return "found" if self.found else "not-found-within-horizon"

    def to_dict(self) -> dict:
        return {"status": self.status, "tau": self.tau, "min_overlap": self.min_overlap,
                "argmin_time": self.argmin_time, "horizon": self.horizon,
                "tolerance": self.tolerance}


def _refine(s: SpectralState, lo: float, hi: float, xtol: float) -> float:
    dlo = survival_prob_derivative(s, lo)
    dhi = survival_prob_derivative(s, hi)
    if dlo < 0 < dhi:
        return brentq(lambda t: survival_prob_derivative(s, t), lo, hi, xtol=xtol, rtol=1e-15)
    res = minimize_scalar(lambda t: survival_probability(s, t), bounds=(lo, hi),
                          method="bounded", options={"xatol": xtol})
    return float(res.x)


def first_orthogonal_time(s: SpectralState, cfg: ZeroFinderConfig | None = None) -> OrthoResult:
    """Locate the earliest t with |S(t)| <= cfg.tolerance.

    |S|^2 is scanned on a uniform grid starting at h/(2 E_max), below which no
    zero can exist; grid local minima are polished by root-finding on
    d|S|^2/dt. The grid step is (h/E_max)/oversample, so a zero hidden
    between samples needs structure finer than the fastest phase period.
    """
    cfg = cfg or ZeroFinderConfig()
    if len(s) < 2:
        return OrthoResult(False, None, 1.0, 0.0, 0.0, cfg.tolerance)
    m = moments(s)
    h, e_max = s.h, m.e_max
    tau_unified = max(h / (4 * m.dE), h / (4 * m.E))
    horizon = cfg.horizon if cfg.horizon is not None else cfg.horizon_factor * tau_unified
    step = (h / e_max) / cfg.oversample
    t_lo = h / (2 * e_max)
    if horizon < t_lo:
        # no zero can occur this early; just report the smallest overlap seen
        t_lo = 0.0
    t = t_lo + step * np.arange(int(math.floor((horizon - t_lo) / step)) + 1)
    # chunked so long horizons on wide spectra stay within memory
    chunks = [survival_probability(s, t[i:i + 65536]) for i in range(0, t.size, 65536)]
    f = np.concatenate(chunks)

    is_min = np.zeros(f.size, dtype=bool)
    if f.size == 1:
        is_min[0] = True
    else:
        is_min[1:-1] = (f[1:-1] <= f[:-2]) & (f[1:-1] <= f[2:])
        is_min[0] = f[0] <= f[1]
        is_min[-1] = f[-1] <= f[-2]
    # |S| moves at most 2 pi E/h per unit time, so a grid point next to a
    # genuine zero has |S| <= tol + pi E / (E_max oversample)
    gate = (cfg.tolerance + math.pi * m.E / (e_max * cfg.oversample)) * 1.5
    candidates = np.flatnonzero(is_min & (f <= gate ** 2))

    xtol = cfg.refine_tolerance
    best_t, best_v = float(t[np.argmin(f)]), float(np.sqrt(f.min()))
    for i in candidates:
        lo = max(0.0, t[i] - step)
        hi = min(t[i] + step, horizon)
        tr = _refine(s, lo, hi, xtol)
        v = abs(survival_amplitude(s, tr))
        if v <= cfg.tolerance:
            return OrthoResult(True, tr, v, tr, horizon, cfg.tolerance)
        if v < best_v:
            best_t, best_v = tr, v
    if not candidates.size:
        i = int(np.argmin(f))
        tr = _refine(s, max(0.0, t[i] - step), min(t[i] + step, horizon), xtol)
        v = abs(survival_amplitude(s, tr))
        if v < best_v:
            best_t, best_v = tr, v
    return OrthoResult(False, None, best_v, best_t, horizon, cfg.tolerance)
