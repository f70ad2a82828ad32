"""Closed-form speed limits, inequality margins and spectrum reduction."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .state_model import Moments, SpectralState, UnitConvention, moments
from .survival import ZeroFinderConfig, first_orthogonal_time, survival_amplitude

log = logging.getLogger(__name__)

INF = math.inf


class BoundsError(ValueError):
    pass


@dataclass(frozen=True)
class BoundReport:
    tau_mt: float
    tau_ml: float
    tau_unified: float
    tau_emax: float
    keel_value_bound: float
    alpha: float | None

    def to_dict(self) -> dict:
        return {k: _render(v) for k, v in self.__dict__.items()}


def _render(v):
    # json has no infinity; reports spell it "inf"
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def keel_bound(alpha: float) -> float:
    """Normalized unified bound 2 tau (E + dE) / h = (1 + e^|ln alpha|) / 2."""
    return 0.5 * (1.0 + math.exp(abs(math.log(alpha))))


def bound_report(m: Moments, u: UnitConvention | None = None) -> BoundReport:
    h = (u or UnitConvention()).h
    if m.E == 0 and m.dE == 0:
        raise BoundsError("ground state only")
    tau_mt = h / (4 * m.dE) if m.dE > 0 else INF
    tau_ml = h / (4 * m.E) if m.E > 0 else INF
    tau_unified = max(tau_mt, tau_ml)
    tau_emax = h / (2 * m.e_max) if m.e_max > 0 else INF
    keel = 2 * tau_unified * (m.E + m.dE) / h
    return BoundReport(tau_mt, tau_ml, tau_unified, tau_emax, keel, m.alpha)


def state_bounds(s: SpectralState) -> BoundReport:
    return bound_report(moments(s), UnitConvention(s.h))


def trig_margin_a(x):
    """cos x - (1 - 4/pi^2 x sin x - 2/pi^2 x^2); non-negative for all real x."""
    x = np.asarray(x, dtype=float)
    out = np.cos(x) - 1.0 + (4 / math.pi ** 2) * x * np.sin(x) + (2 / math.pi ** 2) * x * x
    return float(out) if out.ndim == 0 else out


def trig_margin_b(x):
    """cos x - (1 - 2/pi (x + sin x)); non-negative for x >= 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise BoundsError("trig_margin_b is only defined for x >= 0")
    out = np.cos(x) - 1.0 + (2 / math.pi) * (x + np.sin(x))
    return float(out) if out.ndim == 0 else out


def fold_spectrum(s: SpectralState, tau: float) -> SpectralState:
    """Shift every level at or above h/tau down by whole multiples of h/tau.

    exp(-2 pi i E tau / h) is unchanged by E -> E - n h/tau, so S(tau) is
    preserved while the mean energy drops.
    """
    if not tau > 0:
        raise BoundsError("tau must be positive")
    period = s.h / tau
    n = np.floor(s.energies / period)
    folded = s.energies - n * period
    # floor can land one period short when E/period rounds just below an integer
    over = folded >= period
    folded[over] -= period
    folded[folded < 0] = 0.0
    return SpectralState.from_levels(folded, s.probs, h=s.h)


def fold_counts(s: SpectralState, tau: float) -> np.ndarray:
    return np.floor(s.energies * tau / s.h + 1e-12).astype(int)


def reflect_spectrum(s: SpectralState) -> SpectralState:
    """Map E -> E_max - E. S(t) becomes e^{-2 pi i E_max t/h} conj(S(t))."""
    return SpectralState.from_levels(s.e_max - s.energies, s.probs, h=s.h)


def reduce_spectrum(s: SpectralState, tau: float, check_minimal: bool = True) -> SpectralState:
    """Fold above h/tau, then keep the lower-mean of the folded state and its mirror.

    The result has E_max < h/tau. When tau is the input's first zero, its mean
    energy lies in [E_max/4, E_max/2]; that window is checked and logged.
    """
    if abs(survival_amplitude(s, tau)) > 1e-9:
        raise BoundsError("state not orthogonal at tau")
    folded = fold_spectrum(s, tau)
    mirrored = reflect_spectrum(folded)
    out = mirrored if mirrored.mean_energy < folded.mean_energy else folded
    if check_minimal and len(out) > 1:
        m = moments(out)
        if not (m.e_max / 4 - 1e-9 <= m.E <= m.e_max / 2 + 1e-9):
            res = first_orthogonal_time(s)
            minimal = res.found and abs(res.tau - tau) <= 1e-9 * max(1.0, tau)
            log.warning("reduced mean energy %.6g outside [E_max/4, E_max/2] = [%.6g, %.6g]%s",
                        m.E, m.e_max / 4, m.e_max / 2,
                        " at a minimal tau" if minimal else " (tau is not the first zero)")
    return out


def is_two_level_equal_weight(s: SpectralState, tol: float = 1e-6) -> bool:
    return len(s) == 2 and abs(s.probs[0] - 0.5) <= tol and abs(s.probs[1] - 0.5) <= tol


def attains_emax_bound(s: SpectralState, tau: float, tol: float = 1e-6) -> bool:
    return tau * 2 * s.e_max / s.h <= 1 + tol


def check_bound_ratios(s: SpectralState, cfg: ZeroFinderConfig | None = None):
    """Return (tau, ratios) with ratios tau/bound for the three bounds, or None if no zero."""
    res = first_orthogonal_time(s, cfg)
    if not res.found:
        return None
    m = moments(s)
    tau = res.tau
    return tau, {"mt": tau * 4 * m.dE / s.h, "ml": tau * 4 * m.E / s.h,
                 "emax": tau * 2 * m.e_max / s.h}
