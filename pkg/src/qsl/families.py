"""Three-level state families whose orthogonalization time approaches the unified bound.

Family A (alpha < 1) puts a small weight p0 on the ground level and two nearly
balanced levels whose phases at tau differ by about pi. Family B (alpha > 1)
puts half the weight on the ground level and a small tail on level (2k+1) E1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .bounds import bound_report
from .state_model import SpectralState, UnitConvention, moments
from .survival import ZeroFinderConfig, first_orthogonal_time


class FamilyError(ValueError):
    pass


class ConvergenceError(FamilyError):
    def __init__(self, msg, residual):
        super().__init__(msg)
        self.residual = residual


# Slope of (tau / tau_MT - 1) in p0 for family A is
#   (1/alpha^2 - 1 - FAMILY_A_SIN_COEFF * sin(pi/2 (1/alpha - 1))) / 2.
# The value 4/pi reproduces the exact refined family (tests/test_families.py).
FAMILY_A_SIN_COEFF = 4 / math.pi


@dataclass(frozen=True)
class FamilyAParams:
    alpha: float
    p0: float

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise FamilyError(f"family A needs 0 < alpha < 1, got {self.alpha}")
        if not 0 < self.p0 <= 0.2:
            raise FamilyError(f"family A needs 0 < p0 <= 0.2, got {self.p0}")


@dataclass(frozen=True)
class FamilyBParams:
    alpha: float
    k: int
    e1: float = 1.0

    def __post_init__(self):
        if not self.alpha > 1:
            raise FamilyError(f"family B needs alpha > 1, got {self.alpha}")
        if int(self.k) != self.k or self.k < 1:
            raise FamilyError(f"family B needs an integer k >= 1, got {self.k}")
        if not self.e1 > 0:
            raise FamilyError("e1 must be positive")


@dataclass(frozen=True)
class FamilyState:
    state: SpectralState
    predicted_tau: float
    achieved_tau: float
    achieved_alpha: float
    bound_ratio: float
    tau_unified: float

    @property
    def keel_value(self) -> float:
        m = moments(self.state)
        return 2 * self.achieved_tau * (m.E + m.dE) / self.state.h

    def summary(self) -> dict:
        m = moments(self.state)
        return {"predicted_tau": self.predicted_tau, "achieved_tau": self.achieved_tau,
                "achieved_alpha": self.achieved_alpha, "bound_ratio": self.bound_ratio,
                "tau_unified": self.tau_unified, "E": m.E, "dE": m.dE,
                "keel_value": self.keel_value}


def family_a_angles(alpha: float, p0: float):
    """First-order angles and weights (x1, x2, p1, p2) at the working time."""
    delta = 2 * p0
    x1 = 0.5 * math.pi * (1 / alpha - 1)
    x2 = math.pi + x1 - delta * math.sin(x1)
    p1 = 0.5 - 0.25 * delta * (1 + math.cos(x1))
    p2 = 0.5 - 0.25 * delta * (1 - math.cos(x1))
    return x1, x2, p1, p2


def _state_from_angles(p0, p1, p2, x1, x2, h, tau=1.0):
    # x_i = 2 pi E_i tau / h
    scale = h / (2 * math.pi * tau)
    return SpectralState.from_levels([0.0, x1 * scale, x2 * scale], [p0, p1, p2], h=h,
                                     norm_atol=1e-6)


def family_a_seed(p: FamilyAParams, h: float = 1.0) -> SpectralState:
    x1, x2, p1, p2 = family_a_angles(p.alpha, p.p0)
    return _state_from_angles(p.p0, p1, p2, x1, x2, h)


def _family_a_residual(v, p0, alpha):
    p1, p2, x1, x2 = v
    mean = p1 * x1 + p2 * x2
    var = p1 * x1 ** 2 + p2 * x2 ** 2 - mean ** 2
    sd = math.sqrt(max(var, 0.0))
    r = np.array([
        p1 * math.sin(x1) + p2 * math.sin(x2),
        p0 + p1 * math.cos(x1) + p2 * math.cos(x2),
        p0 + p1 + p2 - 1.0,
        sd / mean - alpha,
    ])
    # d(sd/mean) via d var and d mean
    dmean = np.array([x1, x2, p1, p2])
    dvar = np.array([x1 ** 2, x2 ** 2, 2 * p1 * x1, 2 * p2 * x2]) - 2 * mean * dmean
    dratio = (dvar / (2 * sd)) / mean - sd * dmean / mean ** 2
    J = np.array([
        [math.sin(x1), math.sin(x2), p1 * math.cos(x1), p2 * math.cos(x2)],
        [math.cos(x1), math.cos(x2), -p1 * math.sin(x1), -p2 * math.sin(x2)],
        [1.0, 1.0, 0.0, 0.0],
        dratio,
    ])
    return r, J


def _newton_a(v, p0, alpha, tol, max_iter):
    r, J = _family_a_residual(v, p0, alpha)
    norm = np.linalg.norm(r)
    for _ in range(max_iter):
        if norm < tol:
            break
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            raise ConvergenceError("singular Jacobian in family A refinement", norm) from None
        lam = 1.0
        while lam > 1e-10:
            trial = v + lam * step
            if trial[0] > 0 and trial[1] > 0 and 0 < trial[2] < trial[3]:
                r_t, J_t = _family_a_residual(trial, p0, alpha)
                if np.linalg.norm(r_t) < (1 - 1e-4 * lam) * norm or np.linalg.norm(r_t) < tol:
                    break
            lam *= 0.5
        else:
            raise ConvergenceError("line search failed in family A refinement", norm)
        v, r, J = trial, r_t, J_t
        norm = np.linalg.norm(r)
    if norm >= tol:
        raise ConvergenceError(f"family A Newton did not converge (residual {norm:.3g})", norm)
    return v, norm


def solve_family_a(p: FamilyAParams, tol: float = 1e-12, max_iter: int = 100):
    """Damped Newton on the exact orthogonality, normalization and alpha equations.

    Seeded with the first-order angles. Returns (p1, p2, x1, x2, residual).
    For small alpha with large p0 the system has no solution near the seed and
    ConvergenceError is raised.
    """
    x1, x2, p1, p2 = family_a_angles(p.alpha, p.p0)
    v, norm = _newton_a(np.array([p1, p2, x1, x2]), p.p0, p.alpha, tol, max_iter)
    return (*v, norm)


def family_a_refine(p: FamilyAParams, h: float = 1.0,
                    cfg: ZeroFinderConfig | None = None) -> FamilyState:
    p1, p2, x1, x2, _ = solve_family_a(p)
    state = _state_from_angles(p.p0, p1, p2, x1, x2, h)
    return _finish(state, predicted_tau(p, state), cfg)


def family_b_alpha(beta: float, k: int) -> float:
    """Exact alpha of the family-B state as a function of beta (E1 drops out)."""
    q = beta / k
    return math.sqrt(1 + 8 * beta + 4 * q - 4 * q * q) / (1 + 2 * q)


def _family_b_peak(k: int) -> tuple[float, float]:
    res = minimize_scalar(lambda b: -family_b_alpha(b, k), bounds=(0.0, float(k * k)),
                          method="bounded", options={"xatol": 1e-12 * k * k})
    return float(res.x), -float(res.fun)


def family_b_beta(alpha: float, k: int) -> float:
    """Smallest beta whose family-B state has exactly this alpha.

    alpha(beta) rises from 1 at beta=0 to a peak and then falls back, so the
    root is searched on the rising branch only.
    """
    b_peak, a_peak = _family_b_peak(k)
    if alpha >= a_peak:
        raise FamilyError(f"alpha unreachable at this k (k={k} reaches at most {a_peak:.6g})")
    return brentq(lambda b: family_b_alpha(b, k) - alpha, 0.0, b_peak, xtol=1e-15, rtol=1e-15)


def family_b_state(alpha: float, k: int, e1: float = 1.0, h: float = 1.0) -> SpectralState:
    beta = family_b_beta(alpha, k)
    p1 = 0.5 * (1 - beta / k ** 2)
    pk = beta / (2 * k ** 2)
    return SpectralState.from_levels([0.0, e1, (2 * k + 1) * e1], [0.5, p1, pk], h=h,
                                     norm_atol=1e-9)


def family_b(p: FamilyBParams, h: float = 1.0, cfg: ZeroFinderConfig | None = None) -> FamilyState:
    state = family_b_state(p.alpha, p.k, p.e1, h)
    return _finish(state, predicted_tau(p, state), cfg)


def predicted_tau(params: FamilyAParams | FamilyBParams, state: SpectralState | None = None) -> float:
    """Leading-order orthogonalization time of a family member.

    Family A: (h/4dE)[1 + p0/2 (1/alpha^2 - 1 - c sin(pi/2 (1/alpha - 1)))];
    family B: (h/4E)[1 + (alpha - 1)/(2k)].
    ``state`` supplies E or dE; without it the zeroth-order moments are used
    (family A at unit working time, family B with the given e1).
    """
    a = params.alpha
    if isinstance(params, FamilyAParams):
        if state is not None:
            dE, h = moments(state).dE, state.h
        else:
            dE, h = 0.25, 1.0  # dx = pi/2 at tau = 1
        x1 = 0.5 * math.pi * (1 / a - 1)
        corr = 1 / a ** 2 - 1 - FAMILY_A_SIN_COEFF * math.sin(x1)
        return h / (4 * dE) * (1 + 0.5 * params.p0 * corr)
    if state is not None:
        E, h = moments(state).E, state.h
    else:
        E, h = 0.5 * params.e1, 1.0
    return h / (4 * E) * (1 + (a - 1) / (2 * params.k))


def _finish(state: SpectralState, predicted: float, cfg) -> FamilyState:
    m = moments(state)
    rep = bound_report(m, UnitConvention(state.h))
    res = first_orthogonal_time(state, cfg)
    if not res.found:
        raise FamilyError(f"family state never orthogonalizes (min |S| = {res.min_overlap:.3g})")
    return FamilyState(state, predicted, res.tau, m.alpha, res.tau / rep.tau_unified,
                       rep.tau_unified)
