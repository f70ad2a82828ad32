"""Mixed states: trace overlap Tr[rho(0) rho(t)] and the rank-2 counterexample."""

from __future__ import annotations

import math

import numpy as np

from .bounds import BoundReport, bound_report
from .state_model import (AmplitudeState, MixedEnsemble, Moments, StateError, UnitConvention,
                          inner, moments_from_arrays)

__all__ = ["MixedEnsemble", "trace_overlap", "ensemble_moments", "rank2_counterexample",
           "mixed_nonattainability_check"]


def trace_overlap(e: MixedEnsemble, t: float) -> float:
    """Tr[rho(0) rho(t)] = sum_ij l_i l_j |<psi_i(0)|psi_j(t)>|^2."""
    if t < 0:
        raise ValueError("t must be non-negative")
    evolved = [m.evolved(t) for m in e.members]
    total = 0.0
    for i, mi in enumerate(e.members):
        for j, mj in enumerate(e.members):
            total += e.weights[i] * e.weights[j] * abs(inner(mi, evolved[j], mj)) ** 2
    return float(total)


def ensemble_moments(e: MixedEnsemble) -> Moments:
    """Energy moments of rho: weighted mean energy and total second moment.

    Energies are measured from the lowest level populated by any member.
    """
    energies, probs = [], []
    for w, m in zip(e.weights, e.members):
        energies.append(m.energies)
        probs.append(w * np.abs(m.amplitudes) ** 2)
    energies = np.concatenate(energies)
    probs = np.concatenate(probs)
    occupied = probs > 0
    energies = energies[occupied] - energies[occupied].min()
    return moments_from_arrays(energies, probs[occupied])


def rank2_counterexample(e1: float, lambda1: float, h: float = 1.0) -> MixedEnsemble:
    """rho = l1 |+><+| + (1 - l1) |-><-| with |+-> = (|0> +- |E1>)/sqrt(2).

    Each member attains the single-state bound on its own; the mixture does not.
    """
    if not e1 > 0:
        raise StateError("e1 must be positive")
    if not 0 < lambda1 < 1:
        raise StateError("lambda1 must lie in (0, 1)")
    r = 1 / math.sqrt(2)
    energies = np.array([0.0, e1])
    g = np.zeros(2, dtype=int)
    plus = AmplitudeState(energies, g, np.array([r, r], dtype=complex), h)
    minus = AmplitudeState(energies, g, np.array([r, -r], dtype=complex), h)
    return MixedEnsemble(np.array([lambda1, 1 - lambda1]), (plus, minus), h)


def mixed_nonattainability_check(e: MixedEnsemble, report: BoundReport | None = None) -> float:
    """Trace overlap at the unified bound of the ensemble's moments.

    A strictly positive value means rho(0) and rho(tau_unified) are not orthogonal.
    """
    if len(e) < 2:
        raise StateError("mixed_nonattainability_check needs at least two members")
    if report is None:
        report = bound_report(ensemble_moments(e), UnitConvention(e.h))
    return trace_overlap(e, report.tau_unified)
