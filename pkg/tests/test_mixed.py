import math

import numpy as np
import pytest

from qsl.mixed import (ensemble_moments, mixed_nonattainability_check, rank2_counterexample,
                       trace_overlap)
from qsl.state_model import AmplitudeState, MixedEnsemble, StateError, inner


def density_oracle(lam, t, e1=1.0):
    # build rho(0) and rho(t) as explicit 2x2 matrices
    r = 1 / math.sqrt(2)
    kets = [np.array([r, r]), np.array([r, -r])]
    u = np.diag(np.exp(-2j * np.pi * np.array([0.0, e1]) * t))
    rho0 = sum(l * np.outer(k, k.conj()) for l, k in zip(lam, kets))
    rhot = u @ rho0 @ u.conj().T
    return float(np.trace(rho0 @ rhot).real)


@pytest.mark.parametrize("lam1", [0.5, 0.9, 0.3])
def test_trace_overlap_matches_density_matrix(lam1):
    e = rank2_counterexample(1.0, lam1)
    for t in np.linspace(0, 2, 41):
        assert trace_overlap(e, t) == pytest.approx(density_oracle((lam1, 1 - lam1), t), abs=1e-14)


def test_counterexample_values_at_half():
    # members swap at t = 1/2, so only the cross terms survive: 2 l1 l2
    assert trace_overlap(rank2_counterexample(1.0, 0.5), 0.5) == pytest.approx(0.5, abs=1e-14)
    assert trace_overlap(rank2_counterexample(1.0, 0.9), 0.5) == pytest.approx(0.18, abs=1e-14)


def test_purity_at_zero():
    for lam1 in (0.5, 0.9, 0.2):
        e = rank2_counterexample(2.0, lam1)
        assert trace_overlap(e, 0) == pytest.approx(lam1 ** 2 + (1 - lam1) ** 2, abs=1e-12)


def test_members_orthogonal():
    e = rank2_counterexample(1.3, 0.7)
    assert abs(inner(e.members[0], e.members[1].amplitudes, e.members[1])) < 1e-15


def test_single_member_reduces_to_survival():
    r = 1 / math.sqrt(2)
    m = AmplitudeState(np.array([0.0, 1.0]), np.zeros(2, int), np.array([r, r], complex))
    e = MixedEnsemble(np.array([1.0]), (m,))
    assert trace_overlap(e, 0.5) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(StateError):
        mixed_nonattainability_check(e)


def test_nonattainability_positive():
    for lam1 in (0.5, 0.9):
        e = rank2_counterexample(1.0, lam1)
        m = ensemble_moments(e)
        assert m.E == pytest.approx(0.5) and m.dE == pytest.approx(0.5)
        assert mixed_nonattainability_check(e) == pytest.approx(2 * lam1 * (1 - lam1), abs=1e-14)


def test_trace_overlap_never_vanishes(rng):
    e = rank2_counterexample(1.0, 0.5)
    t = rng.uniform(0, 5, 200)
    assert min(trace_overlap(e, x) for x in t) >= 0.5 - 1e-12


@pytest.mark.parametrize("e1, lam1", [(0.0, 0.5), (1.0, 0.0), (1.0, 1.0)])
def test_counterexample_validation(e1, lam1):
    with pytest.raises(StateError):
        rank2_counterexample(e1, lam1)
