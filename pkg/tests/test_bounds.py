import logging
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qsl.bounds import (BoundsError, attains_emax_bound, bound_report, check_bound_ratios,
                        fold_spectrum, is_two_level_equal_weight, keel_bound, reduce_spectrum,
                        reflect_spectrum, state_bounds, trig_margin_a, trig_margin_b)
from qsl.families import FamilyBParams, family_b
from qsl.sampling import random_orthogonal_state
from qsl.state_model import Moments, SpectralState, two_level
from qsl.survival import first_orthogonal_time, survival_amplitude


def spec(*levels):
    return SpectralState.from_levels(*zip(*levels))


def test_two_level_report():
    r = bound_report(Moments(0.5, 0.5, 1.0, 1.0))
    assert (r.tau_mt, r.tau_ml, r.tau_unified, r.tau_emax) == (0.5, 0.5, 0.5, 0.5)
    assert r.keel_value_bound == 1.0


@pytest.mark.parametrize("E, dE, mt, ml, uni, keel", [
    (0.75, 0.25, 1.0, 1 / 3, 1.0, 2.0),
    (0.5, 1.5, 1 / 6, 0.5, 0.5, 2.0),
])
def test_report_asymmetric(E, dE, mt, ml, uni, keel):
    r = bound_report(Moments(E, dE, dE / E, 2.0))
    assert r.tau_mt == pytest.approx(mt, abs=1e-15)
    assert r.tau_ml == pytest.approx(ml, abs=1e-15)
    assert r.tau_unified == pytest.approx(uni, abs=1e-15)
    assert r.keel_value_bound == pytest.approx(keel, abs=1e-14)
    assert keel_bound(dE / E) == pytest.approx(keel, abs=1e-12)


def test_ground_only_rejected():
    with pytest.raises(BoundsError, match="ground state only"):
        bound_report(Moments(0.0, 0.0, None, 0.0))


def test_report_inf_renders_as_string():
    assert bound_report(Moments(1.0, 0.0, 0.0, 1.0)).to_dict()["tau_mt"] == "inf"


@given(st.floats(1e-3, 1e3))
def test_keel_value_matches_closed_form(alpha):
    # 2 tau_unified (E + dE)/h at E = 1 equals (1 + e^|ln alpha|)/2
    r = bound_report(Moments(1.0, alpha, alpha, 2.0))
    assert r.keel_value_bound == pytest.approx(keel_bound(alpha), rel=1e-12)
    assert keel_bound(alpha) == pytest.approx(keel_bound(1 / alpha), rel=1e-12)
    assert keel_bound(alpha) >= 1.0


# ---------------------------------------------------------------- trig margins

def test_trig_anchors():
    assert trig_margin_a(0.0) == 0.0
    assert abs(trig_margin_a(math.pi)) < 1e-12
    assert abs(trig_margin_a(-math.pi)) < 1e-12
    assert trig_margin_a(math.pi / 2) == pytest.approx(2 / math.pi - 0.5, abs=1e-15)
    assert trig_margin_b(0.0) == 0.0
    assert abs(trig_margin_b(math.pi)) < 1e-12
    assert trig_margin_b(math.pi / 2) == pytest.approx(2 / math.pi, abs=1e-15)


def test_trig_b_domain():
    with pytest.raises(BoundsError):
        trig_margin_b(-0.1)


def test_trig_margins_nonnegative_dense(rng):
    x = rng.uniform(-20, 20, 200_000)
    assert trig_margin_a(x).min() >= -1e-12
    assert trig_margin_b(np.abs(x)).min() >= -1e-12


def test_trig_margin_a_even():
    x = np.linspace(0, 20, 1001)
    assert np.allclose(trig_margin_a(x), trig_margin_a(-x), atol=1e-15)


# ---------------------------------------------------------------- fold / reflect

def test_fold_example():
    s = spec((0, 0.5), (3, 0.5))
    f = fold_spectrum(s, 0.5)
    assert np.allclose(f.levels, [(0, 0.5), (1, 0.5)])
    assert (s.mean_energy, f.mean_energy) == (1.5, 0.5)
    assert abs(survival_amplitude(f, 0.5) - survival_amplitude(s, 0.5)) < 1e-15


def test_fold_noop_below_period():
    s = two_level()
    assert fold_spectrum(s, 0.5).allclose(s)


def test_fold_merges_to_ground():
    f = fold_spectrum(spec((0, 1 / 3), (2, 1 / 3), (4, 1 / 3)), 0.5)
    assert np.allclose(f.levels, [(0, 1)])


def test_fold_rejects_bad_tau():
    with pytest.raises(BoundsError):
        fold_spectrum(two_level(), 0)


@pytest.mark.parametrize("levels, expected", [
    ([(0, 0.3), (1, 0.7)], [(0, 0.7), (1, 0.3)]),
    ([(0, 0.5), (1, 0.5)], [(0, 0.5), (1, 0.5)]),
    ([(0, 0.25), (1, 0.25), (3, 0.5)], [(0, 0.5), (2, 0.25), (3, 0.25)]),
])
def test_reflect(levels, expected):
    assert np.allclose(reflect_spectrum(spec(*levels)).levels, expected)


def test_reflect_preserves_modulus(rng):
    s = spec((0, 0.1), (0.4, 0.2), (1.3, 0.3), (2.9, 0.4))
    t = rng.uniform(0, 10, 500)
    assert np.allclose(np.abs(survival_amplitude(reflect_spectrum(s), t)),
                       np.abs(survival_amplitude(s, t)), atol=1e-14)
    assert reflect_spectrum(s).mean_energy == pytest.approx(s.e_max - s.mean_energy)


# ---------------------------------------------------------------- reduce

def test_reduce_example():
    r = reduce_spectrum(spec((0, 0.5), (3, 0.5)), 0.5)
    assert np.allclose(r.levels, [(0, 0.5), (1, 0.5)])
    assert 0.25 <= r.mean_energy <= 0.5


def test_reduce_requires_orthogonality():
    with pytest.raises(BoundsError, match="not orthogonal"):
        reduce_spectrum(spec((0, 0.3), (1, 0.7)), 0.5)


def test_reduce_family_b():
    s = family_b(FamilyBParams(1.5, 2)).state
    r = reduce_spectrum(s, 0.5)
    assert r.e_max < 2
    assert r.mean_energy <= r.e_max / 2 + 1e-12
    assert abs(survival_amplitude(r, 0.5)) < 1e-12


def test_reduce_properties(rng, caplog):
    with caplog.at_level(logging.WARNING, logger="qsl.bounds"):
        for _ in range(50):
            tau = rng.uniform(0.3, 2)
            s = random_orthogonal_state(rng, int(rng.integers(3, 7)), tau=tau, e_scale=3)
            r = reduce_spectrum(s, tau)
            assert r.e_max < 1 / tau
            assert abs(survival_amplitude(r, tau)) < 1e-12
            assert r.mean_energy <= s.mean_energy + 1e-12
            assert r.e_max / 4 - 1e-9 <= r.mean_energy <= r.e_max / 2 + 1e-9
    assert not caplog.records


# ---------------------------------------------------------------- emax bound

def test_two_level_attains_everything():
    s = two_level()
    tau, ratios = check_bound_ratios(s)
    assert tau == pytest.approx(0.5, abs=1e-12)
    assert all(abs(v - 1) < 1e-9 for v in ratios.values())
    assert attains_emax_bound(s, tau)
    assert is_two_level_equal_weight(s)


def test_emax_equality_only_for_two_level(rng):
    for _ in range(100):
        s = random_orthogonal_state(rng, int(rng.integers(3, 6)), e_scale=rng.uniform(1, 2))
        tau, ratios = check_bound_ratios(s)
        assert ratios["emax"] >= 1 - 1e-9
        if attains_emax_bound(s, tau):
            assert is_two_level_equal_weight(s)


def test_check_bound_ratios_none_without_zero():
    assert check_bound_ratios(spec((0, 0.9), (1, 0.1))) is None


def test_state_bounds_uses_state_units():
    s = SpectralState.from_levels([0, 1], [0.5, 0.5], h=2.0)
    assert state_bounds(s).tau_unified == pytest.approx(1.0)
    assert first_orthogonal_time(s).tau == pytest.approx(1.0, abs=1e-12)
