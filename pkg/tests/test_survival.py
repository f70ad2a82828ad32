import math

import numpy as np
import pytest

from qsl.sampling import random_orthogonal_state
from qsl.state_model import AmplitudeState, SpectralState, collapse_to_spectral, moments, two_level
from qsl.survival import (ZeroFinderConfig, first_orthogonal_time, survival_amplitude,
                          survival_prob_derivative, survival_probability)


@pytest.mark.parametrize("t, expected", [(0.0, 1 + 0j), (0.25, 0.5 - 0.5j), (0.5, 0j)])
def test_two_level_amplitude(t, expected):
    assert survival_amplitude(two_level(), t) == pytest.approx(expected, abs=1e-15)


def test_two_level_amplitude_closed_form(rng):
    t = rng.uniform(0, 3, 100)
    assert survival_amplitude(two_level(), t) == pytest.approx(0.5 * (1 + np.exp(-2j * np.pi * t)))


def test_derivative_examples():
    s = two_level()
    assert survival_prob_derivative(s, 0.0) == 0.0
    assert survival_prob_derivative(s, 0.5) == pytest.approx(0.0, abs=1e-15)
    # |S|^2 = (1 + cos 2 pi t)/2 -> derivative -pi sin(2 pi t)
    assert survival_prob_derivative(s, 0.25) == pytest.approx(-math.pi, rel=1e-14)


def test_derivative_matches_central_differences(rng):
    h = 1e-6
    for _ in range(50):
        n = rng.integers(2, 7)
        s = SpectralState.from_levels(np.r_[0, rng.uniform(0, 3, n - 1)], rng.dirichlet(np.ones(n)))
        t = rng.uniform(0, 2, 20)
        fd = (survival_probability(s, t + h) - survival_probability(s, t - h)) / (2 * h)
        assert np.abs(fd - survival_prob_derivative(s, t)).max() < 1e-6


def test_modulus_bounded(rng):
    s = SpectralState.from_levels([0, 0.3, 1.7, 2.2], [0.1, 0.2, 0.3, 0.4])
    assert np.abs(survival_amplitude(s, rng.uniform(0, 50, 1000))).max() <= 1 + 1e-12
    assert abs(survival_amplitude(s, 0)) == pytest.approx(1.0, abs=1e-15)


def test_collapsed_amplitude_matches_self_overlap(rng):
    e = np.array([0.0, 1.0, 1.0, 2.5])
    a = rng.normal(size=4) + 1j * rng.normal(size=4)
    st = AmplitudeState(e, np.array([0, 0, 1, 0]), a / np.linalg.norm(a))
    for t in rng.uniform(0, 2, 10):
        direct = np.sum(np.conj(st.amplitudes) * st.amplitudes * np.exp(-2j * np.pi * e * t))
        assert survival_amplitude(collapse_to_spectral(st), t) == pytest.approx(direct, abs=1e-14)


def test_first_zero_two_level():
    res = first_orthogonal_time(two_level())
    assert res.found and res.status == "found"
    assert res.tau == pytest.approx(0.5, abs=1e-12)


def test_first_zero_scales_with_e1():
    res = first_orthogonal_time(two_level(e1=3.0))
    assert res.tau == pytest.approx(1 / 6, abs=1e-12)


def test_not_found_reports_minimum():
    # |0.9 + 0.1 exp(-2 pi i t)| has minimum 0.8 at t = 1/2
    res = first_orthogonal_time(SpectralState.from_levels([0, 1], [0.9, 0.1]))
    assert not res.found and res.status == "not-found-within-horizon"
    assert res.min_overlap == pytest.approx(0.8, abs=1e-12)
    assert res.argmin_time == pytest.approx(0.5, abs=1e-9)


def test_single_level_not_found():
    res = first_orthogonal_time(SpectralState.from_levels([0], [1]))
    assert not res.found and res.min_overlap == 1.0


def test_periodic_spectrum_zero_in_first_period():
    s = SpectralState.from_levels([0, 1, 3, 4], [0.4, 0.1, 0.1, 0.4])
    t = np.linspace(0, 3, 301)
    assert np.abs(survival_amplitude(s, t + 1) - survival_amplitude(s, t)).max() < 1e-12
    res = first_orthogonal_time(s)
    assert res.found and 0 < res.tau < 1
    # brute-force oracle: dense scan of |S| over the first period
    grid = np.linspace(0, 1, 200_001)
    vals = np.abs(survival_amplitude(s, grid))
    first = grid[np.argmax(vals < 1e-4)]
    assert res.tau == pytest.approx(first, abs=1e-4)


def test_found_tau_respects_bounds(rng):
    for _ in range(100):
        s = random_orthogonal_state(rng, int(rng.integers(3, 8)), e_scale=rng.uniform(1, 3))
        res = first_orthogonal_time(s)
        assert res.found and res.tau <= 1 + 1e-9
        m = moments(s)
        assert res.tau * 4 * m.dE >= 1 - 1e-9
        assert res.tau * 4 * m.E >= 1 - 1e-9
        assert res.tau * 2 * m.e_max >= 1 - 1e-9
        assert res.min_overlap <= 1e-9


def test_config_validation():
    with pytest.raises(ValueError):
        ZeroFinderConfig(oversample=4)
    with pytest.raises(ValueError):
        ZeroFinderConfig(tolerance=0)


def test_horizon_override_limits_search():
    res = first_orthogonal_time(two_level(), ZeroFinderConfig(horizon=0.4))
    assert not res.found
