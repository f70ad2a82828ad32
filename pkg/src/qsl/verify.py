"""Randomized property checks, grouped into suites for ``qsl verify``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import bounds as B
from .families import (FamilyAParams, FamilyBParams, family_a_refine, family_b, family_b_beta,
                       solve_family_a)
from .mixed import ensemble_moments, rank2_counterexample, trace_overlap
from .optimizer import OptProblem, _Model, minimize_tau, objective_and_gradients
from .sampling import random_orthogonal_state
from .state_model import (AmplitudeState, MixedEnsemble, SpectralState, collapse_to_spectral,
                          moments)
from .survival import (first_orthogonal_time, survival_amplitude, survival_prob_derivative,
                       survival_probability)

PI = math.pi


@dataclass
class Check:
    suite: str
    name: str
    passed: bool
    detail: str = ""


def _random_state(rng, n=None, scale=3.0):
    n = n or int(rng.integers(2, 7))
    e = np.concatenate([[0.0], rng.uniform(0, scale, n - 1)])
    return SpectralState.from_levels(e, rng.dirichlet(np.ones(n)))


def _random_amplitude(rng, n=5):
    e = rng.choice([0.0, 0.5, 1.0, 1.7, 2.2], size=n)
    e[0] = 0.0  # collapse shifts the ground to zero; keep S(t) free of a global phase
    g = np.arange(n)
    a = rng.normal(size=n) + 1j * rng.normal(size=n)
    return AmplitudeState(e, g, a / np.linalg.norm(a))


# ------------------------------------------------------------------- suites

def suite_trig(n, rng):
    x = rng.uniform(-20, 20, n)
    ma = B.trig_margin_a(x)
    # planted points straddle the equality set so the detector is exercised
    planted = np.array([0.0, PI, -PI, 1e-7, PI + 1e-7, -PI - 1e-7])
    mp = B.trig_margin_a(planted)
    near_a = lambda v: np.min(np.abs(v[:, None] - np.array([0.0, PI, -PI])), axis=1) <= 1e-6
    eq = np.concatenate([x[ma <= 1e-13], planted[mp <= 1e-13]])
    yield "trig_a non-negative", ma.min() >= -1e-12, f"min margin {ma.min():.3e} over {n} draws"
    yield "trig_a equality only at 0, +-pi", bool(np.all(near_a(eq))), f"{eq.size} equality points"

    y = rng.uniform(0, 40, n)
    mb = B.trig_margin_b(y)
    planted_b = np.array([0.0, PI, 1e-9, PI - 1e-7])
    mpb = B.trig_margin_b(planted_b)
    eqb = np.concatenate([y[mb <= 1e-13], planted_b[mpb <= 1e-13]])
    near_b = np.min(np.abs(eqb[:, None] - np.array([0.0, PI])), axis=1) <= 1e-6
    yield "trig_b non-negative", mb.min() >= -1e-12, f"min margin {mb.min():.3e} over {n} draws"
    yield "trig_b equality only at 0, pi", bool(np.all(near_b)), f"{eqb.size} equality points"


def suite_state(n, rng):
    n = min(n, 2000)
    ok_rt = ok_phase = ok_ineq = ok_shift = True
    for _ in range(n):
        s = _random_state(rng)
        back = collapse_to_spectral(AmplitudeState.from_spectral(s))
        ok_rt &= back.allclose(s, 1e-12)
        m = moments(s)
        ok_ineq &= m.dE >= 0 and m.e_max >= m.E - 1e-15
        shift = rng.uniform(0, 10)
        ok_shift &= SpectralState.from_levels(s.energies + shift, s.probs).allclose(s, 1e-9)
        a = _random_amplitude(rng)
        ph = np.exp(1j * rng.uniform(0, 2 * PI, a.amplitudes.size))
        rot = AmplitudeState(a.energies, a.degeneracy, a.amplitudes * ph)
        m1, m2 = moments(collapse_to_spectral(a)), moments(collapse_to_spectral(rot))
        ok_phase &= abs(m1.E - m2.E) < 1e-12 and abs(m1.dE - m2.dE) < 1e-12
    yield "spectral round trip is idempotent", ok_rt, f"{n} states"
    yield "moments invariant under amplitude phases", ok_phase, f"{n} states"
    yield "dE >= 0 and e_max >= E", ok_ineq, f"{n} states"
    yield "uniform shift gives identical state", ok_shift, f"{n} states"


def suite_survival(n, rng):
    n = min(n, 500)
    worst_mod = worst_amp = worst_fd = 0.0
    ok_bnd = True
    found = 0
    for _ in range(n):
        s = _random_state(rng)
        t = rng.uniform(0, 2, 50)
        S = survival_amplitude(s, t)
        worst_mod = max(worst_mod, np.abs(S).max() - 1, abs(abs(survival_amplitude(s, 0)) - 1))
        a = _random_amplitude(rng)
        direct = np.array([np.vdot(a.amplitudes, a.evolved(tt)) for tt in t[:5]])
        worst_amp = max(worst_amp, np.abs(direct - survival_amplitude(collapse_to_spectral(a), t[:5])).max())
        step = 1e-6
        fd = (survival_probability(s, t + step) - survival_probability(s, t - step)) / (2 * step)
        worst_fd = max(worst_fd, np.abs(fd - survival_prob_derivative(s, t)).max())
    for _ in range(max(10, n // 10)):
        s = random_orthogonal_state(rng, int(rng.integers(3, 7)), e_scale=rng.uniform(0.5, 3))
        r = B.check_bound_ratios(s)
        if r is not None:
            found += 1
            ok_bnd &= min(r[1].values()) >= 1 - 1e-9
    s = SpectralState.from_levels([0, 1, 3, 4], [0.4, 0.1, 0.1, 0.4])
    t = rng.uniform(0, 3, 100)
    periodic = np.abs(survival_amplitude(s, t + 1.0) - survival_amplitude(s, t)).max()
    res = first_orthogonal_time(s)
    yield "|S(t)| <= 1, |S(0)| = 1", worst_mod <= 1e-12, f"worst excess {worst_mod:.2e}"
    yield "collapsed S equals amplitude self-overlap", worst_amp < 1e-12, f"worst {worst_amp:.2e}"
    yield "d|S|^2/dt matches finite differences", worst_fd < 1e-6, f"worst {worst_fd:.2e}"
    yield "found tau respects MT, ML and E_max bounds", ok_bnd and found > 0, f"{found} zeros"
    yield ("periodic spectrum: zero reported in first period",
           periodic < 1e-12 and res.found and res.tau <= 1.0, f"tau={res.tau}")


def suite_bounds(n, rng):
    n = min(n, 300)
    worst_fold = worst_refl = 0.0
    ok_mean = ok_emax = ok_window = ok_rigid = True
    count = 0
    for _ in range(n):
        s = random_orthogonal_state(rng, int(rng.integers(3, 7)), e_scale=rng.uniform(1, 4))
        tau = 1.0
        f = B.fold_spectrum(s, tau)
        worst_fold = max(worst_fold, abs(survival_amplitude(f, tau) - survival_amplitude(s, tau)))
        ok_mean &= f.mean_energy <= s.mean_energy + 1e-12
        t = rng.uniform(0, 5, 1000)
        r = B.reflect_spectrum(s)
        worst_refl = max(worst_refl, np.abs(np.abs(survival_amplitude(r, t))
                                            - np.abs(survival_amplitude(s, t))).max())
        red = B.reduce_spectrum(s, tau, check_minimal=False)
        ok_emax &= red.e_max < s.h / tau
        m = moments(red)
        res = first_orthogonal_time(s)
        if res.found and abs(res.tau - tau) < 1e-9:
            count += 1
            ok_window &= m.e_max / 4 - 1e-9 <= m.E <= m.e_max / 2 + 1e-9
        if res.found and B.attains_emax_bound(s, res.tau):
            ok_rigid &= B.is_two_level_equal_weight(s)
    for e1 in (0.3, 1.0, 7.0):
        s = SpectralState.from_levels([0, e1], [0.5, 0.5])
        res = first_orthogonal_time(s)
        ok_rigid &= res.found and B.attains_emax_bound(s, res.tau) and B.is_two_level_equal_weight(s)
    yield "fold preserves S(tau)", worst_fold < 1e-12, f"worst {worst_fold:.2e}"
    yield "fold never raises mean energy", ok_mean, f"{n} states"
    yield "reflection preserves |S(t)|", worst_refl < 1e-12, f"worst {worst_refl:.2e}"
    yield "reduced E_max < h/tau", ok_emax, f"{n} states"
    yield "reduced E in [E_max/4, E_max/2] at minimal tau", ok_window, f"{count} minimal"
    yield "E_max bound attained only by equal two-level", ok_rigid, ""


def suite_families(n, rng):
    worst_b = 0.0
    ok_xmean = True
    for alpha in (1.2, 2.0, 3.0):
        for k in (5, 10, 40):
            try:
                fs = family_b(FamilyBParams(alpha, k))
            except ValueError:
                continue
            worst_b = max(worst_b, abs(survival_amplitude(fs.state, 0.5)))
            beta = family_b_beta(alpha, k)
            p = fs.state.probs
            xmean = p[1] * PI + p[2] * PI * (2 * k + 1)
            ok_xmean &= abs(xmean - 0.5 * PI * (1 + 2 * beta / k)) < 1e-12
    yield "family B exactly orthogonal at h/(2 E1)", worst_b < 1e-12, f"worst |S| {worst_b:.2e}"
    yield "family B mean angle matches closed form", ok_xmean, ""

    worst_res = worst_alpha = 0.0
    for alpha in (0.3, 0.5, 0.8):
        for p0 in (0.02, 0.005):
            p1, p2, x1, x2, res = solve_family_a(FamilyAParams(alpha, p0))
            worst_res = max(worst_res, res)
            worst_alpha = max(worst_alpha, abs(family_a_refine(FamilyAParams(alpha, p0)).achieved_alpha - alpha))
    yield "family A solves the exact system", worst_res < 1e-12, f"residual {worst_res:.2e}"
    yield "family A hits target alpha", worst_alpha < 1e-10, f"worst {worst_alpha:.2e}"

    ra = [family_a_refine(FamilyAParams(0.5, p0)).bound_ratio for p0 in (0.05, 0.02, 0.01, 0.005)]
    rb = [family_b(FamilyBParams(2.0, k)).bound_ratio for k in (5, 10, 20, 40)]
    mono = all(np.diff(ra) < 0) and all(np.diff(rb) < 0) and min(ra + rb) > 1
    yield "family ratios > 1 and shrinking with parameter", mono, \
        f"A {ra[-1] - 1:.2e}, B {rb[-1] - 1:.2e}"
    keel = [family_a_refine(FamilyAParams(0.5, p0)).keel_value for p0 in (0.01, 0.001)]
    target = B.keel_bound(0.5)
    yield "family A keel value converges to bound", abs(keel[1] - target) < abs(keel[0] - target) \
        and keel[1] >= target, f"{keel[1]:.6f} vs {target}"


def suite_mixed(n, rng):
    n = min(n, 300)
    worst0 = worst_phase = 0.0
    ok_rank2 = ok_bound = True
    for _ in range(n):
        lam = rng.uniform(0.05, 0.95)
        e1 = rng.uniform(0.2, 5)
        ens = rank2_counterexample(e1, lam)
        worst0 = max(worst0, abs(trace_overlap(ens, 0) - (lam ** 2 + (1 - lam) ** 2)))
        t = rng.uniform(0, 3)
        ph = np.exp(1j * rng.uniform(0, 2 * PI))
        m0 = ens.members[0]
        rot = MixedEnsemble(ens.weights, (AmplitudeState(m0.energies, m0.degeneracy, m0.amplitudes * ph),
                                          ens.members[1]))
        worst_phase = max(worst_phase, abs(trace_overlap(rot, t) - trace_overlap(ens, t)))
        ok_rank2 &= trace_overlap(ens, 0.5 / e1) > 0.1 * lam * (1 - lam)
        # mixing two orthogonal pure states must not beat the bound of the mixture
        tau = B.bound_report(ensemble_moments(ens)).tau_unified
        grid = np.linspace(0, tau, 200)
        ok_bound &= min(trace_overlap(ens, g) for g in grid[::20]) > 0
    yield "trace overlap at t=0 equals purity", worst0 < 1e-12, f"worst {worst0:.2e}"
    yield "trace overlap invariant under member phases", worst_phase < 1e-12, f"worst {worst_phase:.2e}"
    yield "rank-2 overlap at h/(2 E1) stays positive", ok_rank2, f"{n} ensembles"
    yield "mixtures never orthogonalize before the unified bound", ok_bound, ""


def suite_optimizer(n, rng):
    worst = 0.0
    for _ in range(20):
        nlev = int(rng.integers(2, 6))
        model = _Model(nlev, 1.0, cap=rng.uniform(1, 3))
        x = rng.normal(size=2 * nlev - 1)
        alpha = rng.uniform(0.3, 3)
        vals, g = objective_and_gradients(x, model, alpha)
        for key, f in (("E", lambda v: v["E"]), ("S2", lambda v: v["S2"]), ("dE", lambda v: v["dE"])):
            fd = np.zeros_like(x)
            for i in range(x.size):
                d = np.zeros_like(x)
                d[i] = 1e-6
                fd[i] = (f(objective_and_gradients(x + d, model, alpha)[0])
                         - f(objective_and_gradients(x - d, model, alpha)[0])) / 2e-6
            scale = max(1.0, np.abs(fd).max())
            worst = max(worst, np.abs(fd - g[key]).max() / scale)
    yield "analytic gradients match finite differences", worst < 1e-5, f"worst rel {worst:.2e}"

    r1 = minimize_tau(OptProblem(0.7, 3, seed=3, restarts=3))
    r2 = minimize_tau(OptProblem(0.7, 3, seed=3, restarts=3))
    yield "optimizer is deterministic per seed", r1.trace == r2.trace, ""

    ratios = []
    for a in np.geomspace(0.2, 5, max(3, min(n, 7))):
        r = minimize_tau(OptProblem(float(a), 4, seed=int(rng.integers(1 << 30)), restarts=4))
        if r.converged:
            ratios.append(r.bound_ratio)
    yield "optimizer never beats the unified bound", min(ratios) >= 1 - 1e-6 if ratios else False, \
        f"min ratio {min(ratios):.9f}" if ratios else "nothing converged"


SUITES: dict[str, Callable] = {
    "trig": suite_trig,
    "state": suite_state,
    "survival": suite_survival,
    "bounds": suite_bounds,
    "families": suite_families,
    "mixed": suite_mixed,
    "optimizer": suite_optimizer,
}


def run_suites(names, samples: int = 10_000, seed: int = 0) -> list[Check]:
    if "all" in names:
        names = list(SUITES)
    rng = np.random.default_rng(seed)
    out = []
    for name in names:
        for label, ok, detail in SUITES[name](samples, rng):
            out.append(Check(name, label, bool(ok), detail))
    return out
