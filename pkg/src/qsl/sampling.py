"""Random spectral states that are exactly orthogonal at a prescribed time."""

from __future__ import annotations

import numpy as np

from .state_model import SpectralState


def random_orthogonal_state(rng: np.random.Generator, n_levels: int = 4, tau: float = 1.0,
                            e_scale: float = 1.0, h: float = 1.0,
                            max_tries: int = 10_000) -> SpectralState:
    """Draw a state with S(tau) = 0 to machine precision.

    Energies: the ground level plus ``n_levels - 1`` uniform draws on
    (0, e_scale * h / tau). All but two weights are random; the last two solve
    the real 2x2 system that cancels the phasor sum at tau. Draws with a
    negative solved weight are rejected.
    """
    if n_levels < 3:
        raise ValueError("need at least three levels for a random orthogonal state")
    for _ in range(max_tries):
        e = np.concatenate([[0.0], rng.uniform(0, e_scale * h / tau, n_levels - 1)])
        w = rng.exponential(size=n_levels)
        a, b = rng.choice(n_levels, size=2, replace=False)
        z = np.exp(-2j * np.pi * e * tau / h)
        rest = np.ones(n_levels, dtype=bool)
        rest[[a, b]] = False
        target = -np.sum(w[rest] * z[rest])
        M = np.array([[z[a].real, z[b].real], [z[a].imag, z[b].imag]])
        if abs(np.linalg.det(M)) < 1e-3:
            continue
        wa, wb = np.linalg.solve(M, [target.real, target.imag])
        if wa <= 1e-3 or wb <= 1e-3:
            continue
        w[a], w[b] = wa, wb
        s = SpectralState.from_levels(e, w / w.sum(), h=h)
        if len(s) == n_levels:
            return s
    raise RuntimeError("could not draw an orthogonal state")
