"""State representations, moments and the state-file schema.

Units: ``h = 1`` unless a state carries its own ``h``; hbar is ``h / (2*pi)``.
The ground level of every :class:`SpectralState` sits at energy 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import jsonschema
import numpy as np

MERGE_RTOL = 1e-12
NORM_ATOL = 1e-12
PARSE_NORM_ATOL = 1e-9
ORTHO_ATOL = 1e-10


class StateError(ValueError):
    """Invalid state data."""


@dataclass(frozen=True)
class UnitConvention:
    h: float = 1.0

    def __post_init__(self):
        if not self.h > 0:
            raise StateError(f"h must be positive, got {self.h}")

    @property
    def hbar(self) -> float:
        return self.h / (2 * math.pi)


def _merge_levels(energies: np.ndarray, probs: np.ndarray):
    order = np.argsort(energies, kind="stable")
    energies, probs = energies[order], probs[order]
    out_e, out_p = [], []
    for e, p in zip(energies, probs):
        if out_e and abs(e - out_e[-1]) <= MERGE_RTOL * max(1.0, abs(e), abs(out_e[-1])):
            # keep the probability-weighted energy of the merged cluster
            tot = out_p[-1] + p
            out_e[-1] = (out_e[-1] * out_p[-1] + e * p) / tot if tot > 0 else out_e[-1]
            out_p[-1] = tot
        else:
            out_e.append(float(e))
            out_p.append(float(p))
    return np.array(out_e), np.array(out_p)


@dataclass(frozen=True, eq=False)
class SpectralState:
    """Probability distribution over distinct energy levels.

    Construct through :meth:`from_levels`, which drops zero weights, merges
    coincident energies, shifts the ground level to zero and renormalizes.
    """

    energies: np.ndarray
    probs: np.ndarray
    h: float = 1.0

    @classmethod
    def from_levels(cls, energies: Iterable[float], probs: Iterable[float], h: float = 1.0,
                    norm_atol: float = PARSE_NORM_ATOL) -> "SpectralState":
        e = np.asarray(list(energies), dtype=float)
        p = np.asarray(list(probs), dtype=float)
        if e.shape != p.shape or e.ndim != 1:
            raise StateError("energies and probabilities must be 1-d sequences of equal length")
        if e.size == 0:
            raise StateError("empty spectrum")
        if not (np.all(np.isfinite(e)) and np.all(np.isfinite(p))):
            raise StateError("energies and probabilities must be finite")
        if np.any(p < 0):
            raise StateError(f"negative probability {p.min():.12g}")
        total = p.sum()
        if abs(total - 1.0) > norm_atol:
            raise StateError(f"probabilities sum to {total:.12g}")
        keep = p > 0
        e, p = _merge_levels(e[keep], p[keep] / total)
        e = e - e[0]
        e[0] = 0.0
        e.setflags(write=False)
        p.setflags(write=False)
        UnitConvention(h)
        return cls(e, p, float(h))

    @property
    def levels(self) -> list[tuple[float, float]]:
        return list(zip(self.energies.tolist(), self.probs.tolist()))

    @property
    def e_max(self) -> float:
        return float(self.energies[-1])

    @property
    def mean_energy(self) -> float:
        return float(self.probs @ self.energies)

    def __len__(self):
        return self.energies.size

    def __repr__(self):
        body = ", ".join(f"({e:.6g}, {p:.6g})" for e, p in self.levels)
        return f"SpectralState([{body}], h={self.h:g})"

    def allclose(self, other: "SpectralState", atol: float = 1e-12) -> bool:
        return (len(self) == len(other)
                and np.allclose(self.energies, other.energies, rtol=0, atol=atol)
                and np.allclose(self.probs, other.probs, rtol=0, atol=atol))

    def to_dict(self) -> dict:
        return {"h": self.h, "levels": [{"e": e, "p": p} for e, p in self.levels]}


@dataclass(frozen=True, eq=False)
class AmplitudeState:
    """Complex amplitudes over an explicit (energy, degeneracy index) basis."""

    energies: np.ndarray
    degeneracy: np.ndarray
    amplitudes: np.ndarray
    h: float = 1.0

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        g = np.asarray(self.degeneracy, dtype=int)
        a = np.asarray(self.amplitudes, dtype=complex)
        if not (e.shape == g.shape == a.shape) or e.ndim != 1:
            raise StateError("basis and amplitudes must have equal length")
        if e.size == 0:
            raise StateError("empty spectrum")
        if np.any(e < 0):
            raise StateError("negative energy in basis")
        if np.any(g < 0):
            raise StateError("negative degeneracy index")
        if len(set(zip(e.tolist(), g.tolist()))) != e.size:
            raise StateError("duplicate (energy, degeneracy) basis label")
        norm = float(np.sum(np.abs(a) ** 2))
        if abs(norm - 1.0) > NORM_ATOL:
            raise StateError(f"amplitudes have squared norm {norm:.12g}")
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "degeneracy", g)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def normalized(cls, energies, degeneracy, amplitudes, h: float = 1.0,
                   norm_atol: float = PARSE_NORM_ATOL) -> "AmplitudeState":
        a = np.asarray(amplitudes, dtype=complex)
        norm = float(np.sum(np.abs(a) ** 2))
        if abs(norm - 1.0) > norm_atol:
            raise StateError(f"probabilities sum to {norm:.12g}")
        return cls(np.asarray(energies, float), np.asarray(degeneracy, int), a / math.sqrt(norm), h)

    @classmethod
    def from_spectral(cls, s: SpectralState) -> "AmplitudeState":
        """Embed a spectral state with real non-negative amplitudes."""
        return cls(s.energies.copy(), np.zeros(len(s), dtype=int),
                   np.sqrt(s.probs).astype(complex), s.h)

    @property
    def labels(self) -> list[tuple[float, int]]:
        return list(zip(self.energies.tolist(), self.degeneracy.tolist()))

    def evolved(self, t: float) -> np.ndarray:
        return self.amplitudes * np.exp(-2j * np.pi * self.energies * t / self.h)

    def to_dict(self) -> dict:
        return {"h": self.h, "basis": [
            {"e": float(e), "g": int(g), "re": float(a.real), "im": float(a.imag)}
            for e, g, a in zip(self.energies, self.degeneracy, self.amplitudes)]}


def inner(bra: AmplitudeState, ket_amplitudes: np.ndarray, ket: AmplitudeState) -> complex:
    """<bra|ket> over labelled bases; ``ket_amplitudes`` may be time-evolved."""
    index = {lab: i for i, lab in enumerate(ket.labels)}
    total = 0j
    for lab, a in zip(bra.labels, bra.amplitudes):
        j = index.get(lab)
        if j is not None:
            total += np.conj(a) * ket_amplitudes[j]
    return complex(total)


@dataclass(frozen=True, eq=False)
class MixedEnsemble:
    """Weighted set of mutually orthogonal pure states (a spectral decomposition of rho)."""

    weights: np.ndarray
    members: tuple[AmplitudeState, ...]
    h: float = 1.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        members = tuple(self.members)
        if w.ndim != 1 or w.size != len(members) or w.size == 0:
            raise StateError("mixture needs one weight per member")
        if np.any(w <= 0):
            raise StateError("mixture weights must be positive")
        if abs(w.sum() - 1.0) > NORM_ATOL:
            raise StateError(f"mixture weights sum to {w.sum():.12g}")
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                ov = abs(inner(members[i], members[j].amplitudes, members[j]))
                if ov >= ORTHO_ATOL:
                    raise StateError(f"mixture members {i} and {j} are not orthogonal (overlap {ov:.3g})")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "members", members)

    def __len__(self):
        return len(self.members)

    def to_dict(self) -> dict:
        out = []
        for w, m in zip(self.weights, self.members):
            d = m.to_dict()
            d.pop("h")
            out.append({"w": float(w), "state": d})
        return {"h": self.h, "mixture": out}


@dataclass(frozen=True)
class Moments:
    mean_energy: float
    energy_spread: float
    alpha: float | None
    e_max: float

    # short aliases used throughout the formulas
    @property
    def E(self) -> float:
        return self.mean_energy

    @property
    def dE(self) -> float:
        return self.energy_spread

    def to_dict(self) -> dict:
        return {"E": self.mean_energy, "dE": self.energy_spread,
                "alpha": self.alpha, "e_max": self.e_max}


def collapse_to_spectral(s: AmplitudeState) -> SpectralState:
    """Sum |a|^2 over degenerate labels; phases drop out of the self-overlap."""
    if s.energies.size == 0:
        raise StateError("empty spectrum")
    return SpectralState.from_levels(s.energies, np.abs(s.amplitudes) ** 2, h=s.h)


def moments_from_arrays(energies: np.ndarray, probs: np.ndarray) -> Moments:
    mean = float(probs @ energies)
    var = float(probs @ (energies - mean) ** 2)
    spread = math.sqrt(max(var, 0.0))
    alpha = spread / mean if mean > 0 else None
    return Moments(mean, spread, alpha, float(energies.max()))


def moments(s: SpectralState) -> Moments:
    return moments_from_arrays(s.energies, s.probs)


# ---------------------------------------------------------------- state files

_SPECTRAL = {
    "type": "object",
    "properties": {
        "h": {"type": "number"},
        "levels": {
            "type": "array", "minItems": 1,
            "items": {"type": "object", "additionalProperties": False,
                      "required": ["e", "p"],
                      "properties": {"e": {"type": "number"}, "p": {"type": "number"}}},
        },
    },
    "required": ["levels"],
    "additionalProperties": False,
}

_AMPLITUDE = {
    "type": "object",
    "properties": {
        "h": {"type": "number"},
        "basis": {
            "type": "array", "minItems": 1,
            "items": {"type": "object", "additionalProperties": False,
                      "required": ["e", "re"],
                      "properties": {"e": {"type": "number"}, "g": {"type": "integer"},
                                     "re": {"type": "number"}, "im": {"type": "number"}}},
        },
    },
    "required": ["basis"],
    "additionalProperties": False,
}

_MIXED = {
    "type": "object",
    "properties": {
        "h": {"type": "number"},
        "mixture": {
            "type": "array", "minItems": 1,
            "items": {"type": "object", "additionalProperties": False,
                      "required": ["w", "state"],
                      "properties": {"w": {"type": "number"},
                                     "state": {"oneOf": [_SPECTRAL, _AMPLITUDE]}}},
        },
    },
    "required": ["mixture"],
    "additionalProperties": False,
}

STATE_SCHEMA = {"oneOf": [_SPECTRAL, _AMPLITUDE, _MIXED]}


def _pure_from_doc(doc: dict, h: float):
    if "levels" in doc:
        e = [lv["e"] for lv in doc["levels"]]
        p = [lv["p"] for lv in doc["levels"]]
        if min(e) < 0:
            raise StateError(f"negative energy {min(e)}")
        return SpectralState.from_levels(e, p, h=h)
    e = [b["e"] for b in doc["basis"]]
    if min(e) < 0:
        raise StateError(f"negative energy {min(e)}")
    g = [b.get("g", 0) for b in doc["basis"]]
    a = [complex(b["re"], b.get("im", 0.0)) for b in doc["basis"]]
    return AmplitudeState.normalized(e, g, a, h=h)


def parse_state(text: str | dict) -> SpectralState | AmplitudeState | MixedEnsemble:
    """Parse a state document (JSON text or an already-decoded dict)."""
    if isinstance(text, (str, bytes)):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise StateError(f"malformed state document: {exc}") from None
    else:
        doc = text
    if not isinstance(doc, dict):
        raise StateError("malformed state document: expected a JSON object")
    # dispatch on the discriminating key so errors name the right sub-schema
    schema = _MIXED if "mixture" in doc else _AMPLITUDE if "basis" in doc else _SPECTRAL
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise StateError(f"malformed state document at {where}: {exc.message}") from None
    h = float(doc.get("h", 1.0))
    UnitConvention(h)
    if "mixture" not in doc:
        return _pure_from_doc(doc, h)
    weights = np.array([m["w"] for m in doc["mixture"]], dtype=float)
    if np.any(weights <= 0):
        raise StateError("mixture weights must be positive")
    if abs(weights.sum() - 1.0) > PARSE_NORM_ATOL:
        raise StateError(f"mixture weights sum to {weights.sum():.12g}")
    members = []
    for m in doc["mixture"]:
        st = _pure_from_doc(m["state"], h)
        members.append(AmplitudeState.from_spectral(st) if isinstance(st, SpectralState) else st)
    return MixedEnsemble(weights / weights.sum(), tuple(members), h)


def load_state(path) -> SpectralState | AmplitudeState | MixedEnsemble:
    with open(path) as fh:
        return parse_state(fh.read())


def as_spectral(s: SpectralState | AmplitudeState) -> SpectralState:
    if isinstance(s, SpectralState):
        return s
    if isinstance(s, AmplitudeState):
        return collapse_to_spectral(s)
    raise StateError(f"expected a pure state, got {type(s).__name__}")


def two_level(e1: float = 1.0, h: float = 1.0) -> SpectralState:
    """The equal-weight two-level state that attains both speed limits."""
    return SpectralState.from_levels([0.0, e1], [0.5, 0.5], h=h)


def levels_of(pairs: Sequence[tuple[float, float]], h: float = 1.0) -> SpectralState:
    e, p = zip(*pairs)
    return SpectralState.from_levels(e, p, h=h)
