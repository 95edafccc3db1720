"""Noise description and the channels it induces.

Three mechanisms are modelled:

* coherent over-rotation of native gates, ``theta -> theta * (1 + eps)``;
* T1/T2 relaxation of every qubit for the duration of every gate (gates run
  one at a time);
* uniform two-qubit depolarizing after each MS gate.

An optional classical readout flip is available but off by default.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .circuit import ONE_QUBIT_KINDS, Gate, GateKind, X_MAT, Y_MAT, gate_matrix

G = GateKind

PAPER_EPS1 = 0.008
PAPER_EPS2 = 0.08
PAPER_T1 = 100.0
PAPER_T2 = 1.0
PAPER_DUR1 = 135e-6
PAPER_DUR2 = 600e-6
PAPER_P_STOCH2 = 0.01


@dataclass(frozen=True)
class NoiseSpec:
    """Noise parameters. ``t1``/``t2`` of ``inf`` disable the matching decay."""

    eps1: float = 0.0
    eps2: float = 0.0
    t1: float = math.inf
    t2: float = math.inf
    dur1: float = 0.0
    dur2: float = 0.0
    p_stoch2: float = 0.0
    p_readout: float = 0.0
    over_rotation: bool = True
    relaxation: bool = True
    stochastic: bool = True
    readout: bool = False
    idle_relaxation: bool = True  # relax every qubit for every gate (serial execution)

    def __post_init__(self):
        for name in ("eps1", "eps2", "t1", "t2", "dur1", "dur2", "p_stoch2", "p_readout"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or math.isnan(v):
                raise ValueError(f"invalid NoiseSpec: {name} must be a number")
        if not (0.0 <= self.p_stoch2 <= 1.0):
            raise ValueError("invalid NoiseSpec: p_stoch2 outside [0, 1]")
        if not (0.0 <= self.p_readout <= 1.0):
            raise ValueError("invalid NoiseSpec: p_readout outside [0, 1]")
        if self.dur1 < 0 or self.dur2 < 0:
            raise ValueError("invalid NoiseSpec: negative gate duration")
        if self.t1 <= 0 or self.t2 <= 0:
            raise ValueError("invalid NoiseSpec: relaxation times must be positive")
        if self.t2 > 2 * self.t1:
            raise ValueError("invalid NoiseSpec: t2 > 2*t1")

    # --- presets -----------------------------------------------------------
    @classmethod
    def noiseless(cls) -> "NoiseSpec":
        return cls()

    @classmethod
    def over_rotation_only(cls, eps1: float = PAPER_EPS1, eps2: float = PAPER_EPS2) -> "NoiseSpec":
        return cls(eps1=eps1, eps2=eps2)

    @classmethod
    def over_rotation_relaxation(cls, eps1: float = PAPER_EPS1, eps2: float = PAPER_EPS2) -> "NoiseSpec":
        return cls(eps1=eps1, eps2=eps2, t1=PAPER_T1, t2=PAPER_T2, dur1=PAPER_DUR1, dur2=PAPER_DUR2)

    @classmethod
    def full(cls, p_stoch2: float = PAPER_P_STOCH2) -> "NoiseSpec":
        return replace(cls.over_rotation_relaxation(), p_stoch2=p_stoch2)

    # --- derived flags -----------------------------------------------------
    @property
    def has_coherent(self) -> bool:
        return self.over_rotation and (self.eps1 != 0.0 or self.eps2 != 0.0)

    @property
    def has_relaxation(self) -> bool:
        timed = self.dur1 > 0 or self.dur2 > 0
        return self.relaxation and timed and (math.isfinite(self.t1) or math.isfinite(self.t2))

    @property
    def has_stochastic(self) -> bool:
        return self.stochastic and self.p_stoch2 > 0

    @property
    def has_readout(self) -> bool:
        return self.readout and self.p_readout > 0

    @property
    def is_pure(self) -> bool:
        """True when a statevector suffices for exact results."""
        return not (self.has_relaxation or self.has_stochastic)

    def duration(self, g: Gate) -> float:
        if g.kind is G.DIAG_ORACLE:
            return 0.0
        return self.dur1 if g.arity == 1 else self.dur2

    # --- JSON --------------------------------------------------------------
    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("t1", "t2"):
            if math.isinf(d[k]):
                d[k] = None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"invalid NoiseSpec: unknown fields {sorted(unknown)}")
        d = dict(d)
        for k in ("t1", "t2"):
            if k in d and d[k] is None:
                d[k] = math.inf
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def load(cls, path: str | Path) -> "NoiseSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


PROFILES = {
    "noiseless": NoiseSpec.noiseless,
    "or": NoiseSpec.over_rotation_only,
    "or_relax": NoiseSpec.over_rotation_relaxation,
    "full": NoiseSpec.full,
}


# --- relaxation --------------------------------------------------------------
def damping_probability(noise: NoiseSpec, duration: float) -> float:
    """Amplitude-damping probability ``1 - exp(-t/T1)``."""
    if not noise.relaxation or math.isinf(noise.t1):
        return 0.0
    return -math.expm1(-duration / noise.t1)


def dephasing_factor(noise: NoiseSpec, duration: float) -> float:
    """Coherence factor left by pure dephasing alone.

    Total coherence decay is ``exp(-t/T2)``; amplitude damping already
    contributes ``exp(-t/(2 T1))``, the rest is pure dephasing.
    """
    if not noise.relaxation:
        return 1.0
    rate = (0.0 if math.isinf(noise.t2) else 1.0 / noise.t2) - (0.0 if math.isinf(noise.t1) else 0.5 / noise.t1)
    return math.exp(-duration * max(rate, 0.0))


def kraus_channels(noise: NoiseSpec, duration: float) -> list[np.ndarray]:
    """Kraus operators of amplitude damping followed by pure dephasing."""
    if duration < 0:
        raise ValueError("duration must be non-negative")
    if noise.t2 > 2 * noise.t1:
        raise ValueError("invalid NoiseSpec: t2 > 2*t1")
    gamma = damping_probability(noise, duration)
    lam = dephasing_factor(noise, duration)
    ad = [np.array([[1, 0], [0, math.sqrt(1 - gamma)]], dtype=complex),
          np.array([[0, math.sqrt(gamma)], [0, 0]], dtype=complex)]
    dp = [math.sqrt((1 + lam) / 2) * np.eye(2, dtype=complex),
          math.sqrt((1 - lam) / 2) * np.diag([1, -1]).astype(complex)]
    ops = [d @ a for a in ad for d in dp]
    return [k for k in ops if np.abs(k).max() > 0]


def kraus_to_superop(kraus: list[np.ndarray]) -> np.ndarray:
    """Row-major Liouville matrix ``sum K (x) conj(K)``."""
    return sum(np.kron(k, k.conj()) for k in kraus)


def relaxation_superop(noise: NoiseSpec, duration: float) -> np.ndarray:
    """4x4 superoperator of idle relaxation (diagonal in the Liouville basis)."""
    gamma = damping_probability(noise, duration)
    lam = dephasing_factor(noise, duration)
    coh = lam * math.sqrt(1 - gamma)
    s = np.zeros((4, 4), dtype=complex)
    s[0, 0] = 1.0
    s[0, 3] = gamma
    s[1, 1] = coh
    s[2, 2] = coh
    s[3, 3] = 1 - gamma
    return s


# --- coherent over-rotation --------------------------------------------------
def _sigma(phi: float) -> np.ndarray:
    return math.cos(phi) * X_MAT + math.sin(phi) * Y_MAT


def _rot(angle: float, gen: np.ndarray) -> np.ndarray:
    """``exp(-i angle/2 * gen)`` for an involutory generator."""
    return math.cos(angle / 2) * np.eye(gen.shape[0]) - 1j * math.sin(angle / 2) * gen


def noisy_gate_matrix(g: Gate, noise: NoiseSpec) -> np.ndarray:
    """Local matrix of ``g`` with over-rotation applied to native gates.

    GPI, GPI2 and MS are written as ``exp(-i theta/2 * generator)`` with
    ``theta`` of pi, pi/2 and pi/2; the angle is scaled by ``1 + eps``.
    Other gates are returned unchanged.
    """
    if not noise.over_rotation:
        return gate_matrix(g)
    if g.kind is G.GPI and noise.eps1:
        return _rot(math.pi * (1 + noise.eps1), _sigma(g.params[0]))
    if g.kind is G.GPI2 and noise.eps1:
        return _rot(math.pi / 2 * (1 + noise.eps1), _sigma(g.params[0]))
    if g.kind is G.MS and noise.eps2:
        gen = np.kron(_sigma(g.params[0]), _sigma(g.params[1]))
        return _rot(math.pi / 2 * (1 + noise.eps2), gen)
    return gate_matrix(g)


@lru_cache(maxsize=1)
def _depolarizing_superop_cached(p: float) -> np.ndarray:
    # B -> (1 - 16p/15) B + (4p/15) tr(B) I on the row-major 16-vector
    s = (1 - 16 * p / 15) * np.eye(16, dtype=complex)
    diag = [0, 5, 10, 15]
    for r in diag:
        for c in diag:
            s[r, c] += 4 * p / 15
    return s


def depolarizing_superop(p: float) -> np.ndarray:
    return _depolarizing_superop_cached(float(p))


def is_single_qubit(g: Gate) -> bool:
    return g.kind in ONE_QUBIT_KINDS
