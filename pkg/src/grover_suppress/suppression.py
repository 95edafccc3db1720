"""Randomized compiling (Pauli twirling) and ancilla post-selection."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Sequence

import numpy as np

from .circuit import Circuit, Gate, GateKind, CX_MAT, CZ_MAT, pauli_pair_matrix, xx
from .noise import NoiseSpec
from .simulator import Distribution, full_probabilities, marginalize, sample_counts
from .transpiler import HALF_PI, lower_to_xx, synthesize_native

G = GateKind
PAULI_LABELS = ("I", "X", "Y", "Z")
_PAULI_GATE = {"X": G.X, "Y": G.Y, "Z": G.Z}
DEFAULT_N_RANDOM = 10


class Mode(str, Enum):
    NONE = "none"
    RC = "rc"
    ED = "ed"
    RC_ED = "rc+ed"

    @property
    def uses_rc(self) -> bool:
        return self in (Mode.RC, Mode.RC_ED)

    @property
    def uses_ed(self) -> bool:
        return self in (Mode.ED, Mode.RC_ED)

    @classmethod
    def parse(cls, s: "str | Mode") -> "Mode":
        if isinstance(s, Mode):
            return s
        key = s.strip().lower().replace("_", "+")
        for m in cls:
            if m.value == key:
                return m
        raise ValueError(f"unknown mode {s!r}")


class Pooling(str, Enum):
    """Order of RC aggregation and ED post-selection."""

    POOL_THEN_SELECT = "pool_then_select"
    SELECT_THEN_POOL = "select_then_pool"


# --- twirl algebra -----------------------------------------------------------
def _clifford_matrix(kind: GateKind) -> np.ndarray:
    if kind is G.CX:
        return CX_MAT
    if kind is G.CZ:
        return CZ_MAT
    if kind is G.XX:
        return xx(HALF_PI)
    raise ValueError(f"{kind} is not a twirlable two-qubit Clifford")


@lru_cache(maxsize=None)
def twirl_gate(kind: GateKind, pauli_pair: tuple[str, str]) -> tuple[tuple[str, str], int]:
    """Correction pair ``Q`` and sign with ``Q . G . P = sign * G``.

    ``P`` is applied before the gate and ``Q`` after it.
    """
    kind = GateKind(kind)
    g = _clifford_matrix(kind)
    a, b = pauli_pair
    if a not in PAULI_LABELS or b not in PAULI_LABELS:
        raise ValueError(f"not a Pauli pair: {pauli_pair}")
    conj = g @ pauli_pair_matrix(a, b) @ g.conj().T
    for qa in PAULI_LABELS:
        for qb in PAULI_LABELS:
            ref = pauli_pair_matrix(qa, qb)
            overlap = np.trace(ref.conj().T @ conj) / 4
            if abs(abs(overlap) - 1) < 1e-9:
                sign = int(round(overlap.real))
                if abs(overlap.imag) > 1e-9 or sign not in (1, -1):
                    raise ValueError("conjugate is not a Hermitian Pauli")  # pragma: no cover
                return (qa, qb), sign
    raise ValueError(f"{kind} does not map {pauli_pair} to a Pauli")  # pragma: no cover


@dataclass(frozen=True)
class TwirlFrame:
    gate_index: int
    qubits: tuple[int, int]
    pauli_in: tuple[str, str]
    pauli_out: tuple[str, str]
    sign: int


def _pauli_gates(pair: tuple[str, str], qubits: tuple[int, int]) -> list[Gate]:
    return [Gate(_PAULI_GATE[p], (q,)) for p, q in zip(pair, qubits) if p != "I"]


def twirl_circuit(c_xx: Circuit, draws: Sequence[tuple[str, str]]) -> tuple[Circuit, list[TwirlFrame]]:
    """Dress the i-th XX gate of a lowered circuit with ``draws[i]`` and its correction."""
    out: list[Gate] = []
    frames: list[TwirlFrame] = []
    it = iter(draws)
    for idx, g in enumerate(c_xx.gates):
        if g.arity == 2:
            if g.kind not in (G.XX, G.CX, G.CZ):
                raise ValueError(f"cannot twirl {g.kind.value}")
            try:
                pair = tuple(next(it))
            except StopIteration:
                raise ValueError("fewer Pauli draws than two-qubit gates") from None
            corr, sign = twirl_gate(g.kind, pair)
            frames.append(TwirlFrame(idx, g.qubits, pair, corr, sign))
            out += _pauli_gates(pair, g.qubits) + [g] + _pauli_gates(corr, g.qubits)
        else:
            out.append(g)
    if next(it, None) is not None:
        raise ValueError("more Pauli draws than two-qubit gates")
    return c_xx.with_gates(out), frames


@dataclass
class RCEnsemble:
    base: Circuit
    n_random: int
    seed: int | None
    members: list[Circuit]
    frames: list[list[TwirlFrame]] = field(default_factory=list, repr=False)

    def __len__(self) -> int:
        return len(self.members)


def _check_twirlable(c: Circuit) -> None:
    for g in c.gates:
        if g.arity >= 2 and g.kind not in (G.CX, G.CZ, G.XX, G.MS, G.DIAG_ORACLE,
                                           G.TOFFOLI, G.RP_TOFFOLI):
            raise ValueError(f"non-twirlable gate {g.kind.value}")


def randomize(c: Circuit, n_random: int = DEFAULT_N_RANDOM, seed: int | None = 0,
              measured: Sequence[int] | None = None, final_z: str = "measured") -> RCEnsemble:
    """Build ``n_random`` Pauli-twirled native versions of ``c``.

    Twirling happens after two-qubit gates are rewritten to XX(pi/2) and
    before single-qubit fusion, so the Paulis merge into the existing GPI2
    pairs and the MS count stays unchanged.
    """
    if n_random < 1:
        raise ValueError("n_random must be at least 1")
    _check_twirlable(c)
    lowered = lower_to_xx(c)
    n2 = sum(1 for g in lowered.gates if g.arity == 2 and g.kind is not G.DIAG_ORACLE)
    rng = np.random.default_rng(seed)
    members, frames = [], []
    for _ in range(n_random):
        codes = rng.integers(0, 16, size=n2)
        draws = [(PAULI_LABELS[k >> 2], PAULI_LABELS[k & 3]) for k in codes]
        tw, fr = twirl_circuit(lowered, draws)
        members.append(synthesize_native(tw, measured, final_z))
        frames.append(fr)
    base = synthesize_native(lowered, measured, final_z)
    return RCEnsemble(base, n_random, seed, members, frames)


# --- aggregation and post-selection -------------------------------------------
def rc_aggregate(results: Sequence[Distribution]) -> Distribution:
    """Uniform mixture (exact) or pooled histogram (sampled) of member results."""
    if not results:
        raise ValueError("no member distributions")
    qubits = results[0].qubits
    if any(d.qubits != qubits for d in results):
        raise ValueError("mismatched outcome spaces")
    if all(d.exact for d in results):
        return Distribution(np.mean([d.probs for d in results], axis=0), qubits, exact=True)
    if any(d.exact or d.counts is None for d in results):
        raise ValueError("cannot pool exact and sampled distributions")
    return Distribution.from_counts(np.sum([d.counts for d in results], axis=0), qubits)


@dataclass
class EDResult:
    distribution: Distribution
    retention: float


def post_select(d: Distribution, ancillas: Sequence[int]) -> EDResult:
    """Keep outcomes with every ancilla at 0; the rest of ``d`` is renormalised."""
    anc = tuple(ancillas)
    missing = [q for q in anc if q not in d.qubits]
    if missing:
        raise ValueError(f"ancilla qubits {missing} not in the distribution")
    rest = tuple(q for q in d.qubits if q not in anc)
    idx = np.arange(d.probs.size)
    keep = np.ones(d.probs.size, dtype=bool)
    for q in anc:
        keep &= ((idx >> d.qubits.index(q)) & 1) == 0
    pos = [d.qubits.index(q) for q in rest]
    if d.exact:
        mass = float(d.probs[keep].sum())
        if mass <= 1e-12:
            raise ValueError("all shots discarded")
        cond = marginalize(np.where(keep, d.probs, 0.0), d.n_qubits, pos) / mass
        return EDResult(Distribution(cond, rest, exact=True, retention=mass), mass)
    counts = np.where(keep, d.counts, 0)
    kept = int(counts.sum())
    if kept == 0:
        raise ValueError("all shots discarded")
    kept_counts = np.rint(marginalize(counts.astype(float), d.n_qubits, pos)).astype(np.int64)
    retention = kept / int(d.counts.sum())
    return EDResult(Distribution.from_counts(kept_counts, rest, retention=retention), retention)


# --- pipeline ------------------------------------------------------------------
@dataclass
class SuppressionResult:
    distribution: Distribution
    retention: float
    mode: Mode
    members: list[Distribution] = field(default_factory=list, repr=False)


def split_shots(shots: int, parts: int) -> list[int]:
    base, extra = divmod(shots, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def _seed_sequence(seed) -> np.random.SeedSequence:
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


def _simulate(circuits: Sequence[Circuit], noise: NoiseSpec, shots: int | None, seed, oracle) -> list[Distribution]:
    everything = tuple(range(circuits[0].width))
    seeds = _seed_sequence(seed).spawn(len(circuits))
    per_member = [None] * len(circuits) if shots is None else split_shots(shots, len(circuits))
    out: list[Distribution] = []
    for circ, ss, n_sh in zip(circuits, seeds, per_member):
        if n_sh is None:
            out.append(Distribution(full_probabilities(circ, noise, oracle), everything, exact=True))
        elif n_sh > 0:
            out.append(Distribution.from_counts(sample_counts(circ, noise, n_sh, ss, oracle), everything))
    return out


def _finish(mode: Mode, members: list[Distribution], data: tuple[int, ...], anc: tuple[int, ...],
            pooling: Pooling, exact: bool) -> SuppressionResult:
    if not mode.uses_ed:
        joint = rc_aggregate(members)
        return SuppressionResult(joint.marginal(data), 1.0, mode, members)
    if pooling is Pooling.POOL_THEN_SELECT or not mode.uses_rc:
        ed = post_select(rc_aggregate(members), anc)
        return SuppressionResult(ed.distribution, ed.retention, mode, members)
    selected = [post_select(m, anc) for m in members]
    if exact:
        probs = np.mean([s.distribution.probs for s in selected], axis=0)
        retention = float(np.mean([s.retention for s in selected]))
        dist = Distribution(probs, data, exact=True, retention=retention)
    else:
        pooled = rc_aggregate([s.distribution for s in selected])
        retention = pooled.shots / sum(m.shots for m in members)
        dist = Distribution(pooled.probs, data, exact=False, shots=pooled.shots, retention=retention,
                            counts=pooled.counts)
    return SuppressionResult(dist, retention, mode, members)


def suppress_modes(c: Circuit, noise: NoiseSpec | None = None, modes: Sequence[Mode | str] = tuple(Mode),
                   shots: int | None = None, seed: int = 0, n_random: int = DEFAULT_N_RANDOM,
                   rc_seed: int | None = None, oracle=None, measure_all: bool | None = None,
                   pooling: Pooling | str = Pooling.POOL_THEN_SELECT) -> dict[Mode, SuppressionResult]:
    """Several modes from shared runs.

    NONE and ED read the same runs of the plain circuit; RC and RC+ED read
    the same runs of the randomized ensemble.
    """
    modes = [Mode.parse(m) for m in modes]
    pooling = Pooling(pooling)
    noise = noise or NoiseSpec()
    data, anc = c.data_qubits, c.ancilla_qubits
    if any(m.uses_ed for m in modes) and not anc:
        raise ValueError("error detection needs ancilla qubits")
    if measure_all is None:
        measure_all = any(m.uses_ed for m in modes)
    measured = tuple(range(c.width)) if measure_all else data
    ss = _seed_sequence(seed)
    plain_seed, rc_run_seed = ss.spawn(2)
    out: dict[Mode, SuppressionResult] = {}
    if any(not m.uses_rc for m in modes):
        base = randomize(c, 1, 0, measured).base
        runs = _simulate([base], noise, shots, plain_seed, oracle)
        for m in modes:
            if not m.uses_rc:
                out[m] = _finish(m, runs, data, anc, pooling, shots is None)
    if any(m.uses_rc for m in modes):
        ens = randomize(c, n_random, seed if rc_seed is None else rc_seed, measured)
        runs = _simulate(ens.members, noise, shots, rc_run_seed, oracle)
        for m in modes:
            if m.uses_rc:
                out[m] = _finish(m, runs, data, anc, pooling, shots is None)
    return {m: out[m] for m in modes}


def suppress(c: Circuit, noise: NoiseSpec | None = None, mode: Mode | str = Mode.NONE,
             shots: int | None = None, seed: int = 0, n_random: int = DEFAULT_N_RANDOM,
             rc_seed: int | None = None, oracle=None, measure_all: bool | None = None,
             pooling: Pooling | str = Pooling.POOL_THEN_SELECT) -> SuppressionResult:
    """Run ``c`` under ``noise`` with the chosen suppression mode.

    ``shots=None`` gives exact results. The output distribution covers the
    data qubits. ``measure_all`` controls whether ancilla wires get their
    terminal Z realised; by default only ED modes measure ancillas.
    """
    mode = Mode.parse(mode)
    return suppress_modes(c, noise, [mode], shots, seed, n_random, rc_seed, oracle, measure_all, pooling)[mode]


__all__ = [
    "DEFAULT_N_RANDOM", "EDResult", "Mode", "PAULI_LABELS", "Pooling", "RCEnsemble", "SuppressionResult",
    "TwirlFrame", "post_select", "randomize", "rc_aggregate", "split_shots", "suppress", "suppress_modes",
    "twirl_circuit", "twirl_gate",
]
