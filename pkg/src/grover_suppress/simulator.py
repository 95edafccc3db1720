"""Exact (density matrix / statevector) and sampled (trajectory) execution.

Noise is applied per gate in the order unitary, relaxation of every qubit for
the gate's duration, then depolarizing on MS gates. Diagonal oracles are
noiseless and take no time.

The density-matrix engine keeps, for each qubit, a pending single-qubit
superoperator that collects single-qubit gates and idle relaxation. It is
flushed into the next two-qubit pass on that qubit, so a whole circuit costs
roughly one sweep over the density matrix per MS gate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .circuit import Circuit, Gate, GateKind, apply_matrix
from .grover import OracleSpec
from .noise import (
    NoiseSpec, damping_probability, dephasing_factor, depolarizing_superop, noisy_gate_matrix,
    relaxation_superop,
)

G = GateKind
MAX_DENSITY_QUBITS = 11
MAX_STATEVECTOR_QUBITS = 20
TRAJECTORY_CHUNK = 512
PROB_FLOOR = 1e-15  # exact-mode float noise below this is not serialised
_ID4 = np.eye(4, dtype=complex)


# --- Distribution ------------------------------------------------------------
@dataclass
class Distribution:
    """Probabilities over the basis states of ``qubits``.

    Local bit ``k`` of an outcome index is the value of ``qubits[k]``.
    """

    probs: np.ndarray
    qubits: tuple[int, ...]
    exact: bool = True
    shots: int | None = None
    retention: float | None = None
    counts: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        self.qubits = tuple(int(q) for q in self.qubits)
        if self.probs.shape != (2 ** len(self.qubits),):
            raise ValueError("probability vector does not match qubit count")
        if (self.probs < -1e-12).any():
            raise ValueError("negative probability")
        if abs(self.probs.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {self.probs.sum()}, not 1")
        self.probs = np.clip(self.probs, 0.0, None)

    @classmethod
    def from_counts(cls, counts: np.ndarray, qubits: Sequence[int], retention: float | None = None) -> "Distribution":
        counts = np.asarray(counts, dtype=np.int64)
        total = int(counts.sum())
        if total == 0:
            raise ValueError("all shots discarded")
        return cls(counts / total, tuple(qubits), exact=False, shots=total, retention=retention, counts=counts)

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    def bitstring(self, index: int) -> str:
        """Outcome label, most-significant listed qubit first."""
        return format(index, f"0{self.n_qubits}b") if self.n_qubits else ""

    def marginal(self, qubits: Sequence[int]) -> "Distribution":
        pos = [self.qubits.index(q) for q in qubits]
        p = marginalize(self.probs, self.n_qubits, pos)
        counts = None if self.counts is None else np.rint(marginalize(self.counts.astype(float), self.n_qubits, pos)).astype(np.int64)
        return Distribution(p, tuple(qubits), self.exact, self.shots, self.retention, counts)

    def to_dict(self) -> dict:
        nz = np.nonzero(self.probs > PROB_FLOOR)[0]
        d = {
            "qubits": list(self.qubits),
            "exact": self.exact,
            "shots": self.shots,
            "retention": self.retention,
            "probabilities": {str(int(i)): float(self.probs[i]) for i in nz},
        }
        if self.counts is not None:
            d["counts"] = {str(int(i)): int(self.counts[i]) for i in np.nonzero(self.counts)[0]}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Distribution":
        qubits = tuple(d["qubits"])
        p = np.zeros(2 ** len(qubits))
        for k, v in d["probabilities"].items():
            p[int(k)] = v
        counts = None
        if d.get("counts") is not None:
            counts = np.zeros(2 ** len(qubits), dtype=np.int64)
            for k, v in d["counts"].items():
                counts[int(k)] = v
        return cls(p, qubits, d.get("exact", True), d.get("shots"), d.get("retention"), counts)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")


def marginalize(p: np.ndarray, n: int, positions: Sequence[int]) -> np.ndarray:
    """Sum ``p`` (over ``n`` bits, LSB-first) onto the bits at ``positions``.

    Accepts a trailing batch axis. Output bit ``k`` is input bit ``positions[k]``.
    """
    batch = p.shape[1:]
    t = p.reshape((2,) * n + batch)
    keep_axes = [n - 1 - q for q in positions]
    drop = tuple(a for a in range(n) if a not in keep_axes)
    t = t.sum(axis=drop) if drop else t
    remaining = [a for a in range(n) if a in keep_axes]
    # want axis order: positions[-1] (MSB) ... positions[0]
    order = [remaining.index(n - 1 - q) for q in reversed(positions)]
    t = np.transpose(t, order + list(range(len(remaining), len(remaining) + len(batch))))
    return t.reshape((2 ** len(positions),) + batch)


def apply_readout_flips(p: np.ndarray, n: int, flip: float) -> np.ndarray:
    """Independent classical bit flips with probability ``flip`` on each bit."""
    if flip <= 0:
        return p
    batch = p.shape[1:]
    t = p.reshape((2,) * n + batch)
    m = np.array([[1 - flip, flip], [flip, 1 - flip]])
    for ax in range(n):
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [ax])), 0, ax)
    return t.reshape(p.shape)


# --- oracle substitution -------------------------------------------------------
def _oracle_phases(oracle) -> tuple[float, ...]:
    if isinstance(oracle, OracleSpec):
        return oracle.phases()
    return tuple(float(x) for x in oracle)


def bind_oracle(c: Circuit, oracle) -> Circuit:
    """Fill every DIAG_ORACLE placeholder of ``c`` with the phases of ``oracle``."""
    if oracle is None:
        return c
    phases = _oracle_phases(oracle)
    out = []
    for g in c.gates:
        if g.kind is G.DIAG_ORACLE and not g.params:
            if len(phases) != 2 ** g.arity:
                raise ValueError("oracle size does not match the placeholder")
            g = Gate(G.DIAG_ORACLE, g.qubits, phases)
        out.append(g)
    return c.with_gates(out)


def _check_bound(c: Circuit) -> None:
    for g in c.gates:
        if g.kind is G.DIAG_ORACLE and not g.params:
            raise ValueError("unbound DIAG_ORACLE placeholder; supply an oracle")
        if g.kind is G.MCZ:
            raise ValueError("abstract MCZ gate present; decompose before simulating")


# --- pass compilation for the density-matrix engine ----------------------------
def _unitary_superop(u: np.ndarray) -> np.ndarray:
    return np.kron(u, u.conj())


def _pair_superop(sa: np.ndarray, sb: np.ndarray) -> np.ndarray:
    """Embed per-qubit 4x4 superops into the 16x16 two-qubit block basis."""
    t = np.einsum("ACac,BDbd->ABCDabcd", sa.reshape(2, 2, 2, 2), sb.reshape(2, 2, 2, 2))
    return t.reshape(16, 16)


@dataclass
class _Pass:
    kind: str  # "s1", "s2", "u", "diag"
    qubits: tuple[int, ...]
    mat: np.ndarray | None = None


def compile_passes(c: Circuit, noise: NoiseSpec) -> list[_Pass]:
    """Turn ``c`` into density-matrix passes. Placeholders become ``diag`` passes without data."""
    n = c.width
    pending = [_ID4.copy() for _ in range(n)]
    touched = [False] * n
    passes: list[_Pass] = []
    relax_cache: dict[float, np.ndarray] = {}

    def relax(t: float) -> np.ndarray | None:
        if t <= 0 or not noise.has_relaxation:
            return None
        if t not in relax_cache:
            relax_cache[t] = relaxation_superop(noise, t)
        return relax_cache[t]

    def relax_all(t: float, acted: tuple[int, ...]) -> None:
        r = relax(t)
        if r is None:
            return
        for q in range(n) if noise.idle_relaxation else acted:
            pending[q] = r @ pending[q]
            touched[q] = True

    def flush(q: int) -> None:
        if touched[q]:
            passes.append(_Pass("s1", (q,), pending[q]))
            pending[q] = _ID4.copy()
            touched[q] = False

    for g in c.gates:
        t = noise.duration(g)
        if g.kind is G.DIAG_ORACLE:
            for q in g.qubits:
                flush(q)
            phases = np.exp(1j * np.asarray(g.params)) if g.params else None
            passes.append(_Pass("diag", g.qubits, phases))
        elif g.arity == 1:
            q = g.qubits[0]
            pending[q] = _unitary_superop(noisy_gate_matrix(g, noise)) @ pending[q]
            touched[q] = True
            relax_all(t, g.qubits)
        elif g.arity == 2:
            a, b = g.qubits
            m = _unitary_superop(noisy_gate_matrix(g, noise)) @ _pair_superop(pending[a], pending[b])
            r = relax(t)
            if r is not None:
                m = _pair_superop(r, r) @ m
            if g.kind is G.MS and noise.has_stochastic:
                m = depolarizing_superop(noise.p_stoch2) @ m
            passes.append(_Pass("s2", (a, b), m))
            pending[a], pending[b] = _ID4.copy(), _ID4.copy()
            touched[a] = touched[b] = False
            for q in range(n) if noise.idle_relaxation else ():
                if q not in (a, b) and r is not None:
                    pending[q] = r @ pending[q]
                    touched[q] = True
        else:
            for q in g.qubits:
                flush(q)
            passes.append(_Pass("u", g.qubits, noisy_gate_matrix(g, noise)))
            relax_all(t, g.qubits)
    for q in range(n):
        flush(q)
    return passes


def _diag_vector(phases: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Full-register diagonal from local phases indexed LSB-first by ``qubits``."""
    idx = np.arange(2**n)
    loc = np.zeros(2**n, dtype=np.int64)
    for k, q in enumerate(qubits):
        loc |= ((idx >> q) & 1) << k
    return phases[loc]


def _run_passes(rho: np.ndarray, passes: Iterable[_Pass], n: int, adjoint: bool = False) -> np.ndarray:
    for p in passes:
        if p.kind == "s1":
            _kernels.apply_superop1(rho, p.qubits[0], p.mat.conj().T.copy() if adjoint else p.mat)
        elif p.kind == "s2":
            _kernels.apply_superop2(rho, p.qubits[0], p.qubits[1], p.mat.conj().T.copy() if adjoint else p.mat)
        elif p.kind == "u":
            u = p.mat.conj().T if adjoint else p.mat
            rho = apply_matrix(rho, u, p.qubits, n)
            rho = apply_matrix(rho.T.copy(), u.conj(), p.qubits, n).T.copy()
        elif p.kind == "diag":
            if p.mat is None:
                raise ValueError("unbound DIAG_ORACLE placeholder")
            d = _diag_vector(p.mat, p.qubits, n)
            if adjoint:
                d = d.conj()
            rho *= d[:, None] * d.conj()[None, :]
    return rho


def _ordered(passes: list[_Pass], adjoint: bool) -> list[_Pass]:
    return passes[::-1] if adjoint else passes


def density_evolve(c: Circuit, noise: NoiseSpec, rho: np.ndarray | None = None) -> np.ndarray:
    n = c.width
    if n > MAX_DENSITY_QUBITS:
        raise ValueError(f"density-matrix mode supports at most {MAX_DENSITY_QUBITS} qubits")
    if rho is None:
        rho = np.zeros((2**n, 2**n), dtype=complex)
        rho[0, 0] = 1
    return _run_passes(np.ascontiguousarray(rho, dtype=complex), compile_passes(c, noise), n)


# --- statevector engine --------------------------------------------------------
def _apply_sv(state: np.ndarray, mat: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Apply a local matrix in place to a C-contiguous (2^n, K) state."""
    if len(qubits) == 1:
        _kernels.sv_apply1(state, qubits[0], np.ascontiguousarray(mat, dtype=complex))
    elif len(qubits) == 2:
        _kernels.sv_apply2(state, qubits[0], qubits[1], np.ascontiguousarray(mat, dtype=complex))
    else:
        state[:] = apply_matrix(state, mat, qubits, n)
    return state


def statevector_evolve(c: Circuit, noise: NoiseSpec, state: np.ndarray | None = None) -> np.ndarray:
    """Pure evolution with over-rotated gates. ``state`` may carry a batch axis."""
    n = c.width
    if n > MAX_STATEVECTOR_QUBITS:
        raise ValueError(f"statevector mode supports at most {MAX_STATEVECTOR_QUBITS} qubits")
    if state is None:
        state = np.zeros(2**n, dtype=complex)
        state[0] = 1
    single = state.ndim == 1
    work = np.array(state.reshape(2**n, -1), dtype=complex, order="C")
    for g in c.gates:
        if g.kind is G.DIAG_ORACLE:
            work *= _diag_vector(np.exp(1j * np.asarray(g.params)), g.qubits, n)[:, None]
        else:
            _apply_sv(work, noisy_gate_matrix(g, noise), g.qubits, n)
    return work[:, 0] if single else work


# --- public exact / sampled entry points ---------------------------------------
def full_probabilities(c: Circuit, noise: NoiseSpec | None = None, oracle=None, method: str = "auto") -> np.ndarray:
    """Exact full-register outcome probabilities, readout flips included."""
    noise = noise or NoiseSpec()
    c = bind_oracle(c, oracle)
    _check_bound(c)
    if method not in ("auto", "density", "statevector"):
        raise ValueError("method must be auto, density or statevector")
    if method == "statevector" and not noise.is_pure:
        raise ValueError("statevector method cannot represent relaxation or depolarizing noise")
    if method == "statevector" or (method == "auto" and noise.is_pure):
        p = np.abs(statevector_evolve(c, noise)) ** 2
    else:
        p = np.real(np.diag(density_evolve(c, noise))).copy()
    p = np.clip(p, 0.0, None)
    p /= p.sum()
    if noise.has_readout:
        p = apply_readout_flips(p, c.width, noise.p_readout)
    return p


def run_exact(c: Circuit, noise: NoiseSpec | None = None, oracle=None, marginal: Sequence[int] | None = None,
              method: str = "auto") -> Distribution:
    """Exact outcome distribution over ``marginal`` (default: every qubit)."""
    p = full_probabilities(c, noise, oracle, method)
    qubits = tuple(range(c.width)) if marginal is None else tuple(marginal)
    return Distribution(marginalize(p, c.width, qubits), qubits, exact=True)


def _relax_wire(state: np.ndarray, q: int, t: float, noise: NoiseSpec, rng: np.random.Generator) -> None:
    """One relaxation step on wire ``q``; states are kept unnormalised."""
    k = state.shape[1]
    gamma = damping_probability(noise, t)
    u = rng.random(k)
    if gamma > 0:
        cand = np.nonzero(u < gamma)[0]
        if cand.size:
            p1 = _kernels.sv_one_prob(state, q, cand)
            jumpers = cand[u[cand] < gamma * p1]
            if jumpers.size:
                ones = (np.arange(state.shape[0]) >> q) & 1 == 1
                block = state[:, jumpers]
                block[~ones] = block[ones]
                block[ones] = 0
                state[:, jumpers] = block
        _kernels.sv_scale_one(state, q, math.sqrt(1 - gamma))
    lam = dephasing_factor(noise, t)
    flip = np.nonzero(rng.random(k) < (1 - lam) / 2)[0]
    if flip.size:
        ones = (np.arange(state.shape[0]) >> q) & 1 == 1
        block = state[:, flip]
        block[ones] *= -1
        state[:, flip] = block


_PAULI_1Q = [np.eye(2, dtype=complex), np.array([[0, 1], [1, 0]], dtype=complex),
             np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]], dtype=complex)]


def _depolarize(state: np.ndarray, a: int, b: int, n: int, p: float, rng: np.random.Generator) -> None:
    k = state.shape[1]
    hit = rng.random(k) < p
    codes = rng.integers(1, 16, size=k)
    for code in np.unique(codes[hit]):
        cols = np.nonzero(hit & (codes == code))[0]
        mat = np.kron(_PAULI_1Q[code >> 2], _PAULI_1Q[code & 3])
        block = np.ascontiguousarray(state[:, cols])
        _kernels.sv_apply2(block, a, b, mat)
        state[:, cols] = block


def _sample_trajectories(c: Circuit, noise: NoiseSpec, k: int, rng: np.random.Generator) -> np.ndarray:
    n = c.width
    state = np.zeros((2**n, k), dtype=complex)
    state[0] = 1
    idle = np.zeros(n)
    relax_on = noise.has_relaxation

    def flush(q: int) -> None:
        if relax_on and idle[q] > 0:
            _relax_wire(state, q, idle[q], noise, rng)
        idle[q] = 0.0

    for g in c.gates:
        for q in g.qubits:
            flush(q)
        if g.kind is G.DIAG_ORACLE:
            state *= _diag_vector(np.exp(1j * np.asarray(g.params)), g.qubits, n)[:, None]
            continue
        _apply_sv(state, noisy_gate_matrix(g, noise), g.qubits, n)
        if noise.idle_relaxation:
            idle += noise.duration(g)
        else:
            idle[list(g.qubits)] += noise.duration(g)
        if g.kind is G.MS and noise.has_stochastic:
            a, b = g.qubits
            flush(a)
            flush(b)
            _depolarize(state, a, b, n, noise.p_stoch2, rng)
    for q in range(n):
        flush(q)
    probs = np.abs(state) ** 2
    cdf = np.cumsum(probs, axis=0)
    cdf /= cdf[-1]
    u = rng.random(k)
    return np.minimum((cdf < u[None, :]).sum(axis=0), 2**n - 1)


def _flip_outcomes(outcomes: np.ndarray, n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    flips = rng.random((outcomes.size, n)) < p
    mask = (flips * (1 << np.arange(n))).sum(axis=1)
    return outcomes ^ mask


def sample_counts(c: Circuit, noise: NoiseSpec | None, shots: int, seed, oracle=None) -> np.ndarray:
    """Full-register outcome counts from ``shots`` runs."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    noise = noise or NoiseSpec()
    c = bind_oracle(c, oracle)
    _check_bound(c)
    rng = np.random.default_rng(seed)
    n = c.width
    if noise.is_pure:
        p = np.abs(statevector_evolve(c, noise)) ** 2
        p /= p.sum()
        outcomes = np.repeat(np.arange(2**n), rng.multinomial(shots, p))
        if noise.has_readout:
            outcomes = _flip_outcomes(outcomes, n, noise.p_readout, rng)
        return np.bincount(outcomes, minlength=2**n)
    counts = np.zeros(2**n, dtype=np.int64)
    done = 0
    while done < shots:
        k = min(TRAJECTORY_CHUNK, shots - done)
        outcomes = _sample_trajectories(c, noise, k, rng)
        if noise.has_readout:
            outcomes = _flip_outcomes(outcomes, n, noise.p_readout, rng)
        counts += np.bincount(outcomes, minlength=2**n)
        done += k
    return counts


def run_shots(c: Circuit, noise: NoiseSpec | None, shots: int, seed, oracle=None,
              marginal: Sequence[int] | None = None) -> Distribution:
    """Sampled distribution; identical for identical ``seed``."""
    counts = sample_counts(c, noise, shots, seed, oracle)
    d = Distribution.from_counts(counts, tuple(range(c.width)))
    return d if marginal is None else d.marginal(marginal)


# --- many oracles through one circuit ----------------------------------------
class OracleSweep:
    """Evaluate one circuit for many diagonal oracles.

    ``c`` must contain exactly one DIAG_ORACLE placeholder. The part before it
    is simulated once. For each oracle the sweep returns
    ``P(keep = x)`` and ``P(keep = x, condition qubits all 0)``.

    With mixed-state noise and many oracles the measurement projectors are
    evolved backwards once (cost independent of the number of oracles);
    otherwise each oracle is pushed forward.
    """

    def __init__(self, c: Circuit, noise: NoiseSpec, keep: Sequence[int], condition: Sequence[int] = ()):
        holes = [i for i, g in enumerate(c.gates) if g.kind is G.DIAG_ORACLE and not g.params]
        if len(holes) != 1:
            raise ValueError("OracleSweep needs exactly one DIAG_ORACLE placeholder")
        h = holes[0]
        self.n = c.width
        self.noise = noise
        self.keep = tuple(keep)
        self.condition = tuple(condition)
        self.oracle_qubits = c.gates[h].qubits
        self._pre = c.with_gates(c.gates[:h])
        self._post = c.with_gates(c.gates[h + 1:])
        self._heis: np.ndarray | None = None
        n = self.n
        idx = np.arange(2**n)
        self._loc = np.zeros(2**n, dtype=np.int64)
        for k, q in enumerate(self.oracle_qubits):
            self._loc |= ((idx >> q) & 1) << k
        if noise.is_pure:
            psi = statevector_evolve(self._pre, noise)
            self.support = np.nonzero(np.abs(psi) > 1e-14)[0]
            self._psi_pre = psi[self.support]
            basis = np.zeros((2**n, self.support.size), dtype=complex)
            basis[self.support, np.arange(self.support.size)] = 1
            self._u_post = statevector_evolve(self._post, noise, basis)
        else:
            self._rho_pre = density_evolve(self._pre, noise)
            diag = np.abs(np.diag(self._rho_pre))
            self.support = np.nonzero(diag > 1e-14)[0]
            self._post_passes = compile_passes(self._post, noise)

    def _signs(self, oracles) -> np.ndarray:
        rows = [np.exp(1j * np.asarray(_oracle_phases(o))) for o in oracles]
        return np.asarray(rows)[:, self._loc[self.support]]  # (K, |S|)

    def _reduce(self, p_full: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``p_full`` has shape (2^n, K); returns two (K, 2^|keep|) arrays."""
        if self.noise.has_readout:
            p_full = apply_readout_flips(p_full, self.n, self.noise.p_readout)
        p_keep = marginalize(p_full, self.n, self.keep).T
        mask = np.ones(2**self.n, dtype=bool)
        idx = np.arange(2**self.n)
        for q in self.condition:
            mask &= ((idx >> q) & 1) == 0
        p_cond = marginalize(p_full * mask[:, None], self.n, self.keep).T
        return p_keep, p_cond

    def _projectors(self) -> list[np.ndarray]:
        idx = np.arange(2**self.n)
        anc0 = np.ones(2**self.n, dtype=bool)
        for q in self.condition:
            anc0 &= ((idx >> q) & 1) == 0
        keep_val = np.zeros(2**self.n, dtype=np.int64)
        for k, q in enumerate(self.keep):
            keep_val |= ((idx >> q) & 1) << k
        projs = []
        for x in range(2 ** len(self.keep)):
            hit = keep_val == x
            projs.append(hit.astype(float))
            projs.append((hit & anc0).astype(float))
        return projs

    def _build_heisenberg(self) -> np.ndarray:
        s = self.support
        rho_s = self._rho_pre[np.ix_(s, s)]
        mats = []
        flips = self.noise.p_readout if self.noise.has_readout else 0.0
        for proj in self._projectors():
            if flips:
                proj = apply_readout_flips(proj, self.n, flips)
            obs = np.diag(proj.astype(complex))
            obs = _run_passes(obs, _ordered(self._post_passes, True), self.n, adjoint=True)
            mats.append(obs[np.ix_(s, s)].T * rho_s)
        return np.asarray(mats)  # (2 * 2^|keep|, |S|, |S|)

    def evaluate(self, oracles: Sequence, method: str = "auto") -> tuple[np.ndarray, np.ndarray]:
        oracles = list(oracles)
        d = self._signs(oracles)
        if self.noise.is_pure:
            amps = self._u_post @ (self._psi_pre[:, None] * d.T)
            p_full = np.abs(amps) ** 2
            return self._reduce(p_full / p_full.sum(axis=0, keepdims=True))
        n_obs = 2 * 2 ** len(self.keep)
        use_heis = method == "heisenberg" or (method == "auto" and (self._heis is not None or len(oracles) > n_obs))
        if use_heis:
            if self._heis is None:
                self._heis = self._build_heisenberg()
            vals = np.einsum("bi,mij,bj->bm", d, self._heis, d.conj(), optimize=True).real
            vals = np.clip(vals, 0.0, None)
            total = vals[:, 0::2].sum(axis=1, keepdims=True)
            return vals[:, 0::2] / total, vals[:, 1::2] / total
        s = self.support
        cols = []
        for row in d:
            full = np.ones(2**self.n, dtype=complex)
            full[s] = row
            rho = self._rho_pre * (full[:, None] * full.conj()[None, :])
            rho = _run_passes(rho, self._post_passes, self.n)
            cols.append(np.clip(np.real(np.diag(rho)), 0.0, None))
        p_full = np.asarray(cols).T
        return self._reduce(p_full / p_full.sum(axis=0, keepdims=True))
