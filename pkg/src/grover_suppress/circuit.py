"""Gate set, circuit container, dense gate semantics and JSON-lines serialization.

Conventions used throughout the package:

* ``RZ(t) = diag(exp(-i t/2), exp(+i t/2))``.
* Qubit 0 is the least-significant bit of a basis-state index.
* A gate's local matrix is written with ``qubits[0]`` as the most-significant
  local bit, so ``CX(c, t)`` has the textbook matrix.
* Global phase is never tracked; equivalence is ``|tr(U^dag V)| / 2^n``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._kernels import sv_apply1, sv_apply2

MAX_DENSE_QUBITS = 12

DATA = "data"
ANCILLA = "ancilla"


class GateKind(str, Enum):
    H = "H"
    X = "X"
    Y = "Y"
    Z = "Z"
    SX = "SX"
    T = "T"
    TDG = "TDG"
    RZ = "RZ"
    U = "U"  # fused single-qubit gate, params = ZXZXZ angles (t1, t2, t3)
    GPI = "GPI"
    GPI2 = "GPI2"
    CX = "CX"
    CZ = "CZ"
    XX = "XX"
    MS = "MS"
    TOFFOLI = "TOFFOLI"
    RP_TOFFOLI = "RP_TOFFOLI"
    MCZ = "MCZ"
    DIAG_ORACLE = "DIAG_ORACLE"


ONE_QUBIT_KINDS = frozenset(
    {
        GateKind.H, GateKind.X, GateKind.Y, GateKind.Z, GateKind.SX, GateKind.T,
        GateKind.TDG, GateKind.RZ, GateKind.U, GateKind.GPI, GateKind.GPI2,
    }
)
TWO_QUBIT_KINDS = frozenset({GateKind.CX, GateKind.CZ, GateKind.XX, GateKind.MS})
THREE_QUBIT_KINDS = frozenset({GateKind.TOFFOLI, GateKind.RP_TOFFOLI})
ABSTRACT_KINDS = frozenset({GateKind.MCZ, GateKind.DIAG_ORACLE})
NATIVE_KINDS = frozenset({GateKind.GPI, GateKind.GPI2, GateKind.MS})

_N_PARAMS = {
    GateKind.RZ: 1, GateKind.GPI: 1, GateKind.GPI2: 1, GateKind.XX: 1,
    GateKind.MS: 2, GateKind.U: 3,
}


class UnexpandableGateError(ValueError):
    """Raised when an abstract gate carries no concrete matrix data."""


class DenseBoundError(ValueError):
    """Raised when a dense operation would exceed ``MAX_DENSE_QUBITS``."""


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        qs = self.qubits
        if len(set(qs)) != len(qs):
            raise ValueError(f"repeated qubit in {kind.value} {qs}")
        if any(q < 0 for q in qs):
            raise ValueError(f"negative qubit index in {qs}")
        if not all(math.isfinite(p) for p in self.params):
            raise ValueError(f"non-finite parameter in {kind.value}")
        if kind in ONE_QUBIT_KINDS:
            arity = 1
        elif kind in TWO_QUBIT_KINDS:
            arity = 2
        elif kind in THREE_QUBIT_KINDS:
            arity = 3
        elif kind is GateKind.MCZ:
            arity = None
            if len(qs) < 2:
                raise ValueError("MCZ needs at least one control and a target")
        else:
            arity = None
            if len(qs) < 1:
                raise ValueError("DIAG_ORACLE needs at least one qubit")
            if self.params and len(self.params) != 2 ** len(qs):
                raise ValueError("DIAG_ORACLE phase mask must have 2^k entries")
        if arity is not None and len(qs) != arity:
            raise ValueError(f"{kind.value} acts on {arity} qubit(s), got {len(qs)}")
        if kind is not GateKind.DIAG_ORACLE and len(self.params) != _N_PARAMS.get(kind, 0):
            raise ValueError(f"{kind.value} takes {_N_PARAMS.get(kind, 0)} parameter(s)")

    @property
    def arity(self) -> int:
        return len(self.qubits)

    @property
    def is_abstract(self) -> bool:
        return self.kind in ABSTRACT_KINDS

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "qubits": list(self.qubits), "params": list(self.params)}


@dataclass(frozen=True)
class Circuit:
    width: int
    gates: tuple[Gate, ...] = ()
    roles: tuple[str, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        roles = self.roles if self.roles is not None else (DATA,) * self.width
        object.__setattr__(self, "roles", tuple(roles))
        if self.width < 0:
            raise ValueError("width must be non-negative")
        if len(self.roles) != self.width:
            raise ValueError("role list length must equal width")
        for r in self.roles:
            if r not in (DATA, ANCILLA):
                raise ValueError(f"unknown qubit role {r!r}")
        for g in self.gates:
            if max(g.qubits) >= self.width:
                raise ValueError(f"gate {g.kind.value}{g.qubits} outside width {self.width}")

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    @property
    def data_qubits(self) -> tuple[int, ...]:
        return tuple(q for q, r in enumerate(self.roles) if r == DATA)

    @property
    def ancilla_qubits(self) -> tuple[int, ...]:
        return tuple(q for q, r in enumerate(self.roles) if r == ANCILLA)

    def with_gates(self, gates: Iterable[Gate]) -> "Circuit":
        return Circuit(self.width, tuple(gates), self.roles)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.width != self.width:
            raise ValueError("cannot concatenate circuits of different width")
        return Circuit(self.width, self.gates + other.gates, self.roles)


# ---------------------------------------------------------------------------
# gate matrices

I2 = np.eye(2, dtype=complex)
X_MAT = np.array([[0, 1], [1, 0]], dtype=complex)
Y_MAT = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z_MAT = np.array([[1, 0], [0, -1]], dtype=complex)
H_MAT = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
SX_MAT = np.array([[1, -1j], [-1j, 1]], dtype=complex) / math.sqrt(2)
PAULIS = {"I": I2, "X": X_MAT, "Y": Y_MAT, "Z": Z_MAT}


def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def gpi(phi: float) -> np.ndarray:
    return np.array([[0, np.exp(-1j * phi)], [np.exp(1j * phi), 0]])


def gpi2(phi: float) -> np.ndarray:
    return np.array([[1, -1j * np.exp(-1j * phi)], [-1j * np.exp(1j * phi), 1]]) / math.sqrt(2)


def zxzxz(t1: float, t2: float, t3: float) -> np.ndarray:
    """``RZ(t3) SX RZ(t2) SX RZ(t1)`` as a matrix (``RZ(t1)`` acts first)."""
    return rz(t3) @ SX_MAT @ rz(t2) @ SX_MAT @ rz(t1)


def xx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return c * np.eye(4, dtype=complex) - 1j * s * np.kron(X_MAT, X_MAT)


def ms(phi0: float, phi1: float, theta: float = math.pi / 2) -> np.ndarray:
    d = np.kron(rz(phi0), rz(phi1))
    return d @ xx(theta) @ d.conj().T


CX_MAT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
CZ_MAT = np.diag([1, 1, 1, -1]).astype(complex)
TOFFOLI_MAT = np.eye(8, dtype=complex)[[0, 1, 2, 3, 4, 5, 7, 6]]


def _rp_toffoli_matrix() -> np.ndarray:
    # Matrix of the 3-CX construction in grover.expand_toffoli, basis |c0 c1 t>:
    # Toffoli pattern with -1 on |101> and -i/+i on the swapped |110>, |111> pair.
    m = np.zeros((8, 8), dtype=complex)
    for i in range(6):
        m[i, i] = 1
    m[5, 5] = -1
    m[6, 7] = -1j
    m[7, 6] = 1j
    return m


RP_TOFFOLI_MAT = _rp_toffoli_matrix()


def diag_oracle_matrix(phases: Sequence[float]) -> np.ndarray:
    """Local matrix of a diagonal oracle.

    ``phases[m]`` is the phase applied to the basis state in which
    ``qubits[k]`` holds bit ``k`` of ``m`` (least-significant-first, like the
    global register). It is reordered to the most-significant-first local
    layout used by every other gate.
    """
    k = int(round(math.log2(len(phases))))
    local = np.empty(2**k, dtype=complex)
    for m, ph in enumerate(phases):
        idx = 0
        for b in range(k):
            if (m >> b) & 1:
                idx |= 1 << (k - 1 - b)
        local[idx] = np.exp(1j * ph)
    return np.diag(local)


def gate_matrix(g: Gate) -> np.ndarray:
    """Local ``2^k x 2^k`` matrix of ``g``."""
    k, p = g.kind, g.params
    if k is GateKind.H:
        return H_MAT
    if k is GateKind.X:
        return X_MAT
    if k is GateKind.Y:
        return Y_MAT
    if k is GateKind.Z:
        return Z_MAT
    if k is GateKind.SX:
        return SX_MAT
    if k is GateKind.T:
        return np.diag([1, np.exp(0.25j * math.pi)])
    if k is GateKind.TDG:
        return np.diag([1, np.exp(-0.25j * math.pi)])
    if k is GateKind.RZ:
        return rz(p[0])
    if k is GateKind.U:
        return zxzxz(*p)
    if k is GateKind.GPI:
        return gpi(p[0])
    if k is GateKind.GPI2:
        return gpi2(p[0])
    if k is GateKind.CX:
        return CX_MAT
    if k is GateKind.CZ:
        return CZ_MAT
    if k is GateKind.XX:
        return xx(p[0])
    if k is GateKind.MS:
        return ms(p[0], p[1])
    if k is GateKind.TOFFOLI:
        return TOFFOLI_MAT
    if k is GateKind.RP_TOFFOLI:
        return RP_TOFFOLI_MAT
    if k is GateKind.MCZ:
        d = np.ones(2 ** g.arity, dtype=complex)
        d[-1] = -1
        return np.diag(d)
    if k is GateKind.DIAG_ORACLE:
        if not p:
            raise UnexpandableGateError("DIAG_ORACLE placeholder has no phase mask")
        return diag_oracle_matrix(p)
    raise UnexpandableGateError(f"no matrix for {k}")  # pragma: no cover


def apply_matrix(state: np.ndarray, mat: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Apply a local matrix to ``state`` of shape ``(2^n,)`` or ``(2^n, K)``."""
    k = len(qubits)
    extra = state.shape[1:]
    psi = state.reshape((2,) * n + extra)
    axes = [n - 1 - q for q in qubits]
    m = mat.reshape((2,) * (2 * k))
    out = np.tensordot(m, psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(state.shape)


def _check_dense(width: int) -> None:
    if width > MAX_DENSE_QUBITS:
        raise DenseBoundError(f"dense bound exceeded: {width} > {MAX_DENSE_QUBITS} qubits")


def unitary_of_gate(g: Gate, width: int) -> np.ndarray:
    _check_dense(width)
    if max(g.qubits) >= width:
        raise ValueError("gate outside register")
    mat = gate_matrix(g)
    return apply_matrix(np.eye(2**width, dtype=complex), mat, g.qubits, width)


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Dense unitary of ``c``; the first gate is applied first."""
    _check_dense(c.width)
    u = np.eye(2**c.width, dtype=complex)
    for g in c.gates:
        mat = np.ascontiguousarray(gate_matrix(g), dtype=complex)
        if g.arity == 1:
            sv_apply1(u, g.qubits[0], mat)
        elif g.arity == 2:
            sv_apply2(u, g.qubits[0], g.qubits[1], mat)
        else:
            u = apply_matrix(u, mat, g.qubits, c.width)
    return u


def fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """Phase-insensitive overlap ``|tr(U^dag V)| / d``."""
    return float(abs(np.vdot(u, v)) / u.shape[0])


def equal_up_to_phase(u: np.ndarray, v: np.ndarray, atol: float = 1e-10) -> bool:
    idx = np.unravel_index(np.argmax(np.abs(v)), v.shape)
    if abs(u[idx]) < 1e-14:
        return False
    phase = v[idx] / u[idx]
    phase /= abs(phase)
    return bool(np.allclose(u * phase, v, atol=atol))


# ---------------------------------------------------------------------------
# inverses

def inverse_gate(g: Gate) -> list[Gate]:
    k, q, p = g.kind, g.qubits, g.params
    if k in (GateKind.H, GateKind.X, GateKind.Y, GateKind.Z, GateKind.GPI, GateKind.CX,
             GateKind.CZ, GateKind.TOFFOLI, GateKind.MCZ):
        return [g]
    if k is GateKind.T:
        return [Gate(GateKind.TDG, q)]
    if k is GateKind.TDG:
        return [Gate(GateKind.T, q)]
    if k is GateKind.SX:
        return [Gate(GateKind.GPI2, q, (math.pi,))]
    if k is GateKind.GPI2:
        return [Gate(GateKind.GPI2, q, (p[0] + math.pi,))]
    if k is GateKind.RZ:
        return [Gate(GateKind.RZ, q, (-p[0],))]
    if k is GateKind.U:
        t1, t2, t3 = p
        return [Gate(GateKind.U, q, (-t3 - math.pi, -t2, -t1 + math.pi))]
    if k is GateKind.XX:
        return [Gate(GateKind.XX, q, (-p[0],))]
    if k is GateKind.MS:
        return [Gate(GateKind.MS, q, (p[0] + math.pi, p[1]))]
    if k is GateKind.RP_TOFFOLI:
        return [Gate(GateKind.RP_TOFFOLI, q)]  # the 3-CX form is an involution
    if k is GateKind.DIAG_ORACLE:
        if not p:
            return [g]
        return [Gate(GateKind.DIAG_ORACLE, q, tuple(-x for x in p))]
    raise ValueError(f"no inverse for {k}")  # pragma: no cover


def inverse(c: Circuit) -> Circuit:
    gates: list[Gate] = []
    for g in reversed(c.gates):
        gates.extend(inverse_gate(g))
    return c.with_gates(gates)


# ---------------------------------------------------------------------------
# counting

@dataclass(frozen=True)
class GateCounts:
    one_qubit: int
    two_qubit: int
    three_qubit: int
    abstract: int
    by_kind: dict

    @property
    def total(self) -> int:
        return self.one_qubit + self.two_qubit + self.three_qubit + self.abstract


def gate_counts(c: Circuit) -> GateCounts:
    by_kind: dict[str, int] = {}
    n1 = n2 = n3 = nabs = 0
    for g in c.gates:
        by_kind[g.kind.value] = by_kind.get(g.kind.value, 0) + 1
        if g.is_abstract:
            nabs += 1
        elif g.arity == 1:
            n1 += 1
        elif g.arity == 2:
            n2 += 1
        else:
            n3 += 1
    return GateCounts(n1, n2, n3, nabs, dict(sorted(by_kind.items())))


# ---------------------------------------------------------------------------
# serialization

def circuit_to_jsonl(c: Circuit) -> str:
    lines = [json.dumps({"width": c.width, "roles": list(c.roles)})]
    lines += [json.dumps(g.to_dict()) for g in c.gates]
    return "\n".join(lines) + "\n"


def circuit_from_jsonl(text: str) -> Circuit:
    rows = [json.loads(line) for line in text.splitlines() if line.strip()]
    if not rows or "width" not in rows[0]:
        raise ValueError("missing circuit header line")
    head = rows[0]
    gates = [Gate(GateKind(r["kind"]), tuple(r["qubits"]), tuple(r.get("params", ()))) for r in rows[1:]]
    return Circuit(int(head["width"]), tuple(gates), tuple(head.get("roles") or (DATA,) * head["width"]))


def save_circuit(c: Circuit, path: str | Path) -> None:
    Path(path).write_text(circuit_to_jsonl(c))


def load_circuit(path: str | Path) -> Circuit:
    return circuit_from_jsonl(Path(path).read_text())


@lru_cache(maxsize=None)
def pauli_pair_matrix(a: str, b: str) -> np.ndarray:
    return np.kron(PAULIS[a], PAULIS[b])
