"""Compilation to the trapped-ion native set {GPI, GPI2, MS}.

Pipeline: two-qubit gates become XX(pi/2) plus single-qubit dressing, every
run of single-qubit gates on a wire is fused, each fused gate is written as
``RZ(t3) SX RZ(t2) SX RZ(t1)`` and realised by two GPI2 gates with the
leftover Z rotation carried forward. Carried Z rotations are pushed through
XX gates, which turns them into MS gates, and through diagonal oracles, which
they commute with. Whatever remains at the end of a measured wire becomes a
GPI pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .circuit import (
    ABSTRACT_KINDS, Circuit, Gate, GateKind, SX_MAT, gate_matrix, rz, zxzxz,
)
from .grover import expand_toffolis

G = GateKind
HALF_PI = math.pi / 2
ANGLE_EPS = 1e-12


def normalize_angle(a: float) -> float:
    """Map ``a`` into (-pi, pi]."""
    a = math.remainder(a, 2 * math.pi)
    return math.pi if a <= -math.pi + 1e-15 else a


@dataclass(frozen=True)
class EulerTriple:
    theta1: float
    theta2: float
    theta3: float
    global_phase: float = 0.0

    def matrix(self) -> np.ndarray:
        return np.exp(1j * self.global_phase) * zxzxz(self.theta1, self.theta2, self.theta3)


@dataclass(frozen=True)
class CyclePlan:
    """GPI2 angles per qubit and cycle, shape ``(n_qubits, n_cycles, 3)``.

    ``phis[i, j]`` holds (phi1, phi2, phi3) for qubit ``i`` in cycle ``j``;
    phi3 is the Z rotation still owed after that cycle.
    """

    phis: np.ndarray
    boundaries: tuple[int, ...] = ()

    @property
    def residual(self) -> np.ndarray:
        return self.phis[:, -1, 2] if self.phis.shape[1] else np.zeros(self.phis.shape[0])


def _is_unitary(u: np.ndarray, atol: float = 1e-10) -> bool:
    return np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=atol)


def zxzxz_angles(u: np.ndarray) -> EulerTriple:
    """Angles with ``u = e^{i g} RZ(t3) SX RZ(t2) SX RZ(t1)``.

    Goes through the ZYZ form ``RZ(a) RY(b) RZ(c)``, using
    ``RY(b) ~ RZ(pi) SX RZ(b + pi) SX``. Diagonal inputs give ``t2 = pi``
    with ``t1 = 0``.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not _is_unitary(u):
        raise ValueError("zxzxz_angles needs a 2x2 unitary")
    v = u / np.sqrt(np.linalg.det(u))
    if abs(v[1, 0]) < 1e-12:
        beta, lam = 0.0, 0.0
        alpha = 2 * np.angle(v[1, 1])
    elif abs(v[1, 1]) < 1e-12:
        beta, lam = math.pi, 0.0
        alpha = 2 * np.angle(v[1, 0])
    else:
        beta = 2 * math.atan2(abs(v[1, 0]), abs(v[1, 1]))
        s, d = 2 * np.angle(v[1, 1]), 2 * np.angle(v[1, 0])
        alpha, lam = (s + d) / 2, (s - d) / 2
    t1, t2, t3 = (normalize_angle(x) for x in (lam, beta + math.pi, alpha + math.pi))
    recon = zxzxz(t1, t2, t3)
    phase = float(np.angle(np.vdot(recon, u)))
    return EulerTriple(t1, t2, t3, phase)


def euler_to_gpi2_pair(t: EulerTriple) -> tuple[float, float, float]:
    """GPI2 angles (phi1, phi2) and the owed Z rotation phi3.

    ``RZ(phi3) GPI2(phi2) GPI2(phi1)`` equals the triple's ZXZXZ product.
    """
    s1 = t.theta1
    s2 = s1 + t.theta2
    return -s1, -s2, s2 + t.theta3


def propagate_residual_z(thetas: np.ndarray | Sequence, boundaries: Sequence[int] = ()) -> CyclePlan:
    """Convert per-cycle ZXZXZ angles to GPI2 angles with carried Z rotations.

    ``thetas`` has shape ``(n_qubits, n_cycles, 3)``. The Z rotation left over
    from cycle ``j`` is added to the first angle of cycle ``j + 1``, so every
    entry is a cumulative sum of the earlier angles on the same wire.
    """
    th = np.asarray(thetas, dtype=float)
    if th.ndim != 3 or th.shape[2] != 3:
        raise ValueError("thetas must have shape (n_qubits, n_cycles, 3)")
    phis = np.empty_like(th)
    for i in range(th.shape[0]):
        carry = 0.0
        for j in range(th.shape[1]):
            phis[i, j] = euler_to_gpi2_pair(EulerTriple(th[i, j, 0] + carry, th[i, j, 1], th[i, j, 2]))
            carry = phis[i, j, 2]
    return CyclePlan(phis, tuple(boundaries))


def absorb_z_into_ms(z_left: Sequence[float], xx_gate: Gate, z_right: Sequence[float],
                     atol: float = 1e-10) -> Gate:
    """Merge ``RZ(-a) RZ(-b)``, XX(pi/2), ``RZ(a) RZ(b)`` (time order) into ``MS(a, b)``."""
    if xx_gate.kind is not G.XX or abs(xx_gate.params[0] - HALF_PI) > atol:
        raise ValueError("absorb_z_into_ms needs an XX(pi/2) gate")
    for left, right in zip(z_left, z_right):
        if abs(normalize_angle(left + right)) > atol:
            raise ValueError("Z rotations are not a conjugation pair; leave them explicit")
    return Gate(G.MS, xx_gate.qubits, tuple(normalize_angle(a) for a in z_right))


def residual_z_to_gpi(phi: float, qubit: int = 0) -> list[Gate]:
    """Two GPI gates (time order) whose product is ``RZ(phi)`` up to phase."""
    return [Gate(G.GPI, (qubit,), (normalize_angle(-phi / 2),)), Gate(G.GPI, (qubit,), (0.0,))]


def two_qubit_to_xx(g: Gate) -> list[Gate]:
    """Rewrite CX, CZ or MS as one XX(pi/2) with single-qubit dressing."""
    xx = Gate(G.XX, g.qubits, (HALF_PI,))
    a, b = g.qubits
    if g.kind is G.CZ:
        # CZ ~ (RZ(-pi/2) x RZ(-pi/2)) (H x H) XX(pi/2) (H x H)
        return [Gate(G.H, (a,)), Gate(G.H, (b,)), xx, Gate(G.H, (a,)), Gate(G.H, (b,)),
                Gate(G.RZ, (a,), (-HALF_PI,)), Gate(G.RZ, (b,), (-HALF_PI,))]
    if g.kind is G.CX:
        return [Gate(G.H, (b,))] + two_qubit_to_xx(Gate(G.CZ, g.qubits)) + [Gate(G.H, (b,))]
    if g.kind is G.MS:
        p0, p1 = g.params
        return [Gate(G.RZ, (a,), (-p0,)), Gate(G.RZ, (b,), (-p1,)), xx,
                Gate(G.RZ, (a,), (p0,)), Gate(G.RZ, (b,), (p1,))]
    if g.kind is G.XX and abs(normalize_angle(g.params[0] - HALF_PI)) < 1e-12:
        return [xx]
    raise ValueError(f"unsupported two-qubit gate {g.kind.value}{g.params}")


def lower_to_xx(c: Circuit) -> Circuit:
    """Rewrite ``c`` over single-qubit gates, XX(pi/2) and diagonal oracles."""
    c = expand_toffolis(c)
    out: list[Gate] = []
    for g in c.gates:
        if g.kind is G.MCZ:
            raise ValueError("abstract MCZ gate present; decompose it before transpiling")
        if g.kind is G.DIAG_ORACLE or g.arity == 1:
            out.append(g)
        else:
            out.extend(two_qubit_to_xx(g))
    return c.with_gates(out)


def _is_diagonal(u: np.ndarray) -> bool:
    return abs(u[0, 1]) < 1e-12 and abs(u[1, 0]) < 1e-12


def _is_identity(u: np.ndarray) -> bool:
    return _is_diagonal(u) and abs(np.angle(u[1, 1] / u[0, 0])) < 1e-12


def fuse_single_qubit_runs(c: Circuit) -> Circuit:
    """Collapse each run of single-qubit gates into one ``U`` gate.

    Identity runs are dropped. XX gates and diagonal oracles delimit runs.
    """
    pending: dict[int, np.ndarray] = {}
    out: list[Gate] = []

    def flush(q: int) -> None:
        u = pending.pop(q, None)
        if u is not None and not _is_identity(u):
            t = zxzxz_angles(u)
            out.append(Gate(G.U, (q,), (t.theta1, t.theta2, t.theta3)))

    for g in c.gates:
        if g.arity == 1 and g.kind is not G.DIAG_ORACLE:
            q = g.qubits[0]
            pending[q] = gate_matrix(g) @ pending.get(q, np.eye(2, dtype=complex))
            continue
        if g.kind not in (G.XX, G.DIAG_ORACLE):
            raise ValueError(f"fuse_single_qubit_runs got {g.kind.value}; lower to XX first")
        for q in g.qubits:
            flush(q)
        out.append(g)
    for q in sorted(pending):
        flush(q)
    return c.with_gates(out)


def synthesize_native(c: Circuit, measured: Iterable[int] | None = None,
                      final_z: str = "measured") -> Circuit:
    """Native gates for a circuit over single-qubit gates, XX(pi/2) and oracles.

    ``final_z`` selects which wires realise their last carried Z rotation as
    a GPI pair: ``"measured"`` (wires in ``measured``, default the data
    qubits), ``"always"`` or ``"never"``.
    """
    if final_z not in ("measured", "always", "never"):
        raise ValueError("final_z must be 'measured', 'always' or 'never'")
    measured_set = set(c.data_qubits if measured is None else measured)
    pending: dict[int, np.ndarray] = {}
    carry = [0.0] * c.width
    out: list[Gate] = []

    def close_segment(q: int) -> None:
        u = pending.pop(q, None)
        if u is None:
            return
        u = u @ rz(carry[q])
        if _is_diagonal(u):
            carry[q] = float(np.angle(u[1, 1] / u[0, 0]))
            return
        phi1, phi2, phi3 = euler_to_gpi2_pair(zxzxz_angles(u))
        out.append(Gate(G.GPI2, (q,), (normalize_angle(phi1),)))
        out.append(Gate(G.GPI2, (q,), (normalize_angle(phi2),)))
        carry[q] = phi3

    for g in c.gates:
        if g.kind is G.DIAG_ORACLE:
            for q in g.qubits:
                close_segment(q)
            out.append(g)  # carried Z rotations commute with a diagonal
        elif g.kind is G.XX:
            if abs(normalize_angle(g.params[0] - HALF_PI)) > 1e-12:
                raise ValueError("only XX(pi/2) can be synthesised")
            a, b = g.qubits
            close_segment(a)
            close_segment(b)
            # XX . (RZ(za) x RZ(zb)) = (RZ(za) x RZ(zb)) . MS(-za, -zb)
            out.append(absorb_z_into_ms((carry[a], carry[b]), g, (-carry[a], -carry[b])))
        elif g.arity == 1:
            q = g.qubits[0]
            pending[q] = gate_matrix(g) @ pending.get(q, np.eye(2, dtype=complex))
        else:
            raise ValueError(f"synthesize_native got {g.kind.value}; lower to XX first")
    for q in range(c.width):
        close_segment(q)
        z = normalize_angle(carry[q])
        keep = final_z == "always" or (final_z == "measured" and q in measured_set)
        if keep and abs(z) > ANGLE_EPS:
            out.extend(residual_z_to_gpi(z, q))
    return c.with_gates(out)


def transpile(c: Circuit, measured: Iterable[int] | None = None, final_z: str = "measured") -> Circuit:
    """Compile ``c`` to GPI, GPI2 and MS gates.

    Diagonal oracles pass through untouched. By default the final Z rotation
    is realised only on data qubits, since a Z rotation right before a
    computational-basis measurement is unobservable; pass ``measured`` (or
    ``final_z="always"``) to keep it elsewhere, e.g. on post-selected ancillas.
    """
    for g in c.gates:
        if g.kind in ABSTRACT_KINDS and g.kind is not G.DIAG_ORACLE:
            raise ValueError(f"abstract {g.kind.value} gate present")
    return synthesize_native(lower_to_xx(c), measured, final_z)


def measured_fidelity(u: np.ndarray, v: np.ndarray, measured: Iterable[int]) -> float:
    """Overlap of ``u`` and ``v`` allowing a diagonal phase on unmeasured wires after ``v``.

    Equals 1 exactly when ``u = D v`` up to global phase, with ``D`` diagonal
    and depending only on the bits of unmeasured qubits. That is the freedom
    ``transpile`` takes when it drops final Z rotations on unmeasured wires.
    """
    dim = u.shape[0]
    m = u @ v.conj().T
    d = np.diag(m)
    hidden = np.arange(dim)
    for q in measured:
        hidden &= ~(1 << q)
    groups = np.zeros(dim, dtype=complex)
    np.add.at(groups, hidden, d)
    return float(np.abs(groups).sum() / dim)


def native_counts(c: Circuit) -> dict[str, int]:
    counts = {"GPI": 0, "GPI2": 0, "MS": 0}
    for g in c.gates:
        if g.kind.value in counts:
            counts[g.kind.value] += 1
    return counts


def is_native(c: Circuit) -> bool:
    return all(g.kind in (G.GPI, G.GPI2, G.MS, G.DIAG_ORACLE) for g in c.gates)


__all__ = [
    "CyclePlan", "EulerTriple", "absorb_z_into_ms", "euler_to_gpi2_pair", "fuse_single_qubit_runs",
    "is_native", "lower_to_xx", "measured_fidelity", "native_counts", "normalize_angle", "propagate_residual_z",
    "residual_z_to_gpi", "synthesize_native", "transpile", "two_qubit_to_xx", "zxzxz_angles",
    "SX_MAT",
]
