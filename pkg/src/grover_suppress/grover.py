"""Grover circuit construction with ancilla-assisted multi-controlled-Z gates."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .circuit import ANCILLA, DATA, Circuit, Gate, GateKind

G = GateKind


class MczStyle(str, Enum):
    TOFFOLI_6CX = "toffoli_6cx"
    RP_TOFFOLI_3CX = "rp_toffoli_3cx"


class AncillaBudgetError(ValueError):
    pass


class Realization(str, Enum):
    IDEAL_DIAGONAL = "ideal_diagonal"
    GATE_LIST = "gate_list"


# Local gate sequences on (c0, c1, target) = (0, 1, 2).
_TOFFOLI_6CX = (
    (G.H, (2,)), (G.CX, (1, 2)), (G.TDG, (2,)), (G.CX, (0, 2)), (G.T, (2,)),
    (G.CX, (1, 2)), (G.TDG, (2,)), (G.CX, (0, 2)), (G.T, (1,)), (G.T, (2,)),
    (G.H, (2,)), (G.CX, (0, 1)), (G.T, (0,)), (G.TDG, (1,)), (G.CX, (0, 1)),
)
# Margolus-type relative-phase Toffoli; the sequence is its own inverse.
_RP_TOFFOLI_3CX = (
    (G.H, (2,)), (G.T, (2,)), (G.CX, (1, 2)), (G.TDG, (2,)), (G.CX, (0, 2)),
    (G.T, (2,)), (G.CX, (1, 2)), (G.TDG, (2,)), (G.H, (2,)),
)


def _toffoli_gates(style: MczStyle, qubits: Sequence[int]) -> list[Gate]:
    seq = _TOFFOLI_6CX if MczStyle(style) is MczStyle.TOFFOLI_6CX else _RP_TOFFOLI_3CX
    return [Gate(kind, tuple(qubits[i] for i in local)) for kind, local in seq]


def expand_toffoli(style: MczStyle) -> Circuit:
    """Three-qubit circuit (controls 0, 1; target 2) realising a Toffoli in ``style``."""
    return Circuit(3, tuple(_toffoli_gates(style, (0, 1, 2))))


def expand_toffolis(c: Circuit) -> Circuit:
    """Replace every TOFFOLI / RP_TOFFOLI gate by its CX-level construction."""
    out: list[Gate] = []
    for g in c.gates:
        if g.kind is G.TOFFOLI:
            out.extend(_toffoli_gates(MczStyle.TOFFOLI_6CX, g.qubits))
        elif g.kind is G.RP_TOFFOLI:
            out.extend(_toffoli_gates(MczStyle.RP_TOFFOLI_3CX, g.qubits))
        else:
            out.append(g)
    return c.with_gates(out)


def mcz_ancilla_count(n_controls: int) -> int:
    return max(n_controls - 1, 0)


def _mcz_ladder(controls: Sequence[int], target: int, ancillas: Sequence[int],
                style: MczStyle, expand: bool) -> list[Gate]:
    k = len(controls)
    if k == 1:
        return [Gate(G.CZ, (controls[0], target))]
    if len(ancillas) < k - 1:
        raise AncillaBudgetError(f"ancilla budget: MCZ with {k} controls needs {k - 1} ancillas")
    kind = G.TOFFOLI if MczStyle(style) is MczStyle.TOFFOLI_6CX else G.RP_TOFFOLI
    compute = [Gate(kind, (controls[0], controls[1], ancillas[0]))]
    for i in range(2, k):
        compute.append(Gate(kind, (controls[i], ancillas[i - 2], ancillas[i - 1])))
    # both Toffoli kinds are involutions, so the mirror is the reversed ladder
    gates = compute + [Gate(G.CZ, (ancillas[k - 2], target))] + compute[::-1]
    if expand:
        flat: list[Gate] = []
        for g in gates:
            if g.kind in (G.TOFFOLI, G.RP_TOFFOLI):
                flat.extend(_toffoli_gates(style, g.qubits))
            else:
                flat.append(g)
        gates = flat
    return gates


def decompose_mcz(k: int, style: MczStyle = MczStyle.RP_TOFFOLI_3CX, expand: bool = True) -> Circuit:
    """AND-ladder decomposition of a Z gate with ``k`` controls.

    Qubits ``0..k-1`` are controls, ``k`` is the target and ``k+1..2k-1`` are
    ancillas that start and end in ``|0>``.
    """
    if k < 2:
        raise ValueError("decompose_mcz needs k >= 2")
    n_anc = mcz_ancilla_count(k)
    width = k + 1 + n_anc
    gates = _mcz_ladder(range(k), k, range(k + 1, width), style, expand)
    roles = (DATA,) * (k + 1) + (ANCILLA,) * n_anc
    return Circuit(width, tuple(gates), roles)


# ---------------------------------------------------------------------------
# oracles

def _phase_function(n: int, terms: Iterable[Sequence[int]], x_mask: int) -> np.ndarray:
    """Boolean phase function of X-conjugated controlled-Z terms over all ``2^n`` inputs."""
    x = np.arange(2**n) ^ x_mask
    f = np.zeros(2**n, dtype=bool)
    for term in terms:
        hit = np.ones(2**n, dtype=bool)
        for q in term:
            hit &= ((x >> q) & 1).astype(bool)
        f ^= hit
    return f


@dataclass(frozen=True)
class OracleSpec:
    """Phase oracle marking ``marked`` basis states of ``n_data`` qubits.

    ``terms`` lists the qubit sets of controlled-Z gates (two qubits = CZ,
    more = multi-controlled Z) applied between two layers of X gates on the
    qubits set in ``x_mask``. It is empty for ideal-diagonal oracles.
    """

    n_data: int
    marked: frozenset[int]
    realization: Realization = Realization.IDEAL_DIAGONAL
    terms: tuple[tuple[int, ...], ...] = ()
    x_mask: int = 0

    def __post_init__(self):
        object.__setattr__(self, "marked", frozenset(int(m) for m in self.marked))
        object.__setattr__(self, "realization", Realization(self.realization))
        object.__setattr__(self, "terms", tuple(tuple(int(q) for q in t) for t in self.terms))
        size = 2**self.n_data
        if not 1 <= len(self.marked) <= size - 1:
            raise ValueError(f"marked set size must be in [1, {size - 1}]")
        if any(not 0 <= m < size for m in self.marked):
            raise ValueError("marked index outside register")
        if self.realization is Realization.GATE_LIST:
            for t in self.terms:
                if len(t) < 2 or len(set(t)) != len(t) or max(t) >= self.n_data:
                    raise ValueError(f"bad oracle term {t}")
            f = _phase_function(self.n_data, self.terms, self.x_mask)
            if set(np.flatnonzero(f).tolist()) != set(self.marked):
                raise ValueError("gate realisation does not mark the declared set")

    @classmethod
    def ideal(cls, n_data: int, marked: Iterable[int]) -> "OracleSpec":
        return cls(n_data, frozenset(marked))

    @classmethod
    def from_terms(cls, n_data: int, terms: Iterable[Sequence[int]], x_mask: int = 0) -> "OracleSpec":
        terms = tuple(tuple(t) for t in terms)
        f = _phase_function(n_data, terms, x_mask)
        return cls(n_data, frozenset(np.flatnonzero(f).tolist()), Realization.GATE_LIST, terms, x_mask)

    @classmethod
    def subcube(cls, n_data: int, fixed: dict[int, int]) -> "OracleSpec":
        """Gate-list oracle marking every state whose qubits ``fixed`` hold the given bits."""
        qubits = tuple(sorted(fixed))
        mask = sum(1 << q for q in qubits if fixed[q] == 0)
        return cls.from_terms(n_data, [qubits], mask)

    @property
    def solutions(self) -> int:
        return len(self.marked)

    def phase_signs(self) -> np.ndarray:
        s = np.ones(2**self.n_data)
        s[sorted(self.marked)] = -1.0
        return s

    def phases(self) -> tuple[float, ...]:
        return tuple(math.pi if m in self.marked else 0.0 for m in range(2**self.n_data))

    @property
    def ancillas_needed(self) -> int:
        if self.realization is Realization.IDEAL_DIAGONAL:
            return 0
        return max((mcz_ancilla_count(len(t) - 1) for t in self.terms), default=0)

    def gates(self, ancillas: Sequence[int] = (), style: MczStyle = MczStyle.RP_TOFFOLI_3CX,
              expand: bool = True) -> list[Gate]:
        if self.realization is Realization.IDEAL_DIAGONAL:
            return [Gate(G.DIAG_ORACLE, tuple(range(self.n_data)), self.phases())]
        flips = [Gate(G.X, (q,)) for q in range(self.n_data) if (self.x_mask >> q) & 1]
        body: list[Gate] = []
        for t in self.terms:
            body.extend(_mcz_ladder(t[:-1], t[-1], ancillas, style, expand))
        return flips + body + flips

    def to_dict(self) -> dict:
        return {
            "n": self.n_data,
            "marked": sorted(self.marked),
            "realization": self.realization.value,
            "terms": [list(t) for t in self.terms],
            "x_mask": self.x_mask,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OracleSpec":
        return cls(int(d["n"]), frozenset(d["marked"]), Realization(d.get("realization", "ideal_diagonal")),
                   tuple(tuple(t) for t in d.get("terms", ())), int(d.get("x_mask", 0)))


@dataclass(frozen=True)
class GroverConfig:
    """Grover circuit parameters.

    ``oracle=None`` emits a DIAG_ORACLE placeholder on the data qubits whose
    phase mask is supplied at simulation time.
    """

    n_data: int
    oracle: OracleSpec | None = None
    iterations: int = 1
    mcz_style: MczStyle = MczStyle.RP_TOFFOLI_3CX
    share_ancillas: bool = True
    max_ancillas: int | None = None
    expand: bool = True

    def __post_init__(self):
        if self.n_data < 2:
            raise ValueError("Grover circuits need at least two data qubits")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.oracle is not None and self.oracle.n_data != self.n_data:
            raise ValueError("oracle width does not match n_data")


def build_grover(cfg: GroverConfig) -> Circuit:
    n = cfg.n_data
    qaa_anc = mcz_ancilla_count(n - 1)
    orc_anc = cfg.oracle.ancillas_needed if cfg.oracle is not None else 0
    total = max(qaa_anc, orc_anc) if cfg.share_ancillas else qaa_anc + orc_anc
    if cfg.max_ancillas is not None and total > cfg.max_ancillas:
        raise AncillaBudgetError(f"ancilla budget: need {total}, allowed {cfg.max_ancillas}")
    qaa_pool = list(range(n, n + qaa_anc))
    orc_pool = list(range(n, n + orc_anc)) if cfg.share_ancillas else list(range(n + qaa_anc, n + total))

    data = range(n)
    gates = [Gate(G.H, (q,)) for q in data]
    for _ in range(cfg.iterations):
        if cfg.oracle is None:
            gates.append(Gate(G.DIAG_ORACLE, tuple(data)))
        else:
            gates.extend(cfg.oracle.gates(orc_pool, cfg.mcz_style, cfg.expand))
        gates += [Gate(G.H, (q,)) for q in data] + [Gate(G.X, (q,)) for q in data]
        gates += _mcz_ladder(range(n - 1), n - 1, qaa_pool, cfg.mcz_style, cfg.expand)
        gates += [Gate(G.X, (q,)) for q in data] + [Gate(G.H, (q,)) for q in data]
    roles = (DATA,) * n + (ANCILLA,) * total
    return Circuit(n + total, tuple(gates), roles)


def ideal_distribution(n_data: int, marked: Iterable[int], iterations: int = 1) -> np.ndarray:
    """Closed-form Grover output distribution over the data register."""
    marked = sorted(set(marked))
    size, r = 2**n_data, len(marked)
    theta = math.asin(math.sqrt(r / size))
    p_good = math.sin((2 * iterations + 1) * theta) ** 2
    out = np.full(size, (1 - p_good) / (size - r) if r < size else 0.0)
    out[marked] = p_good / r
    return out


# ---------------------------------------------------------------------------
# oracle sampling and enumeration

def random_marked_sets(n_data: int, r: int, count: int | str, seed: int | None = None) -> list[OracleSpec]:
    """Distinct size-``r`` marked sets, sampled uniformly; ``count="all"`` enumerates."""
    size = 2**n_data
    if not 1 <= r <= size - 1:
        raise ValueError("r must be in [1, 2^n - 1]")
    total = math.comb(size, r)
    if count == "all":
        if total > 1_000_000:
            raise ValueError(f"exhaustive enumeration of {total} sets refused")
        return [OracleSpec.ideal(n_data, c) for c in itertools.combinations(range(size), r)]
    count = int(count)
    if count > total:
        raise ValueError(f"only {total} distinct sets of size {r} exist")
    rng = np.random.default_rng(seed)
    seen: set[frozenset[int]] = set()
    out: list[OracleSpec] = []
    while len(out) < count:
        s = frozenset(rng.choice(size, r, replace=False).tolist())
        if s not in seen:
            seen.add(s)
            out.append(OracleSpec.ideal(n_data, s))
    return out


def enumerate_cz_oracles(n_data: int, k_cz: int, allow_x_conjugation: bool = False,
                         solutions: int | None = None) -> list[OracleSpec]:
    """All distinct phase functions built from exactly ``k_cz`` CZ gates on distinct pairs.

    Oracles are deduplicated by phase function. With ``allow_x_conjugation``
    the CZ layer may be sandwiched between X gates on any touched qubits.
    """
    if n_data > 8 or k_cz > 4:
        raise ValueError("search-space bound exceeded (n <= 8, k_cz <= 4)")
    if k_cz < 1:
        raise ValueError("k_cz must be >= 1")
    pairs = list(itertools.combinations(range(n_data), 2))
    idx = np.arange(2**n_data)
    seen: set[bytes] = set()
    out: list[OracleSpec] = []
    for edges in itertools.combinations(pairs, k_cz):
        f0 = _phase_function(n_data, edges, 0)
        if allow_x_conjugation:
            touched = sorted({q for e in edges for q in e})
            masks = [sum(1 << q for q, b in zip(touched, bits) if b)
                     for bits in itertools.product((0, 1), repeat=len(touched))]
        else:
            masks = [0]
        for m in masks:
            f = f0[idx ^ m] if m else f0
            count = int(f.sum())
            if count == 0 or count == 2**n_data:
                continue
            key = np.packbits(f).tobytes()
            if key in seen:
                continue
            seen.add(key)
            if solutions is not None and count != solutions:
                continue
            out.append(OracleSpec(n_data, frozenset(np.flatnonzero(f).tolist()),
                                  Realization.GATE_LIST, edges, m))
    return out
