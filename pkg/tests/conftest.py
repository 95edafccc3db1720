import math
import sys

import numpy as np
import pytest

from grover_suppress.circuit import Circuit, Gate, GateKind as G

ONE_Q = (G.H, G.X, G.T, G.TDG, G.RZ)
TWO_Q = (G.CX, G.CZ)


def random_circuit(rng: np.random.Generator, width: int, n_gates: int,
                   one_q=ONE_Q, two_q=TWO_Q) -> Circuit:
    gates = []
    for _ in range(n_gates):
        if width >= 2 and rng.random() < 0.35:
            a, b = rng.choice(width, size=2, replace=False)
            gates.append(Gate(two_q[rng.integers(len(two_q))], (int(a), int(b))))
        else:
            kind = one_q[rng.integers(len(one_q))]
            params = (float(rng.uniform(-math.pi, math.pi)),) if kind is G.RZ else ()
            gates.append(Gate(kind, (int(rng.integers(width)),), params))
    return Circuit(width, tuple(gates))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# --- acceptance summary ---------------------------------------------------------
def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
