"""Grover circuits on a trapped-ion native gate set, noisy simulation, and
randomized compiling / error detection studies."""

from .circuit import Circuit, Gate, GateKind, circuit_unitary, fidelity, load_circuit, save_circuit
from .grover import GroverConfig, MczStyle, OracleSpec, build_grover, decompose_mcz, enumerate_cz_oracles
from .metrics import improvement_factor, normal_fit, tvd
from .noise import NoiseSpec, kraus_channels
from .simulator import Distribution, OracleSweep, run_exact, run_shots
from .suppression import Mode, post_select, randomize, rc_aggregate, suppress, twirl_gate
from .transpiler import transpile

__all__ = [
    "Circuit", "Distribution", "Gate", "GateKind", "GroverConfig", "MczStyle", "Mode", "NoiseSpec",
    "OracleSpec", "OracleSweep", "build_grover", "circuit_unitary", "decompose_mcz", "enumerate_cz_oracles",
    "fidelity", "improvement_factor", "kraus_channels", "load_circuit", "normal_fit", "post_select",
    "randomize", "rc_aggregate", "run_exact", "run_shots", "save_circuit", "suppress", "transpile", "tvd",
    "twirl_gate",
]
