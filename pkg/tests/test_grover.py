import json
import math

import numpy as np
import pytest

from grover_suppress.circuit import (
    Circuit, Gate, GateKind as G, TOFFOLI_MAT, circuit_unitary, fidelity, gate_counts, unitary_of_gate,
)
from grover_suppress.grover import (
    AncillaBudgetError, GroverConfig, MczStyle, OracleSpec, Realization, build_grover, decompose_mcz,
    enumerate_cz_oracles, expand_toffoli, ideal_distribution, random_marked_sets,
)
from grover_suppress.simulator import run_exact

RP = MczStyle.RP_TOFFOLI_3CX


def _table1_oracle(r: int) -> OracleSpec:
    # marking a subcube of dimension log2(r) needs one MCZ on the remaining 6 - log2(r) qubits
    free = int(math.log2(r))
    return OracleSpec.subcube(6, {q: 1 for q in range(free, 6)})


@pytest.mark.parametrize("r, total", [(1, 50), (2, 44), (4, 38), (8, 32), (16, 26)])
def test_two_qubit_totals_per_solution_count(r, total):
    c = build_grover(GroverConfig(6, _table1_oracle(r)))
    assert gate_counts(c).two_qubit == total
    assert len(c.ancilla_qubits) == 4


def test_sixteen_solution_one_cz_circuit_shape():
    o = OracleSpec.from_terms(6, [(2, 5)])
    assert o.solutions == 16
    c = build_grover(GroverConfig(6, o))
    assert (c.width, len(c.ancilla_qubits), gate_counts(c).two_qubit) == (10, 4, 26)


def test_c5z_needs_four_ancillas_and_25_two_qubit_gates():
    c = decompose_mcz(5, RP)
    assert len(c.ancilla_qubits) == 4
    assert gate_counts(c).two_qubit == 25


def test_c5z_with_full_toffolis_has_49_two_qubit_gates():
    assert gate_counts(decompose_mcz(5, MczStyle.TOFFOLI_6CX)).two_qubit == 49


def test_unexpanded_ladder_has_eight_toffolis_and_one_cz():
    n = gate_counts(decompose_mcz(5, RP, expand=False))
    assert n.three_qubit == 8 and n.two_qubit == 1


@pytest.mark.parametrize("style", list(MczStyle))
@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_mcz_ladder_is_exact_on_clean_ancillas(k, style):
    c = decompose_mcz(k, style)
    u = circuit_unitary(c)
    n_sys = k + 1
    clean = np.arange(2**n_sys)  # ancilla bits zero
    block = u[np.ix_(clean, clean)]
    target = np.ones(2**n_sys)
    target[-1] = -1
    assert np.allclose(block, np.diag(target), atol=1e-9)


def test_six_cx_toffoli_is_exact():
    u = circuit_unitary(expand_toffoli(MczStyle.TOFFOLI_6CX))
    assert fidelity(u, unitary_of_gate(Gate(G.TOFFOLI, (0, 1, 2)), 3)) == pytest.approx(1, abs=1e-10)
    assert gate_counts(expand_toffoli(MczStyle.TOFFOLI_6CX)).two_qubit == 6


def test_relative_phase_toffoli_pattern():
    c = expand_toffoli(RP)
    assert gate_counts(c).two_qubit == 3
    u = circuit_unitary(c)
    target = unitary_of_gate(Gate(G.TOFFOLI, (0, 1, 2)), 3)
    assert np.allclose(np.abs(u), np.abs(target), atol=1e-12)
    assert np.allclose(np.abs(TOFFOLI_MAT), np.abs(TOFFOLI_MAT.T))


def _oracle_block_unitary(o: OracleSpec, n_anc: int) -> np.ndarray:
    width = o.n_data + n_anc
    return circuit_unitary(Circuit(width, tuple(o.gates(range(o.n_data, width)))))


@pytest.mark.parametrize("terms, mask", [([(0, 1)], 0), ([(0, 3), (1, 2), (4, 5)], 0),
                                         ([(0, 1, 2)], 0b101), ([(1, 2, 3, 4, 5)], 0b000110)])
def test_oracle_block_is_signed_diagonal_on_marked_states(terms, mask):
    o = OracleSpec.from_terms(6, terms, mask)
    n_anc = o.ancillas_needed
    u = _oracle_block_unitary(o, n_anc)
    d = np.diag(u)[: 2**6]
    assert np.allclose(u[: 2**6, : 2**6], np.diag(d), atol=1e-9)
    assert np.allclose(d, o.phase_signs(), atol=1e-9)


def test_ideal_oracle_is_a_single_diagonal_gate():
    o = OracleSpec.ideal(3, {1, 6})
    (g,) = o.gates()
    assert g.kind is G.DIAG_ORACLE
    assert np.allclose(np.diag(unitary_of_gate(g, 3)).real, o.phase_signs())


def test_marked_set_mismatch_is_rejected():
    with pytest.raises(ValueError):
        OracleSpec(2, frozenset({1}), Realization.GATE_LIST, ((0, 1),))


@pytest.mark.parametrize("oracle", [OracleSpec.from_terms(6, [(0, 1)]), OracleSpec.subcube(6, {0: 1, 1: 1, 2: 0, 3: 1, 4: 1, 5: 1})])
def test_noiseless_grover_returns_ancillas_to_zero(oracle):
    c = build_grover(GroverConfig(6, oracle))
    d = run_exact(c)
    anc = d.marginal(c.ancilla_qubits).probs
    assert anc[0] == pytest.approx(1, abs=1e-10)


def test_sixteen_solutions_one_iteration_is_exactly_uniform_on_marked():
    o = OracleSpec.ideal(6, set(range(0, 64, 4)))
    c = build_grover(GroverConfig(6))
    d = run_exact(c, oracle=o, marginal=c.data_qubits)
    expected = np.zeros(64)
    expected[sorted(o.marked)] = 1 / 16
    assert 0.5 * np.abs(d.probs - expected).sum() < 1e-9
    assert np.allclose(ideal_distribution(6, o.marked), expected, atol=1e-12)


def test_single_solution_success_probability():
    c = build_grover(GroverConfig(6))
    d = run_exact(c, oracle=OracleSpec.ideal(6, {63}), marginal=c.data_qubits)
    assert d.probs[63] == pytest.approx(math.sin(3 * math.asin(1 / 8)) ** 2, abs=1e-9)
    assert d.probs[63] == pytest.approx(0.1348267, abs=1e-7)


def test_ideal_distribution_more_iterations():
    p = ideal_distribution(4, {5}, iterations=3)
    assert p[5] == pytest.approx(math.sin(7 * math.asin(0.25)) ** 2)
    assert p.sum() == pytest.approx(1)


def test_ancilla_budget():
    o = _table1_oracle(1)
    with pytest.raises(AncillaBudgetError, match="ancilla budget"):
        build_grover(GroverConfig(6, o, max_ancillas=3))
    c = build_grover(GroverConfig(6, o, share_ancillas=False))
    assert len(c.ancilla_qubits) == 8


def test_config_validation():
    with pytest.raises(ValueError):
        GroverConfig(6, iterations=0)
    with pytest.raises(ValueError):
        GroverConfig(5, OracleSpec.ideal(6, {1}))


def test_one_cz_oracles_with_16_solutions():
    found = enumerate_cz_oracles(6, 1, solutions=16)
    assert len(found) == 15
    assert sorted(o.terms[0] for o in found) == sorted((a, b) for a in range(6) for b in range(a + 1, 6))


def test_two_qubit_register_has_one_cz_oracle():
    (o,) = enumerate_cz_oracles(2, 1)
    assert o.marked == {3}


@pytest.mark.parametrize("allow_x, expected", [(False, {1: 15, 2: 60, 3: 60}), (True, {1: 60, 2: 240, 3: 240})])
def test_cz_oracle_counts_with_16_solutions(allow_x, expected):
    for k, n in expected.items():
        assert len(enumerate_cz_oracles(6, k, allow_x, solutions=16)) == n


def test_enumerated_oracles_are_brute_force_verified():
    for o in enumerate_cz_oracles(6, 3, solutions=16):
        x = np.arange(64)
        f = np.zeros(64, dtype=bool)
        for a, b in o.terms:
            f ^= ((x >> a) & 1).astype(bool) & ((x >> b) & 1).astype(bool)
        assert set(np.flatnonzero(f)) == o.marked
        assert o.solutions == 16


def test_enumeration_bound():
    with pytest.raises(ValueError):
        enumerate_cz_oracles(9, 1)
    with pytest.raises(ValueError):
        enumerate_cz_oracles(6, 5)


def test_random_marked_sets():
    assert len(random_marked_sets(6, 1, "all")) == 64
    sets = random_marked_sets(6, 16, 1000, seed=3)
    assert len({o.marked for o in sets}) == 1000
    assert all(o.solutions == 16 and o.realization is Realization.IDEAL_DIAGONAL for o in sets)
    assert sets == random_marked_sets(6, 16, 1000, seed=3)
    assert sets != random_marked_sets(6, 16, 1000, seed=4)
    with pytest.raises(ValueError):
        random_marked_sets(6, 64, 1)


def test_oracle_json_round_trip():
    o = OracleSpec.from_terms(6, [(0, 1), (2, 3), (4, 5)], 0b11)
    d = json.loads(json.dumps(o.to_dict()))
    assert set(d) >= {"n", "marked", "realization"}
    assert OracleSpec.from_dict(d) == o
    assert OracleSpec.from_dict({"n": 3, "marked": [1, 2]}) == OracleSpec.ideal(3, {1, 2})


def test_placeholder_grover_is_deterministic():
    assert build_grover(GroverConfig(6)) == build_grover(GroverConfig(6))
