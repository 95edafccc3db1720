import json
import math

import numpy as np
import pytest

from grover_suppress.circuit import Circuit, Gate, GateKind as G, unitary_of_gate
from grover_suppress.grover import GroverConfig, OracleSpec, build_grover, ideal_distribution
from grover_suppress.noise import (
    PROFILES, NoiseSpec, damping_probability, kraus_channels, noisy_gate_matrix, relaxation_superop,
    kraus_to_superop,
)
from grover_suppress.simulator import (
    Distribution, OracleSweep, density_evolve, full_probabilities, marginalize, run_exact, run_shots,
    sample_counts,
)
from grover_suppress.transpiler import transpile

PAULI = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]),
         "Z": np.diag([1, -1])}


@pytest.fixture(scope="module")
def grover16():
    c = transpile(build_grover(GroverConfig(6)))
    return c, OracleSpec.ideal(6, set(range(0, 64, 4)))


def _embed_dense(op, qubits, n):
    """Full-register operator from a local one (qubits[0] is the local MSB)."""
    k = len(qubits)
    out = np.zeros((2**n, 2**n), dtype=complex)
    for col in range(2**n):
        loc = sum(((col >> q) & 1) << (k - 1 - i) for i, q in enumerate(qubits))
        rest = col & ~sum(1 << q for q in qubits)
        for r_loc in range(2**k):
            row = rest | sum(((r_loc >> (k - 1 - i)) & 1) << q for i, q in enumerate(qubits))
            out[row, col] += op[r_loc, loc]
    return out


def _reference_density(c: Circuit, noise: NoiseSpec) -> np.ndarray:
    """Plain Kraus-sum evolution, one full-register operator at a time."""
    n = c.width
    rho = np.zeros((2**n, 2**n), dtype=complex)
    rho[0, 0] = 1
    for g in c.gates:
        u = _embed_dense(noisy_gate_matrix(g, noise), g.qubits, n)
        rho = u @ rho @ u.conj().T
        for q in range(n):
            ks = [_embed_dense(k, (q,), n) for k in kraus_channels(noise, noise.duration(g))]
            rho = sum(k @ rho @ k.conj().T for k in ks)
        if g.kind is G.MS and noise.has_stochastic:
            p = noise.p_stoch2
            acc = (1 - p) * rho
            for a in "IXYZ":
                for b in "IXYZ":
                    if a + b != "II":
                        P = _embed_dense(np.kron(PAULI[a], PAULI[b]), g.qubits, n)
                        acc = acc + p / 15 * P @ rho @ P
            rho = acc
    return rho


def _small_native_circuit() -> Circuit:
    return Circuit(3, (
        Gate(G.GPI2, (0,), (0.3,)), Gate(G.GPI2, (1,), (-1.0,)), Gate(G.MS, (0, 1), (0.2, 0.9)),
        Gate(G.GPI, (2,), (0.5,)), Gate(G.MS, (1, 2), (-0.4, 0.0)), Gate(G.GPI2, (2,), (2.0,)),
        Gate(G.MS, (2, 0), (1.3, -2.2)), Gate(G.GPI2, (0,), (0.1,)),
    ))


def _harsh_noise() -> NoiseSpec:
    return NoiseSpec(eps1=0.05, eps2=0.1, t1=2e-3, t2=1e-3, dur1=1e-4, dur2=3e-4, p_stoch2=0.05)


# --- noise model ---------------------------------------------------------------
def test_kraus_completeness():
    noise = NoiseSpec.over_rotation_relaxation()
    ks = kraus_channels(noise, 600e-6)
    assert np.allclose(sum(k.conj().T @ k for k in ks), np.eye(2), atol=1e-12)


def test_zero_duration_is_identity():
    ks = kraus_channels(NoiseSpec.full(), 0.0)
    assert np.allclose(kraus_to_superop(ks), np.eye(4))


def test_coherence_decays_by_e_at_t2():
    noise = NoiseSpec(t1=math.inf, t2=1.0)
    rho = np.full((2, 2), 0.5, dtype=complex)
    out = sum(k @ rho @ k.conj().T for k in kraus_channels(noise, 1.0))
    assert out[0, 1] / rho[0, 1] == pytest.approx(math.exp(-1), abs=1e-12)


def test_combined_coherence_decay_matches_t2():
    noise = NoiseSpec(t1=3.0, t2=2.0)
    rho = np.full((2, 2), 0.5, dtype=complex)
    t = 0.7
    out = sum(k @ rho @ k.conj().T for k in kraus_channels(noise, t))
    assert abs(out[0, 1]) / 0.5 == pytest.approx(math.exp(-t / 2.0), abs=1e-12)


def test_relaxation_superop_matches_kraus():
    noise = NoiseSpec(t1=3.0, t2=2.0)
    assert np.allclose(relaxation_superop(noise, 0.4), kraus_to_superop(kraus_channels(noise, 0.4)))


def test_damping_probability_for_one_ms():
    p = damping_probability(NoiseSpec.over_rotation_relaxation(), 600e-6)
    assert p == pytest.approx(1 - math.exp(-600e-6 / 100))
    assert p == pytest.approx(6.0e-6, rel=1e-3)


@pytest.mark.parametrize("kw", [dict(t1=1.0, t2=3.0), dict(p_stoch2=1.5), dict(dur1=-1.0), dict(eps1=math.nan)])
def test_invalid_noise_spec(kw):
    with pytest.raises(ValueError, match="invalid NoiseSpec"):
        NoiseSpec(**kw)


def test_noise_json_round_trip(tmp_path):
    for name, make in PROFILES.items():
        n = make()
        text = n.to_json()
        assert NoiseSpec.from_dict(json.loads(text)) == n
        (tmp_path / f"{name}.json").write_text(text)
        assert NoiseSpec.load(tmp_path / f"{name}.json") == n
    with pytest.raises(ValueError):
        NoiseSpec.from_dict({"bogus": 1})


def test_profile_constants():
    f = NoiseSpec.full()
    assert (f.eps1, f.eps2, f.t1, f.t2, f.dur1, f.dur2, f.p_stoch2) == (0.008, 0.08, 100, 1, 135e-6, 600e-6, 0.01)
    assert NoiseSpec.over_rotation_only().is_pure
    assert not NoiseSpec.over_rotation_relaxation().is_pure


def test_over_rotation_scales_native_angles():
    noise = NoiseSpec(eps1=0.1, eps2=0.2)
    g = noisy_gate_matrix(Gate(G.GPI, (0,), (0.0,)), noise)
    # exp(-i * 1.1 pi / 2 * X)
    assert g[0, 1] == pytest.approx(-1j * math.sin(1.1 * math.pi / 2))
    m = noisy_gate_matrix(Gate(G.MS, (0, 1), (0.0, 0.0)), noise)
    assert m[0, 0] == pytest.approx(math.cos(1.2 * math.pi / 4))
    assert np.allclose(noisy_gate_matrix(Gate(G.H, (0,)), noise), unitary_of_gate(Gate(G.H, (0,)), 1))


# --- density engine ------------------------------------------------------------
def test_density_engine_matches_reference_kraus_sum():
    c, noise = _small_native_circuit(), _harsh_noise()
    assert np.allclose(density_evolve(c, noise), _reference_density(c, noise), atol=1e-12)


def test_noiseless_sixteen_solutions(grover16):
    c, o = grover16
    d = run_exact(c, NoiseSpec.noiseless(), o, c.data_qubits)
    assert np.allclose(d.probs, ideal_distribution(6, o.marked), atol=1e-10)


def test_noise_off_density_equals_pure_state(grover16):
    c, o = grover16
    off = NoiseSpec(**{**NoiseSpec.full().to_dict(), "over_rotation": False, "relaxation": False,
                       "stochastic": False, "t1": 100, "t2": 1})
    p_dm = full_probabilities(c, off, o, method="density")
    p_sv = full_probabilities(c, NoiseSpec.noiseless(), o, method="statevector")
    assert np.allclose(p_dm, p_sv, atol=1e-10)


def test_coherent_noise_density_equals_statevector(grover16):
    c, o = grover16
    noise = NoiseSpec.over_rotation_only()
    p_dm = full_probabilities(c, noise, o, method="density")
    p_sv = full_probabilities(c, noise, o, method="statevector")
    assert np.allclose(p_dm, p_sv, atol=1e-9)


def test_density_state_invariants(grover16):
    c, o = grover16
    from grover_suppress.simulator import bind_oracle
    rho = density_evolve(bind_oracle(c, o), NoiseSpec.full())
    assert np.trace(rho).real == pytest.approx(1, abs=1e-8)
    assert np.allclose(rho, rho.conj().T, atol=1e-10)
    assert np.linalg.eigvalsh(rho).min() > -1e-9


def test_tvd_increases_with_two_qubit_over_rotation(grover16):
    c, o = grover16
    ideal = ideal_distribution(6, o.marked)
    tvds = [0.5 * np.abs(run_exact(c, NoiseSpec(eps2=e), o, c.data_qubits).probs - ideal).sum()
            for e in (0.0, 0.02, 0.04, 0.06, 0.08)]
    assert tvds[0] < 1e-10
    assert all(a < b for a, b in zip(tvds, tvds[1:]))


def test_width_bound_for_density():
    c = Circuit(12, (Gate(G.GPI2, (0,), (0.0,)),))
    with pytest.raises(ValueError):
        full_probabilities(c, NoiseSpec.full(), method="density")


def test_unbound_placeholder_is_rejected():
    with pytest.raises(ValueError, match="placeholder"):
        run_exact(build_grover(GroverConfig(3)))


def test_readout_flips():
    c = Circuit(2, (Gate(G.GPI, (0,), (0.0,)),))
    d = run_exact(c, NoiseSpec(p_readout=0.1, readout=True))
    assert np.allclose(d.probs, [0.1 * 0.9, 0.9 * 0.9, 0.1 * 0.1, 0.9 * 0.1])


# --- sampling --------------------------------------------------------------------
def test_shots_are_deterministic_under_seed(grover16):
    c, o = grover16
    a = run_shots(c, NoiseSpec.full(), 1000, 7, o)
    b = run_shots(c, NoiseSpec.full(), 1000, 7, o)
    assert np.array_equal(a.counts, b.counts)
    assert a.shots == 1000 and not a.exact
    assert not np.array_equal(a.counts, run_shots(c, NoiseSpec.full(), 1000, 8, o).counts)


def test_noiseless_shots_hit_only_marked_states(grover16):
    c, o = grover16
    d = run_shots(c, NoiseSpec.noiseless(), 1000, 1, o, c.data_qubits)
    assert set(np.flatnonzero(d.counts)) <= o.marked


def test_trajectories_converge_to_exact():
    c, noise = _small_native_circuit(), _harsh_noise()
    exact = run_exact(c, noise).probs
    d = run_shots(c, noise, 100_000, 11)
    assert 0.5 * np.abs(d.probs - exact).sum() < 0.01


def test_trajectory_counts_within_three_sigma():
    c, noise = _small_native_circuit(), _harsh_noise()
    exact = run_exact(c, noise).probs
    shots = 200_000
    counts = sample_counts(c, noise, shots, 5)
    sigma = np.sqrt(shots * exact * (1 - exact))
    z = np.abs(counts - shots * exact) / np.maximum(sigma, 1e-12)
    assert (z < 3).all()


def test_trajectories_with_readout_flips():
    c = Circuit(2, (Gate(G.GPI, (0,), (0.0,)), Gate(G.MS, (0, 1), (0.0, 0.0))))
    noise = NoiseSpec(t1=1.0, t2=1.0, dur2=0.01, p_readout=0.05, readout=True)
    exact = run_exact(c, noise).probs
    d = run_shots(c, noise, 50_000, 2)
    assert 0.5 * np.abs(d.probs - exact).sum() < 0.01


# --- distributions and sweeps ----------------------------------------------------
def test_distribution_validation_and_json(tmp_path):
    with pytest.raises(ValueError):
        Distribution(np.array([0.5, 0.6]), (0,))
    with pytest.raises(ValueError, match="all shots discarded"):
        Distribution.from_counts(np.zeros(4), (0, 1))
    d = Distribution.from_counts(np.array([3, 0, 1, 0]), (4, 2))
    assert d.bitstring(2) == "10"
    assert Distribution.from_dict(json.loads(d.to_json())).probs.tolist() == d.probs.tolist()
    d.save(tmp_path / "d.json")
    assert json.loads((tmp_path / "d.json").read_text())["probabilities"] == {"0": 0.75, "2": 0.25}


def test_marginal_bit_order():
    p = np.zeros(8)
    p[0b110] = 1.0  # qubits 1 and 2 set
    assert marginalize(p, 3, [2]).tolist() == [0, 1]
    assert marginalize(p, 3, [0, 2]).tolist() == [0, 0, 1, 0]
    assert marginalize(p, 3, [2, 0]).tolist() == [0, 1, 0, 0]


@pytest.mark.parametrize("profile", ["or", "or_relax", "full"])
def test_oracle_sweep_matches_direct_runs(profile):
    c = transpile(build_grover(GroverConfig(4)), measured=range(6))
    noise = PROFILES[profile]()
    oracles = [OracleSpec.ideal(4, s) for s in ({1}, {0, 5, 9}, {2, 3, 12, 15})]
    sweep = OracleSweep(c, noise, keep=c.data_qubits, condition=c.ancilla_qubits)
    methods = ["auto"] if noise.is_pure else ["schrodinger", "heisenberg"]
    for method in methods:
        p_keep, p_cond = sweep.evaluate(oracles, method=method)
        for k, o in enumerate(oracles):
            full = run_exact(c, noise, o)
            assert np.allclose(p_keep[k], full.marginal(c.data_qubits).probs, atol=1e-12)
            idx = np.arange(2**c.width)
            mask = ((idx >> 4) & 1) + ((idx >> 5) & 1) == 0
            cond = marginalize(full.probs * mask, c.width, c.data_qubits)
            assert np.allclose(p_cond[k], cond, atol=1e-12)
