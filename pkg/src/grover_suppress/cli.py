"""Command-line entry point."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .circuit import circuit_unitary, gate_counts, load_circuit, save_circuit
from .grover import (
    AncillaBudgetError, GroverConfig, MczStyle, OracleSpec, build_grover, enumerate_cz_oracles,
)
from .noise import NoiseSpec, PROFILES
from .simulator import run_exact, run_shots
from .suppression import DEFAULT_N_RANDOM, Mode, Pooling, suppress
from .transpiler import measured_fidelity, native_counts, transpile


def _load_oracle(path: str | None) -> OracleSpec | None:
    return None if path is None else OracleSpec.from_dict(json.loads(Path(path).read_text()))


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_oracle_enum(a) -> int:
    found = enumerate_cz_oracles(a.n, a.cz, a.allow_x, a.solutions)
    _emit([o.to_dict() for o in found], a.out)
    print(f"{len(found)} oracles", file=sys.stderr)
    return 0


def cmd_build_grover(a) -> int:
    oracle = _load_oracle(a.oracle)
    if oracle is None and a.marked:
        oracle = OracleSpec.ideal(a.n, [int(x) for x in a.marked.split(",")])
    cfg = GroverConfig(a.n, oracle, a.iterations, MczStyle(a.style), not a.no_share, a.max_ancillas)
    c = build_grover(cfg)
    save_circuit(c, a.out)
    counts = gate_counts(c)
    print(f"width={c.width} ancillas={len(c.ancilla_qubits)} two_qubit={counts.two_qubit} "
          f"three_qubit={counts.three_qubit}", file=sys.stderr)
    return 0


def cmd_transpile(a) -> int:
    c = load_circuit(a.input)
    measured = tuple(range(c.width)) if a.measure_all else c.data_qubits
    if a.final_z == "always":
        measured = tuple(range(c.width))
    nat = transpile(c, measured=measured, final_z=a.final_z)
    save_circuit(nat, a.out)
    tally = native_counts(nat)
    print(" ".join(f"{k}={v}" for k, v in tally.items()))
    if a.verify:
        f = measured_fidelity(circuit_unitary(c), circuit_unitary(nat), () if a.final_z == "never" else measured)
        print(f"fidelity={f:.15f}")
        if f < 1 - 1e-9:
            return 1
    return 0


def _noise(a) -> NoiseSpec:
    if a.noise:
        return NoiseSpec.load(a.noise)
    return PROFILES[a.profile]()


def cmd_simulate(a) -> int:
    c = load_circuit(a.input)
    noise = _noise(a)
    oracle = _load_oracle(a.oracle)
    mode = Mode.parse(a.mode) if a.mode else None
    if mode is None and (a.rc or a.ed):
        mode = Mode.RC_ED if (a.rc and a.ed) else (Mode.RC if a.rc else Mode.ED)
    shots = None if a.exact or a.shots is None else a.shots
    if mode is None:
        marginal = c.data_qubits if a.marginal == "data" else None
        if shots is None:
            d = run_exact(c, noise, oracle, marginal)
        else:
            d = run_shots(c, noise, shots, a.seed, oracle, marginal)
        out = {"mode": None, **d.to_dict()}
    else:
        res = suppress(c, noise, mode, shots, a.seed, a.rc or DEFAULT_N_RANDOM, a.rc_seed, oracle,
                       pooling=a.pooling)
        out = {"mode": mode.value, **res.distribution.to_dict(), "retention": res.retention}
        if a.verbose:
            ideal = run_exact(c, None, oracle, c.data_qubits).probs
            out["tvd"] = 0.5 * float(np.abs(res.distribution.probs - ideal).sum())
            out["member_tvd"] = [0.5 * float(np.abs(m.marginal(c.data_qubits).probs - ideal).sum())
                                 for m in res.members]
    _emit(out, a.out)
    return 0


def cmd_experiment(a) -> int:
    from .experiments import ExperimentPreset, run_preset, write_outputs

    preset = ExperimentPreset.default(a.preset, a.seed, a.oracles, a.shots, a.exact or None)
    res = run_preset(preset)
    for p in write_outputs(res, a.out):
        print(f"wrote {p}")
    for c in res.checks:
        tag = "PASS" if c.passed else "FAIL"
        kind = "enforced" if c.enforced else "info"
        print(f"{tag} [{kind}] {c.name}: {c.value}")
    return 0 if res.ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="grover-suppress", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("oracle-enum", help="list oracles built from k CZ gates")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--cz", type=int, required=True)
    p.add_argument("--solutions", type=int)
    p.add_argument("--allow-x", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle_enum)

    p = sub.add_parser("build-grover", help="write a Grover circuit as JSON lines")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--oracle", help="OracleSpec JSON; omit for a diagonal-oracle placeholder")
    p.add_argument("--marked", help="comma-separated marked states (ideal diagonal oracle)")
    p.add_argument("--iterations", type=int, default=1)
    p.add_argument("--style", choices=[s.value for s in MczStyle], default=MczStyle.RP_TOFFOLI_3CX.value)
    p.add_argument("--no-share", action="store_true", help="separate ancillas for oracle and diffusion")
    p.add_argument("--max-ancillas", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_grover)

    p = sub.add_parser("transpile", help="compile to GPI/GPI2/MS")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--verify", action="store_true")
    p.add_argument("--final-z", choices=["measured", "always", "never"], default="measured")
    p.add_argument("--measure-all", action="store_true", help="treat ancillas as measured")
    p.set_defaults(func=cmd_transpile)

    p = sub.add_parser("simulate", help="run a circuit under noise")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--noise", help="NoiseSpec JSON")
    p.add_argument("--profile", choices=sorted(PROFILES), default="noiseless")
    p.add_argument("--oracle", help="OracleSpec JSON bound to the diagonal-oracle placeholder")
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--marginal", choices=["data", "all"], default="all")
    p.add_argument("--rc", type=int, help="number of randomized circuits")
    p.add_argument("--rc-seed", type=int)
    p.add_argument("--ed", action="store_true")
    p.add_argument("--mode", choices=[m.value for m in Mode])
    p.add_argument("--pooling", choices=[x.value for x in Pooling], default=Pooling.POOL_THEN_SELECT.value)
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="run an experiment preset")
    p.add_argument("preset", choices=["fig1", "fig3", "fig4", "fig6"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oracles", type=int)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--shots", type=int)
    p.add_argument("--out", default="results")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, AncillaBudgetError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
