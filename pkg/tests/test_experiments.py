import csv
import io
import json
from dataclasses import replace

import numpy as np
import pytest

from grover_suppress.cli import main
from grover_suppress.experiments import (
    CSV_FIELDS, ExperimentPreset, fig6_oracles, records_csv, run_preset, write_outputs,
)
from grover_suppress.suppression import Mode


def _small_fig6(seed=0):
    return replace(ExperimentPreset.default("fig6", seed), fig6_oracles=2, shots=200)


def test_presets_are_determined_by_name_and_seed():
    assert ExperimentPreset.default("fig3", 4) == ExperimentPreset.default("fig3", 4)
    p = ExperimentPreset.default("fig6")
    assert (p.shots, p.n_random, p.fig6_oracles, p.profiles) == (1000, 10, 30, ("full",))
    assert ExperimentPreset.default("fig3").r_grid == (1, 2, 4, 8, 12, 16, 20, 24, 28, 31)
    assert ExperimentPreset.default("fig4", exact=True).shots is None


@pytest.mark.parametrize("kw", [dict(name="fig9"), dict(name="fig3", r_grid=(64,)),
                                dict(name="fig3", profiles=("bogus",)), dict(name="fig6", shots=5)])
def test_infeasible_presets(kw):
    with pytest.raises(ValueError):
        ExperimentPreset(**kw)


def test_fig6_oracles_are_three_cz_with_16_solutions():
    os = fig6_oracles(ExperimentPreset.default("fig6", 3))
    assert len(os) == 30 and len({o.marked for o in os}) == 30
    assert all(len(o.terms) == 3 and o.solutions == 16 for o in os)


def test_fig6_is_byte_identical_per_seed(tmp_path):
    a = run_preset(_small_fig6())
    b = run_preset(_small_fig6())
    assert records_csv(a.records) == records_csv(b.records)
    pa = write_outputs(a, tmp_path / "a")
    pb = write_outputs(b, tmp_path / "b")
    assert [p.read_bytes() for p in pa] == [p.read_bytes() for p in pb]
    assert records_csv(run_preset(_small_fig6(1)).records) != records_csv(a.records)


def test_csv_schema(tmp_path):
    res = run_preset(_small_fig6())
    paths = write_outputs(res, tmp_path)
    names = sorted(p.name for p in paths)
    assert names == ["fig6_manifest.json", "fig6_oracles.csv", "fig6_shots.csv", "fig6_summary.json"]
    rows = list(csv.DictReader(io.StringIO((tmp_path / "fig6_shots.csv").read_text())))
    assert tuple(rows[0]) == CSV_FIELDS
    assert len(rows) == 2 * 4
    assert {r["mode"] for r in rows} == {"none", "rc", "ed", "rc+ed"}
    assert all(r["shots"] == "200" and r["noise_profile"] == "full" for r in rows)
    assert all(0 <= float(r["tvd"]) <= 1 and 0 < float(r["retention"]) <= 1 for r in rows)
    none = {r["oracle_id"]: float(r["tvd"]) for r in rows if r["mode"] == "none"}
    for r in rows:
        assert float(r["improvement_factor"]) == pytest.approx(none[r["oracle_id"]] / float(r["tvd"]))
    manifest = json.loads((tmp_path / "fig6_manifest.json").read_text())
    assert manifest["preset"]["name"] == "fig6" and len(manifest["input_sha256"]) == 64
    summary = json.loads((tmp_path / "fig6_summary.json").read_text())
    assert "improvement_factor_fit" in summary["groups"]["shots|full|r=16|rc+ed"]


def test_reduced_fig1_runs():
    res = run_preset(replace(ExperimentPreset.default("fig1"), n_oracles=20))
    assert res.panels() == ["cz1", "cz2", "cz3", "random"]
    assert [res.tvds(p).size for p in ("cz1", "cz2", "cz3", "random")] == [15, 60, 60, 20]
    assert all(not c.enforced for c in res.checks)


def test_reduced_fig3_over_rotation_only():
    p = replace(ExperimentPreset.default("fig3", 2), n_oracles=10, r_grid=(1, 4, 16), profiles=("or",))
    res = run_preset(p)
    assert res.tvds(r=1).size == 64 and res.tvds(r=16).size == 10
    assert {c.name for c in res.checks} >= {"or_mean_ratio_r16_r1_in_2_4", "or_var_rc_lt_var_none_all_r"}
    for m in Mode:
        assert (res.tvds(r=16, mode=m) >= 0).all()
    assert records_csv(res.records) == records_csv(run_preset(p).records)


def test_sweep_presets_reject_shots():
    with pytest.raises(ValueError):
        run_preset(replace(ExperimentPreset.default("fig3"), shots=1000, n_oracles=2, r_grid=(2,)))


# --- command line ----------------------------------------------------------------
def test_cli_round_trip(tmp_path, capsys):
    d = tmp_path
    assert main(["oracle-enum", "--n", "6", "--cz", "1", "--solutions", "16", "--out", str(d / "o.json")]) == 0
    oracles = json.loads((d / "o.json").read_text())
    assert len(oracles) == 15
    (d / "one.json").write_text(json.dumps(oracles[0]))
    assert main(["build-grover", "--n", "6", "--oracle", str(d / "one.json"), "--out", str(d / "g.jsonl")]) == 0
    assert main(["transpile", "--in", str(d / "g.jsonl"), "--out", str(d / "n.jsonl"), "--verify"]) == 0
    out = capsys.readouterr().out
    assert "MS=26" in out and "fidelity=" in out
    assert main(["simulate", "--in", str(d / "n.jsonl"), "--exact", "--marginal", "data",
                 "--out", str(d / "p.json")]) == 0
    dist = json.loads((d / "p.json").read_text())
    assert dist["exact"] is True and len(dist["probabilities"]) == 16
    assert main(["simulate", "--in", str(d / "g.jsonl"), "--profile", "full", "--shots", "300", "--seed", "2",
                 "--rc", "3", "--ed", "--verbose", "--out", str(d / "s.json")]) == 0
    s = json.loads((d / "s.json").read_text())
    assert s["mode"] == "rc+ed" and 0 < s["retention"] <= 1 and len(s["member_tvd"]) == 3


def test_cli_placeholder_with_marked_states(tmp_path):
    d = tmp_path
    assert main(["build-grover", "--n", "6", "--out", str(d / "g.jsonl")]) == 0
    (d / "o.json").write_text(json.dumps({"n": 6, "marked": list(range(16))}))
    assert main(["simulate", "--in", str(d / "g.jsonl"), "--oracle", str(d / "o.json"), "--exact",
                 "--marginal", "data", "--out", str(d / "p.json")]) == 0
    p = json.loads((d / "p.json").read_text())["probabilities"]
    assert set(map(int, p)) == set(range(16))
    assert np.allclose(list(p.values()), 1 / 16)


def test_cli_noise_file(tmp_path):
    from grover_suppress.noise import NoiseSpec
    d = tmp_path
    (d / "noise.json").write_text(NoiseSpec(eps2=0.1).to_json())
    assert main(["build-grover", "--n", "3", "--marked", "5", "--out", str(d / "g.jsonl")]) == 0
    assert main(["simulate", "--in", str(d / "g.jsonl"), "--noise", str(d / "noise.json"), "--exact",
                 "--out", str(d / "p.json")]) == 0


def test_cli_errors(tmp_path, capsys):
    assert main(["transpile", "--in", str(tmp_path / "missing.jsonl"), "--out", str(tmp_path / "x")]) == 2
    assert main(["build-grover", "--n", "6", "--marked", "0", "--max-ancillas", "1",
                 "--out", str(tmp_path / "g.jsonl")]) == 2
    assert "ancilla budget" in capsys.readouterr().err


def test_cli_experiment(tmp_path, capsys):
    code = main(["experiment", "fig6", "--seed", "0", "--oracles", "2", "--shots", "100", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "fig6_shots.csv").exists()
