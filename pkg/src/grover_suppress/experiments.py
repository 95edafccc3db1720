"""Experiment presets: TVD studies over many oracles with CSV/JSON output.

Presets

* ``fig1``  OR-only noise, NONE mode. Random 16-solution oracles against every
  oracle buildable from 1, 2 or 3 CZ gates (all run as ideal diagonals so
  circuit length is identical).
* ``fig3``  r sweep, four modes, OR-only and OR+relaxation profiles.
* ``fig4``  (tvd_NONE, tvd_mode) pairs for r in {1, 8, 16, 24}.
* ``fig6``  finite shots: 30 three-CZ oracles realised as gates, full noise.

Every number in the output is a deterministic function of (preset, seed,
overrides). Records are sorted by (r, oracle id, mode), never by completion
order.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .grover import (
    GroverConfig, OracleSpec, build_grover, enumerate_cz_oracles, ideal_distribution,
    random_marked_sets,
)
from .metrics import correlation, improvement_factor, normal_fit, tvd_rows
from .noise import NoiseSpec
from .simulator import OracleSweep
from .suppression import DEFAULT_N_RANDOM, Mode, randomize, suppress_modes

N_DATA = 6
DEFAULT_R_GRID = (1, 2, 4, 8, 12, 16, 20, 24, 28, 31)
FIG4_R = (1, 8, 16, 24)
ALL_MODES = (Mode.NONE, Mode.RC, Mode.ED, Mode.RC_ED)
CSV_FIELDS = ("preset", "panel", "r", "oracle_id", "mode", "noise_profile", "tvd", "retention",
              "improvement_factor", "shots", "seed")
PRESETS = ("fig1", "fig3", "fig4", "fig6")
PROFILES: dict[str, Callable[[], NoiseSpec]] = {
    "or": NoiseSpec.over_rotation_only,
    "or_relax": NoiseSpec.over_rotation_relaxation,
    "full": NoiseSpec.full,
}


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    seed: int = 0
    n_data: int = N_DATA
    n_oracles: int = 1000
    r_grid: tuple[int, ...] = ()
    profiles: tuple[str, ...] = ()
    modes: tuple[Mode, ...] = ALL_MODES
    shots: int | None = None
    n_random: int = DEFAULT_N_RANDOM
    fig6_oracles: int = 30

    def __post_init__(self):
        if self.name not in PRESETS:
            raise ValueError(f"unknown preset {self.name!r}")
        if self.n_oracles < 2:
            raise ValueError("n_oracles must be at least 2")
        if self.shots is not None and self.shots < self.n_random:
            raise ValueError("shots must cover every RC member")
        for r in self.r_grid:
            if not 1 <= r < 2**self.n_data:
                raise ValueError(f"infeasible solution count r={r}")
        for p in self.profiles:
            if p not in PROFILES:
                raise ValueError(f"unknown noise profile {p!r}")

    @classmethod
    def default(cls, name: str, seed: int = 0, n_oracles: int | None = None, shots: int | None = None,
                exact: bool | None = None) -> "ExperimentPreset":
        base = {
            "fig1": dict(r_grid=(16,), profiles=("or",), modes=(Mode.NONE,)),
            "fig3": dict(r_grid=DEFAULT_R_GRID, profiles=("or", "or_relax")),
            "fig4": dict(r_grid=FIG4_R, profiles=("or", "or_relax")),
            "fig6": dict(r_grid=(16,), profiles=("full",), shots=1000),
        }.get(name)
        if base is None:
            raise ValueError(f"unknown preset {name!r}")
        p = cls(name, seed, **base)
        if n_oracles is not None:
            p = replace(p, n_oracles=n_oracles, fig6_oracles=min(n_oracles, 60))
        if exact:
            p = replace(p, shots=None)
        elif shots is not None:
            p = replace(p, shots=shots)
        return p

    def to_dict(self) -> dict:
        d = asdict(self)
        d["modes"] = [m.value for m in self.modes]
        d["r_grid"] = list(self.r_grid)
        d["profiles"] = list(self.profiles)
        return d


@dataclass(frozen=True)
class TvdRecord:
    preset: str
    panel: str
    r: int
    oracle_id: int
    mode: Mode
    noise_profile: str
    tvd: float
    retention: float
    improvement_factor: float
    shots: int | None
    seed: int

    def __post_init__(self):
        if not (-1e-12 <= self.tvd <= 1 + 1e-12):
            raise ValueError("tvd outside [0, 1]")

    def row(self) -> list[str]:
        return [self.preset, self.panel, str(self.r), str(self.oracle_id), self.mode.value, self.noise_profile,
                _fmt(self.tvd), _fmt(self.retention), _fmt(self.improvement_factor),
                "exact" if self.shots is None else str(self.shots), str(self.seed)]


@dataclass
class Check:
    name: str
    passed: bool
    value: float | str
    enforced: bool  # failing an enforced check makes the CLI exit nonzero


@dataclass
class ExperimentResult:
    preset: ExperimentPreset
    records: list[TvdRecord]
    oracles: list[dict]
    checks: list[Check]
    summary: dict

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks if c.enforced)

    def panels(self) -> list[str]:
        return sorted({r.panel for r in self.records})

    def tvds(self, panel: str | None = None, r: int | None = None, mode: Mode = Mode.NONE,
             profile: str | None = None) -> np.ndarray:
        return np.array([x.tvd for x in self.records
                         if (panel is None or x.panel == panel) and (r is None or x.r == r)
                         and x.mode is mode and (profile is None or x.noise_profile == profile)])


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf"
    return repr(float(x))


_MODE_ORDER = {m: i for i, m in enumerate(ALL_MODES)}


def _sort(records: list[TvdRecord]) -> list[TvdRecord]:
    return sorted(records, key=lambda x: (x.panel, x.noise_profile, x.r, x.oracle_id, _MODE_ORDER[x.mode]))


def _sub_seed(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, *key])


# --- exact engine for ideal-diagonal oracles ----------------------------------
class IdealOracleEngine:
    """Shared Grover circuit with a diagonal-oracle placeholder, plus one RC ensemble.

    Sweeps are built per noise profile on first use and cached, so the
    expensive part is paid once no matter how many oracles are evaluated.
    """

    def __init__(self, n_data: int = N_DATA, n_random: int = DEFAULT_N_RANDOM, rc_seed: int = 0):
        self.circuit = build_grover(GroverConfig(n_data, None))
        measured = tuple(range(self.circuit.width))
        self.ensemble = randomize(self.circuit, n_random, rc_seed, measured)
        self._sweeps: dict[tuple[str, int], OracleSweep] = {}

    def _sweep(self, profile: str, member: int) -> OracleSweep:
        key = (profile, member)
        if key not in self._sweeps:
            circ = self.ensemble.base if member < 0 else self.ensemble.members[member]
            self._sweeps[key] = OracleSweep(circ, PROFILES[profile](), self.circuit.data_qubits,
                                            self.circuit.ancilla_qubits)
        return self._sweeps[key]

    def evaluate(self, profile: str, oracles: Sequence[OracleSpec], modes: Sequence[Mode],
                 method: str = "auto") -> dict[Mode, tuple[np.ndarray, np.ndarray]]:
        """TVD and retention arrays per mode.

        ``method`` is passed to :meth:`OracleSweep.evaluate`; callers that
        evaluate many small oracle batches should ask for ``"heisenberg"``.
        """
        n_data = len(self.circuit.data_qubits)
        ideal = np.array([ideal_distribution(n_data, o.marked) for o in oracles])
        out: dict[Mode, tuple[np.ndarray, np.ndarray]] = {}
        groups = []
        if any(not m.uses_rc for m in modes):
            groups.append((False, [self._sweep(profile, -1).evaluate(oracles, method)]))
        if any(m.uses_rc for m in modes):
            groups.append((True, [self._sweep(profile, i).evaluate(oracles, method)
                                  for i in range(len(self.ensemble.members))]))
        for rc, runs in groups:
            p_all = np.mean([a for a, _ in runs], axis=0)
            p_anc0 = np.mean([b for _, b in runs], axis=0)
            for m in modes:
                if m.uses_rc != rc:
                    continue
                if m.uses_ed:
                    kept = p_anc0.sum(axis=1)
                    out[m] = (tvd_rows(p_anc0 / kept[:, None], ideal), kept)
                else:
                    out[m] = (tvd_rows(p_all, ideal), np.ones(len(oracles)))
        return {m: out[m] for m in modes}


_ENGINES: dict[tuple[int, int, int], IdealOracleEngine] = {}


def ideal_engine(n_data: int, n_random: int, rc_seed: int) -> IdealOracleEngine:
    """Process-wide cache so repeated presets reuse built sweeps."""
    key = (n_data, n_random, rc_seed)
    if key not in _ENGINES:
        _ENGINES[key] = IdealOracleEngine(n_data, n_random, rc_seed)
    return _ENGINES[key]


def _oracle_row(preset: str, panel: str, r: int, oid: int, o: OracleSpec) -> dict:
    return {"preset": preset, "panel": panel, "r": r, "oracle_id": oid,
            "marked": " ".join(str(x) for x in sorted(o.marked)), "realization": o.realization.value,
            "terms": ";".join("-".join(str(q) for q in t) for t in o.terms), "x_mask": o.x_mask}


def _records_from(preset: ExperimentPreset, panel: str, profile: str, r: int,
                  res: dict[Mode, tuple[np.ndarray, np.ndarray]], shots: int | None) -> list[TvdRecord]:
    recs = []
    base = res.get(Mode.NONE)
    for m, (tv, ret) in res.items():
        for oid in range(tv.size):
            imp = improvement_factor(base[0][oid], tv[oid]) if base is not None else math.nan
            recs.append(TvdRecord(preset.name, panel, r, oid, m, profile, float(tv[oid]), float(ret[oid]),
                                  imp, shots, preset.seed))
    return recs


def _oracles_for(preset: ExperimentPreset, r: int) -> list[OracleSpec]:
    count = "all" if r == 1 else preset.n_oracles
    return random_marked_sets(preset.n_data, r, count, _sub_seed(preset.seed, 1, r))


# --- presets -------------------------------------------------------------------
def _run_fig1(p: ExperimentPreset):
    eng = ideal_engine(p.n_data, p.n_random, p.seed)
    recs, orc_rows = [], []
    panels = {"random": _oracles_for(p, 16)}
    for k in (1, 2, 3):
        cz = enumerate_cz_oracles(p.n_data, k, solutions=2 ** (p.n_data - 2))
        panels[f"cz{k}"] = [OracleSpec.ideal(p.n_data, o.marked) for o in cz]
        orc_rows += [_oracle_row(p.name, f"cz{k}", 16, i, o) for i, o in enumerate(cz)]
    orc_rows += [_oracle_row(p.name, "random", 16, i, o) for i, o in enumerate(panels["random"])]
    for panel, oracles in panels.items():
        for profile in p.profiles:
            recs += _records_from(p, panel, profile, 16, eng.evaluate(profile, oracles, p.modes), None)
    return recs, orc_rows


def _run_sweep(p: ExperimentPreset):
    if p.shots is not None:
        raise ValueError(f"{p.name} runs in exact mode only; use fig6 for finite shots")
    eng = ideal_engine(p.n_data, p.n_random, p.seed)
    recs, orc_rows = [], []
    batches = {r: _oracles_for(p, r) for r in p.r_grid}
    # one backward pass per circuit pays off once the preset's oracles outnumber the observables
    total = sum(len(b) for b in batches.values())
    method = "heisenberg" if total > 2 ** (p.n_data + 1) else "auto"
    for r, oracles in batches.items():
        orc_rows += [_oracle_row(p.name, "all", r, i, o) for i, o in enumerate(oracles)]
        for profile in p.profiles:
            res = eng.evaluate(profile, oracles, p.modes, method)
            recs += _records_from(p, profile, profile, r, res, None)
    return recs, orc_rows


def fig6_oracles(p: ExperimentPreset) -> list[OracleSpec]:
    pool = enumerate_cz_oracles(p.n_data, 3, solutions=2 ** (p.n_data - 2))
    rng = np.random.default_rng(_sub_seed(p.seed, 6))
    pick = np.sort(rng.choice(len(pool), size=min(p.fig6_oracles, len(pool)), replace=False))
    return [pool[i] for i in pick]


def _run_fig6(p: ExperimentPreset):
    recs, orc_rows = [], []
    oracles = fig6_oracles(p)
    for profile in p.profiles:
        noise = PROFILES[profile]()
        tv = {m: np.zeros(len(oracles)) for m in p.modes}
        ret = {m: np.zeros(len(oracles)) for m in p.modes}
        for oid, o in enumerate(oracles):
            c = build_grover(GroverConfig(p.n_data, o))
            ideal = ideal_distribution(p.n_data, o.marked)
            res = suppress_modes(c, noise, p.modes, p.shots, _sub_seed(p.seed, 7, oid), p.n_random,
                                 rc_seed=_sub_seed(p.seed, 8, oid), measure_all=True)
            for m, sr in res.items():
                tv[m][oid] = 0.5 * np.abs(sr.distribution.probs - ideal).sum()
                ret[m][oid] = sr.retention
        recs += _records_from(p, "shots", profile, 16, {m: (tv[m], ret[m]) for m in p.modes}, p.shots)
    orc_rows += [_oracle_row(p.name, "shots", 16, i, o) for i, o in enumerate(oracles)]
    return recs, orc_rows


# --- checks and summaries ----------------------------------------------------------
def _stats(x: np.ndarray) -> dict:
    if x.size == 0:
        return {}
    return {"n": int(x.size), "mean": float(x.mean()), "std": float(x.std()), "var": float(x.var()),
            "min": float(x.min()), "max": float(x.max())}


def _checks(res: ExperimentResult) -> list[Check]:
    p, out = res.preset, []
    if p.name == "fig1":
        s = {k: res.tvds(k) for k in ("random", "cz1", "cz2", "cz3")}
        out.append(Check("std_cz1_lt_std_cz3", bool(s["cz1"].std() < s["cz3"].std()),
                         f"{s['cz1'].std():.6g} < {s['cz3'].std():.6g}", False))
        inside = s["cz1"].min() >= s["random"].min() and s["cz1"].max() <= s["random"].max()
        out.append(Check("cz1_range_inside_random_range", bool(inside),
                         f"[{s['cz1'].min():.6g}, {s['cz1'].max():.6g}] in "
                         f"[{s['random'].min():.6g}, {s['random'].max():.6g}]", False))
        out.append(Check("std_cz3_le_std_random", bool(s["cz3"].std() <= s["random"].std()),
                         f"{s['cz3'].std():.6g} <= {s['random'].std():.6g}", False))
    if p.name == "fig3":
        if "or" in p.profiles and {1, 16} <= set(p.r_grid):
            ratio = res.tvds(r=16, profile="or").mean() / res.tvds(r=1, profile="or").mean()
            out.append(Check("or_mean_ratio_r16_r1_in_2_4", bool(2 <= ratio <= 4), ratio, False))
            var_ok = all(res.tvds(r=r, mode=Mode.RC, profile="or").var() < res.tvds(r=r, profile="or").var()
                         for r in p.r_grid)
            out.append(Check("or_var_rc_lt_var_none_all_r", var_ok, str(var_ok), False))
            minimal = all(min(p.modes, key=lambda m: res.tvds(r=r, mode=m, profile="or").mean()) is Mode.RC_ED
                          for r in p.r_grid)
            out.append(Check("or_rc_ed_minimal_all_r", minimal, str(minimal), False))
        if "or_relax" in p.profiles and 16 in p.r_grid:
            mean = {m: res.tvds(r=16, mode=m, profile="or_relax").mean() for m in p.modes}
            ok = mean[Mode.RC_ED] <= mean[Mode.RC] <= mean[Mode.NONE] and mean[Mode.RC_ED] <= mean[Mode.ED]
            out.append(Check("relax_r16_mode_ordering", bool(ok),
                             " ".join(f"{m.value}={v:.6g}" for m, v in mean.items()), True))
    if p.name == "fig4":
        if "or" in p.profiles and 16 in p.r_grid:
            none, rc, ed = (res.tvds(r=16, mode=m, profile="or") for m in (Mode.NONE, Mode.RC, Mode.ED))
            c1 = correlation(none, none - ed)
            out.append(Check("or_r16_ed_uniform_offset", bool(abs(c1) < 0.5), c1, True))
            c2 = correlation(none, rc)
            out.append(Check("or_r16_rc_flattens", bool(c2 < 0.3), c2, True))
        if "or_relax" in p.profiles and 16 in p.r_grid:
            t = {m: res.tvds(r=16, mode=m, profile="or_relax") for m in p.modes}
            frac = float(np.mean((t[Mode.RC] - t[Mode.RC_ED]) > (t[Mode.NONE] - t[Mode.ED])))
            out.append(Check("relax_r16_synergy_fraction_ge_0.95", frac >= 0.95, frac, True))
    return out


def _summary(res: ExperimentResult) -> dict:
    groups: dict[str, dict] = {}
    keys = sorted({(x.panel, x.noise_profile, x.r, x.mode.value) for x in res.records})
    for panel, profile, r, mode in keys:
        m = Mode(mode)
        sel = [x for x in res.records if x.panel == panel and x.noise_profile == profile and x.r == r and x.mode is m]
        tv = np.array([x.tvd for x in sel])
        entry = {"tvd": _stats(tv), "retention_mean": float(np.mean([x.retention for x in sel]))}
        if m is not Mode.NONE:
            imp = np.array([x.improvement_factor for x in sel])
            if np.isfinite(imp).sum() >= 2:
                mu, sd = normal_fit(imp)
                entry["improvement_factor_fit"] = {"mean": mu, "std": sd}
        groups[f"{panel}|{profile}|r={r}|{mode}"] = entry
    return groups


def run_preset(preset: ExperimentPreset) -> ExperimentResult:
    runner = {"fig1": _run_fig1, "fig3": _run_sweep, "fig4": _run_sweep, "fig6": _run_fig6}[preset.name]
    recs, orc_rows = runner(preset)
    res = ExperimentResult(preset, _sort(recs), orc_rows, [], {})
    res.checks = _checks(res)
    res.summary = _summary(res)
    return res


# --- output --------------------------------------------------------------------
def records_csv(records: Sequence[TvdRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for x in records:
        w.writerow(x.row())
    return buf.getvalue()


def _oracles_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    fields = ["preset", "panel", "r", "oracle_id", "marked", "realization", "terms", "x_mask"]
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for row in sorted(rows, key=lambda d: (d["panel"], d["r"], d["oracle_id"])):
        w.writerow(row)
    return buf.getvalue()


def _json(obj) -> str:
    def default(o):
        if isinstance(o, float) and not math.isfinite(o):
            return str(o)
        raise TypeError(type(o))
    return json.dumps(obj, sort_keys=True, indent=2, default=default, allow_nan=False) + "\n"


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_outputs(res: ExperimentResult, out_dir: str | Path) -> list[Path]:
    """Write one CSV per panel, the oracle list, a manifest and a summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = res.preset.name
    written = []
    for panel in res.panels():
        path = out / f"{name}_{panel}.csv"
        path.write_text(records_csv([x for x in res.records if x.panel == panel]))
        written.append(path)
    path = out / f"{name}_oracles.csv"
    path.write_text(_oracles_csv(res.oracles))
    written.append(path)
    inputs = {"preset": res.preset.to_dict(),
              "noise_profiles": {p: PROFILES[p]().to_dict() for p in res.preset.profiles}}
    digest = hashlib.sha256(json.dumps(_clean(inputs), sort_keys=True).encode()).hexdigest()
    manifest = dict(inputs, input_sha256=digest, csv_fields=list(CSV_FIELDS),
                    files=[p.name for p in written])
    path = out / f"{name}_manifest.json"
    path.write_text(_json(_clean(manifest)))
    written.append(path)
    summary = {"checks": [asdict(c) for c in res.checks], "groups": res.summary}
    path = out / f"{name}_summary.json"
    path.write_text(_json(_clean(summary)))
    written.append(path)
    return written
