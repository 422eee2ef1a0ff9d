"""Experiment harness: config files, deterministic CSV outputs, manifests.

Configuration is TOML with four optional sections:

    [scenario]     fleet-tracking scenario (see ScenarioConfig)
    [fleet]        sampling ranges, each a two-element [lo, hi] array
    [seeds]        named RNG streams (randomization, thermal, setpoint,
                   fleet, override)
    [synthetic]    drifting-quadratic study (see SyntheticConfig)
    [replication]  replications (int) and vary ("randomization" or "all")

Unknown sections or keys are rejected with a message naming the offending
field.  Every output is CSV (12-significant-digit floats, "nan" for
undefined entries) plus one plain-text manifest; reruns with an identical
manifest produce byte-identical files.  Nothing here timestamps its output.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .regret import (
    ENUMERATION_CAP,
    BoundInputs,
    dynamic_regret_bound,
    relaxed_round_optimum,
    restart_regret_bound,
    short_horizon_regret_bound,
)
from .synthetic import SyntheticConfig, study
from .tcl import (
    FleetRanges,
    ScenarioConfig,
    Seeds,
    SimulationRecord,
    count_lockout_violations,
    metrics,
    simulate,
)

__all__ = [
    "CODE_VERSION",
    "ConfigError",
    "ReplicationSpec",
    "ExperimentConfig",
    "load_config",
    "apply_seed_overrides",
    "write_csv",
    "run_scenario",
    "run_replications",
    "run_synthetic",
    "bounds_report",
]

CODE_VERSION = "0.1.0"

MANIFEST_NAME = "manifest"
TIMESERIES_NAME = "timeseries.csv"
REGRET_NAME = "regret.csv"
SUMMARY_NAME = "summary.csv"
REPLICATIONS_NAME = "replications.csv"
SYNTHETIC_NAME = "synthetic.csv"


class ConfigError(ValueError):
    """Raised when a config file fails to parse or validate."""


@dataclass(frozen=True)
class ReplicationSpec:
    """How to run Monte-Carlo replications.

    `replications` of None falls back to the scenario's own replication
    count.  `vary` chooses which seed streams move between replications:
    "randomization" reruns the identical environment with fresh rounding
    draws; "all" redraws the environment too.
    """

    replications: int | None = None
    vary: str = "randomization"

    def __post_init__(self) -> None:
        if self.replications is not None and self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.vary not in ("randomization", "all"):
            raise ValueError("vary must be 'randomization' or 'all'")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig
    synthetic: SyntheticConfig
    replication: ReplicationSpec
    sha256: str


def _reject_unknown(section: str, given: dict, allowed: set[str]) -> None:
    for key in given:
        if key not in allowed:
            raise ConfigError(f"unknown key [{section}] {key}")


def _field_names(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)}


def _parse_range(section: dict, key: str) -> tuple[float, float]:
    value = section[key]
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"[fleet] {key} must be a two-element [lo, hi] array")
    return float(value[0]), float(value[1])


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate a TOML experiment config.

    Missing sections fall back to package defaults; unknown sections or
    keys and any value that fails dataclass validation raise ConfigError
    with the offending field named.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from exc

    _reject_unknown(
        "top level", doc, {"scenario", "fleet", "seeds", "synthetic", "replication"}
    )

    fleet_section = doc.get("fleet", {})
    _reject_unknown("fleet", fleet_section, _field_names(FleetRanges))
    range_kwargs = {key: _parse_range(fleet_section, key) for key in fleet_section}

    seeds_section = doc.get("seeds", {})
    _reject_unknown("seeds", seeds_section, _field_names(Seeds))
    for key, value in seeds_section.items():
        if not isinstance(value, int):
            raise ConfigError(f"[seeds] {key} must be an integer")

    scenario_section = dict(doc.get("scenario", {}))
    allowed = _field_names(ScenarioConfig) - {"ranges", "seeds"}
    _reject_unknown("scenario", scenario_section, allowed)
    if "tracked_loads" in scenario_section:
        scenario_section["tracked_loads"] = tuple(int(i) for i in scenario_section["tracked_loads"])

    synthetic_section = doc.get("synthetic", {})
    _reject_unknown("synthetic", synthetic_section, _field_names(SyntheticConfig))

    replication_section = doc.get("replication", {})
    _reject_unknown("replication", replication_section, _field_names(ReplicationSpec))

    try:
        ranges = FleetRanges(**range_kwargs)
        seeds = Seeds(**seeds_section)
        scenario = ScenarioConfig(ranges=ranges, seeds=seeds, **scenario_section)
        synthetic = SyntheticConfig(**synthetic_section)
        replication = ReplicationSpec(**replication_section)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc

    return ExperimentConfig(
        scenario=scenario,
        synthetic=synthetic,
        replication=replication,
        sha256=hashlib.sha256(raw).hexdigest(),
    )


def apply_seed_overrides(cfg: ExperimentConfig, overrides: Sequence[str]) -> ExperimentConfig:
    """Apply CLI `name=int` seed overrides to the scenario seeds."""
    if not overrides:
        return cfg
    valid = _field_names(Seeds)
    updates = {}
    for item in overrides:
        name, sep, value = item.partition("=")
        if not sep or name not in valid:
            raise ConfigError(
                f"seed override {item!r} must be name=int with name in "
                f"{sorted(valid)}"
            )
        try:
            updates[name] = int(value)
        except ValueError as exc:
            raise ConfigError(f"seed override {item!r}: {value!r} is not an integer") from exc
    seeds = dataclasses.replace(cfg.scenario.seeds, **updates)
    scenario = dataclasses.replace(cfg.scenario, seeds=seeds)
    return dataclasses.replace(cfg, scenario=scenario)


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.12g" % float(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write rows as CSV: header always present, floats at 12 significant
    digits, NaN serialized as "nan", "\\n" newlines."""
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            if len(row) != len(header):
                raise ValueError("row width does not match header")
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_manifest(
    out_dir: Path,
    command: str,
    cfg: ExperimentConfig,
    outputs: Sequence[str],
    extra: Sequence[tuple[str, str]] = (),
) -> None:
    sc = cfg.scenario
    lines = [
        f"command: {command}",
        f"code_version: {CODE_VERSION}",
        f"config_sha256: {cfg.sha256}",
        f"n: {sc.n}",
        "start_round: 1",
        f"end_round: {sc.rounds}",
        f"seed_randomization: {sc.seeds.randomization}",
        f"seed_thermal: {sc.seeds.thermal}",
        f"seed_setpoint: {sc.seeds.setpoint}",
        f"seed_fleet: {sc.seeds.fleet}",
        f"seed_override: {sc.seeds.override}",
    ]
    lines.extend(f"{k}: {v}" for k, v in extra)
    lines.append("outputs: " + " ".join(outputs))
    (out_dir / MANIFEST_NAME).write_text("\n".join(lines) + "\n")


def _relaxed_optima(record: SimulationRecord, tol: float, max_iter: int):
    """Warm-started per-round box optima for a run's loss stream."""
    n = record.x.shape[1]
    xs = np.zeros((record.rounds, n))
    fs = np.zeros(record.rounds)
    x0 = np.full(n, 0.5)
    for t, oracle in enumerate(record.oracles):
        x_star, f_star = relaxed_round_optimum(oracle, tol=tol, max_iter=max_iter, x0=x0)
        xs[t] = x_star
        fs[t] = f_star
        x0 = x_star
    return xs, fs


def _scenario_bound_curves(record: SimulationRecord, cfg: ScenarioConfig, variation: np.ndarray):
    """Restart and dynamic bound prefixes; nan where a bound is undefined."""
    l1 = max(o.lipschitz_l1() for o in record.oracles)
    l2 = max(o.lipschitz_l2() for o in record.oracles)
    rounds = record.rounds
    restart = np.full(rounds, np.nan)
    dynamic = np.full(rounds, np.nan)
    for t in range(1, rounds + 1):
        v = float(variation[t - 1])
        dynamic[t - 1] = dynamic_regret_bound(
            BoundInputs(cfg.n, cfg.step_scale, l2, t, grad_l1=l1, variation=v)
        )
        if t >= cfg.block_length:
            try:
                restart[t - 1], _ = restart_regret_bound(
                    BoundInputs(
                        cfg.n,
                        cfg.step_scale,
                        l2,
                        t,
                        grad_l1=l1,
                        block_length=cfg.block_length,
                        variation=v,
                    )
                )
            except ValueError:
                pass  # restart bound undefined before the first full block
    return restart, dynamic, l1, l2


def _regret_curves(record: SimulationRecord, cfg: ScenarioConfig):
    """Empirical and relaxed-proxy cumulative regret vs box optima."""
    xs, fs = _relaxed_optima(record, cfg.relaxed_opt_tol, cfg.relaxed_opt_max_iter)
    steps = np.linalg.norm(np.diff(xs, axis=0), axis=1) if record.rounds > 1 else np.empty(0)
    variation = np.concatenate([[0.0], np.cumsum(steps)])
    regret_empirical = np.cumsum(record.losses_implemented - fs)
    regret_relaxed = np.cumsum(record.losses_relaxed - fs)
    return regret_empirical, regret_relaxed, variation


def run_scenario(
    config_path: str | Path,
    out_dir: str | Path,
    seed_overrides: Sequence[str] = (),
) -> Path:
    """Run the configured scenario once and write all outputs.

    Simulates the randomized binary policy and its relaxed twin from shared
    seed streams, computes regret against warm-started per-round box optima
    of the binary run's losses, and writes timeseries.csv, regret.csv,
    summary.csv and the manifest into `out_dir`.
    """
    cfg = apply_seed_overrides(load_config(config_path), seed_overrides)
    sc = cfg.scenario
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    binary = simulate(sc, mode="binary")
    relaxed = simulate(sc, mode="relaxed")
    regret_empirical, regret_relaxed, variation = _regret_curves(binary, sc)
    restart_bound, dynamic_bound, l1, l2 = _scenario_bound_curves(binary, sc, variation)

    header = [
        "round",
        "setpoint_kw",
        "consumption_bogd_kw",
        "consumption_relaxed_kw",
        "uncontrollable_kw",
    ] + [f"temp_load{i}" for i in sc.tracked_loads]
    rows = []
    for t in range(sc.rounds):
        row = [
            t + 1,
            binary.setpoint[t],
            binary.consumption[t],
            relaxed.consumption[t],
            binary.uncontrollable[t],
        ]
        row.extend(binary.temperatures[t, i] for i in sc.tracked_loads)
        rows.append(row)
    write_csv(out / TIMESERIES_NAME, header, rows)

    write_csv(
        out / REGRET_NAME,
        ["round", "regret_empirical", "regret_relaxed_proxy", "bound_restart", "bound_dynamic"],
        (
            [t + 1, regret_empirical[t], regret_relaxed[t], restart_bound[t], dynamic_bound[t]]
            for t in range(sc.rounds)
        ),
    )

    m = metrics(binary, relaxed)
    k_rounds = sc.lockout_rounds
    summary_rows = [
        ("rmse_bogd_kw", m.rmse_binary),
        ("rmse_relaxed_kw", m.rmse_relaxed),
        ("rel_rmse_bogd", m.rel_rmse_binary),
        ("rel_rmse_relaxed", m.rel_rmse_relaxed),
        ("tracking_err_bogd", m.tracking_err_binary),
        ("tracking_err_relaxed", m.tracking_err_relaxed),
        ("mean_relative_consumption_gap", m.mean_relative_consumption_gap),
        ("mean_setpoint_kw", m.mean_setpoint),
        ("lockout_violations_bogd", count_lockout_violations(binary, k_rounds)),
        ("lockout_violations_relaxed", count_lockout_violations(relaxed, k_rounds)),
        ("regret_empirical_final", regret_empirical[-1]),
        ("regret_relaxed_proxy_final", regret_relaxed[-1]),
        ("variation_total", variation[-1]),
        ("lipschitz_l1", l1),
        ("lipschitz_l2", l2),
    ]
    write_csv(out / SUMMARY_NAME, ["metric", "value"], summary_rows)

    _write_manifest(
        out,
        "run",
        cfg,
        [TIMESERIES_NAME, REGRET_NAME, SUMMARY_NAME],
        extra=[("rounds", str(sc.rounds))],
    )
    return out


def run_replications(
    config_path: str | Path,
    out_dir: str | Path,
    spec: ReplicationSpec | None = None,
    seed_overrides: Sequence[str] = (),
) -> Path:
    """Monte-Carlo replications of the scenario's binary policy.

    Replication k shifts the varying seed streams by k (replication 0 is
    the base scenario, so a single replication reproduces `run_scenario`'s
    regret column exactly).  Replications run in index order and the
    written curves depend only on the config, so the output is independent
    of any execution parallelism.  Bound columns come from replication 0's
    loss stream; with vary="randomization" the environment is shared, so
    they are representative of every replication.
    """
    cfg = apply_seed_overrides(load_config(config_path), seed_overrides)
    if spec is None:
        spec = cfg.replication
    sc = cfg.scenario
    reps = spec.replications if spec.replications is not None else sc.replications
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    curves = np.zeros((reps, sc.rounds))
    restart_bound = dynamic_bound = None
    for k in range(reps):
        sc_k = dataclasses.replace(sc, seeds=sc.seeds.shifted(k, spec.vary))
        record = simulate(sc_k, mode="binary")
        regret_empirical, _, variation = _regret_curves(record, sc_k)
        curves[k] = regret_empirical
        if k == 0:
            restart_bound, dynamic_bound, _, _ = _scenario_bound_curves(record, sc_k, variation)

    mean = curves.mean(axis=0)
    if reps > 1:
        stderr = curves.std(axis=0, ddof=1) / np.sqrt(reps)
    else:
        stderr = np.zeros(sc.rounds)

    write_csv(
        out / REPLICATIONS_NAME,
        ["round", "regret_mean", "regret_stderr", "bound_restart", "bound_dynamic"],
        (
            [t + 1, mean[t], stderr[t], restart_bound[t], dynamic_bound[t]]
            for t in range(sc.rounds)
        ),
    )
    _write_manifest(
        out,
        "replicate",
        cfg,
        [REPLICATIONS_NAME],
        extra=[("rounds", str(sc.rounds)), ("replications", str(reps)), ("vary", spec.vary)],
    )
    return out


def run_synthetic(
    config_path: str | Path,
    out_dir: str | Path,
    replications: int | None = None,
) -> Path:
    """Run the drifting-quadratic study and write its curves.

    True binary regret (per-round optima by enumeration) requires the
    study dimension to stay within the enumeration cap.
    """
    cfg = load_config(config_path)
    syn = cfg.synthetic
    if syn.n > ENUMERATION_CAP:
        raise ConfigError(
            f"synthetic n={syn.n} exceeds the enumeration cap {ENUMERATION_CAP}"
        )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    result = study(syn, replications=replications)
    write_csv(
        out / SYNTHETIC_NAME,
        [
            "round",
            "regret_mean",
            "regret_stderr",
            "regret_relaxed",
            "variation",
            "bound_dynamic",
            "bound_short_horizon",
            "bound_restart",
        ],
        (
            [
                t + 1,
                result.mean_regret[t],
                result.stderr_regret[t],
                result.relaxed_regret[t],
                result.variation_curve[t],
                result.bound_dynamic[t],
                result.bound_short[t],
                result.bound_restart[t],
            ]
            for t in range(syn.rounds)
        ),
    )

    reps = syn.replications if replications is None else replications
    lines = [
        "command: synthetic",
        f"code_version: {CODE_VERSION}",
        f"config_sha256: {cfg.sha256}",
        f"n: {syn.n}",
        "start_round: 1",
        f"end_round: {syn.rounds}",
        f"seed_base: {syn.seed}",
        f"replications: {reps}",
        f"block_length: {syn.block_length}",
        "outputs: " + SYNTHETIC_NAME,
    ]
    (out / MANIFEST_NAME).write_text("\n".join(lines) + "\n")
    return out


def bounds_report(inputs: BoundInputs) -> list[tuple[str, float]]:
    """Evaluate every closed-form bound at one set of inputs.

    Returns (name, value) pairs; bounds undefined at these inputs are
    reported as nan.  The restart bound contributes its exponent too.
    """
    rows: list[tuple[str, float]] = [
        ("dynamic_regret_bound", dynamic_regret_bound(inputs))
    ]
    try:
        rows.append(("short_horizon_regret_bound", short_horizon_regret_bound(inputs)))
    except ValueError:
        rows.append(("short_horizon_regret_bound", float("nan")))
    try:
        bound, eps = restart_regret_bound(inputs)
    except ValueError:
        bound, eps = float("nan"), float("nan")
    rows.append(("restart_regret_bound", bound))
    rows.append(("restart_exponent", eps))
    return rows
