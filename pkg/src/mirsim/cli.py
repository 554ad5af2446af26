"""Experiment runner and command-line interface.

``run_experiment`` reproduces the benchmark protocol: one shared mobility
trace per seed, then per scenario a per-slot placement search and slot
evaluation, averaged across seeds.  Scenario variants:

* M-IRS-NOMA  -- joint UAV + vehicle placement every slot
* S-IRS-NOMA  -- vehicle frozen at the slot-1 joint optimum (or configured point)
* No-IRS-NOMA -- UAV only, reflected link disabled
* M-IRS-OMA   -- joint placement under the orthogonal-access baseline

``emit_outputs`` writes results.json plus plot-ready CSVs with stable,
documented schemas.  Exit codes: 0 success, 2 config/usage error, 3 when
some slot's best placement leaves every user below the SINR threshold
(reported in the outputs, not fatal).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import channel, mobility, noma, optimizer, scenario
from .scenario import ConfigError, ScenarioConfig

#: scenario name -> (surface mode, access mode)
SCENARIOS: dict[str, tuple[str, str]] = {
    "M-IRS-NOMA": ("mobile", "noma"),
    "S-IRS-NOMA": ("static", "noma"),
    "No-IRS-NOMA": ("none", "noma"),
    "M-IRS-OMA": ("mobile", "oma"),
}

RATES_COLUMNS = ["slot", "scenario", "sum_rate"]
FRACTIONS_COLUMNS = ["slot", "pair", "alpha_weak", "alpha_strong"]
TRAJECTORY_COLUMNS = ["slot", "entity", "x", "y", "z"]
CONVERGENCE_COLUMNS = ["scenario", "slot", "generation", "best_fitness", "mean_fitness"]
USERS_COLUMNS = ["slot", "scenario", "user", "pair_id", "alpha", "sinr_db", "rate"]


@dataclass
class ExperimentReport:
    config: dict = field(default_factory=dict)
    seeds: list[int] = field(default_factory=list)
    scenario_names: list[str] = field(default_factory=list)
    num_slots: int = 0
    avg_sum_rate: dict[str, list[float]] = field(default_factory=dict)
    per_seed_sum_rate: dict[str, list[list[float]]] = field(default_factory=dict)
    improvement_pct: dict[str, dict] = field(default_factory=dict)
    power_fractions: list[dict] = field(default_factory=list)
    fractions_scenario: Optional[str] = None
    trajectories: dict[str, list[dict]] = field(default_factory=dict)
    convergence: dict[str, list[dict]] = field(default_factory=dict)
    user_rows: list[list] = field(default_factory=list)
    infeasible: list[dict] = field(default_factory=list)
    evaluations: int = 0

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "seeds": list(self.seeds),
            "scenarios": list(self.scenario_names),
            "num_slots": self.num_slots,
            "avg_sum_rate": self.avg_sum_rate,
            "per_seed_sum_rate": self.per_seed_sum_rate,
            "improvement_pct": self.improvement_pct,
            "power_fractions": self.power_fractions,
            "fractions_scenario": self.fractions_scenario,
            "trajectories": self.trajectories,
            "convergence": self.convergence,
            "per_user": {"columns": USERS_COLUMNS, "rows": self.user_rows},
            "infeasible_slots": self.infeasible,
            "ga_evaluations": self.evaluations,
        }


def resolve_scenarios(names) -> list[str]:
    """Canonicalize scenario names, preserving order; unknown names are errors."""
    canonical = {k.lower(): k for k in SCENARIOS}
    out: list[str] = []
    for name in names:
        key = name.strip().lower()
        if key not in canonical:
            raise ConfigError(
                f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
        if canonical[key] not in out:
            out.append(canonical[key])
    if not out:
        raise ConfigError("at least one scenario required")
    return out


def run_experiment(cfg: ScenarioConfig, scenarios, seeds,
                   trace: Optional[mobility.MobilityTrace] = None) -> ExperimentReport:
    """Run every (seed, scenario) job and aggregate; deterministic given inputs."""
    names = resolve_scenarios(scenarios)
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ConfigError("at least one seed required")

    num_slots = trace.num_slots if trace is not None else cfg.mobility.num_slots
    noma_names = [n for n in names if SCENARIOS[n][1] == "noma"]
    report = ExperimentReport(
        config=scenario.config_to_dict(cfg), seeds=seeds, scenario_names=names,
        num_slots=num_slots,
        per_seed_sum_rate={name: [] for name in names},
        fractions_scenario=("M-IRS-NOMA" if "M-IRS-NOMA" in noma_names
                            else (noma_names[0] if noma_names else None)),
    )

    for seed_index, seed in enumerate(seeds):
        if trace is not None:
            seed_trace = trace
        else:
            seed_trace = mobility.generate_trace(
                cfg, scenario.stream(seed, scenario.MOBILITY_STREAM))
        for name in names:
            surface, access = SCENARIOS[name]
            placements, records = optimizer.optimize_trajectory(
                seed_trace, cfg, seed, irs=surface, access=access)
            report.evaluations += sum(r.evaluations for r in records)
            kind = {"mobile": "m-irs", "static": "s-irs", "none": "no-irs"}[surface]
            evaluate = noma.oma_slot_sum_rate if access == "oma" else noma.slot_sum_rate
            slot_rates = []
            for slot, placement in enumerate(placements):
                result = evaluate(placement, seed_trace.positions[slot], cfg, kind)
                slot_rates.append(result.sum_rate)
                if not result.any_feasible:
                    report.infeasible.append(
                        {"scenario": name, "seed": seed, "slot": slot})
                if seed_index == 0:
                    _record_first_seed_detail(report, name, slot, placement,
                                              result, records[slot])
            report.per_seed_sum_rate[name].append(slot_rates)

    for name in names:
        per_seed = np.asarray(report.per_seed_sum_rate[name])
        report.avg_sum_rate[name] = [float(v) for v in per_seed.mean(axis=0)]

    base = "M-IRS-NOMA" if "M-IRS-NOMA" in names else names[0]
    for other in names:
        if other == base:
            continue
        per_slot = []
        for a, b in zip(report.avg_sum_rate[base], report.avg_sum_rate[other]):
            per_slot.append(100.0 * (a - b) / b if b != 0 else None)
        mean = (float(np.mean([v for v in per_slot]))
                if all(v is not None for v in per_slot) else None)
        report.improvement_pct[f"{base} vs {other}"] = {
            "baseline": other, "per_slot": per_slot, "mean": mean}
    return report


def _record_first_seed_detail(report, name, slot, placement, result, record):
    """Trajectories, convergence, fractions, and per-user rows from the first seed."""
    entry = {"slot": slot,
             "uav": [float(v) for v in placement.uav],
             "irs": None if SCENARIOS[name][0] == "none"
                    else [float(v) for v in placement.irs]}
    report.trajectories.setdefault(name, []).append(entry)
    report.convergence.setdefault(name, []).append({
        "slot": slot,
        "best": [float(v) for v in record.best_fitness],
        "mean": [float(v) for v in record.mean_fitness],
    })
    report.user_rows.extend(noma.slot_result_rows(result, slot, name))
    if name == report.fractions_scenario:
        for k, pair in enumerate(result.pairs):
            report.power_fractions.append({
                "scenario": name, "slot": slot, "pair": k,
                "weak_user": pair.weak, "strong_user": pair.strong,
                "alpha_weak": pair.alpha_weak, "alpha_strong": pair.alpha_strong,
            })


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit_outputs(report: ExperimentReport, out_dir: str | Path) -> dict[str, Path]:
    """Write results.json and the CSV set; rerunning is byte-identical."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / f"{name}.csv" for name in
             ("rates", "fractions", "trajectory", "convergence", "users")}
    paths["results"] = out / "results.json"

    try:
        with open(paths["results"], "w") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write {paths['results']}: {exc}") from exc

    rate_rows = []
    for slot in range(report.num_slots):
        for name in report.scenario_names:
            rate_rows.append([slot, name, report.avg_sum_rate[name][slot]])
    _write_csv(paths["rates"], RATES_COLUMNS, rate_rows)

    fraction_rows = [[f["slot"], f["pair"], f["alpha_weak"], f["alpha_strong"]]
                     for f in report.power_fractions]
    _write_csv(paths["fractions"], FRACTIONS_COLUMNS, fraction_rows)

    trajectory_rows = []
    main_scenario = ("M-IRS-NOMA" if "M-IRS-NOMA" in report.trajectories
                     else next(iter(report.trajectories), None))
    if main_scenario is not None:
        irs_height = report.config.get("irs_height_m", 0.0)
        for entry in report.trajectories[main_scenario]:
            x, y, z = entry["uav"]
            trajectory_rows.append([entry["slot"], "uav", x, y, z])
            if entry["irs"] is not None:
                trajectory_rows.append(
                    [entry["slot"], "irs", entry["irs"][0], entry["irs"][1], irs_height])
    _write_csv(paths["trajectory"], TRAJECTORY_COLUMNS, trajectory_rows)

    convergence_rows = []
    for name in report.scenario_names:
        for rec in report.convergence.get(name, []):
            for gen, (best, mean) in enumerate(zip(rec["best"], rec["mean"])):
                convergence_rows.append([name, rec["slot"], gen, best, mean])
    _write_csv(paths["convergence"], CONVERGENCE_COLUMNS, convergence_rows)

    _write_csv(paths["users"], USERS_COLUMNS, report.user_rows)
    return paths


def _default_placement(cfg: ScenarioConfig) -> channel.Placement:
    r = cfg.region
    cx = (r.x_min + r.x_max) / 2.0
    cy = (r.y_min + r.y_max) / 2.0
    return channel.Placement(uav=(cx, cy, cfg.ga.uav_alt_min), irs=(cx, cy))


def _parse_floats(text: str, count: int, flag: str) -> tuple[float, ...]:
    parts = text.split(",")
    if len(parts) != count:
        raise ConfigError(f"{flag}: expected {count} comma-separated numbers, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"{flag}: {exc}") from exc


def _load_cfg(args) -> ScenarioConfig:
    return scenario.load_config(args.config) if args.config else ScenarioConfig()


def _cmd_run(args) -> int:
    cfg = _load_cfg(args)
    base_seed = scenario.resolve_master_seed(cfg, args.seed)
    num_seeds = args.seeds if args.seeds is not None else cfg.num_seeds
    if num_seeds < 1:
        raise ConfigError("--seeds: must be >= 1")
    seeds = [base_seed + i for i in range(num_seeds)]
    names = resolve_scenarios(args.scenarios.split(",")) if args.scenarios \
        else list(SCENARIOS)
    trace = mobility.load_trace(args.trace, cfg.region) if args.trace else None

    report = run_experiment(cfg, names, seeds, trace=trace)
    paths = emit_outputs(report, args.out)

    print(f"seeds {seeds[0]}..{seeds[-1]} ({len(seeds)}), "
          f"slots {report.num_slots}, scenarios {', '.join(names)}")
    for name in names:
        rates = " ".join(f"{v:.4f}" for v in report.avg_sum_rate[name])
        print(f"  {name:12s} avg sum rate per slot: {rates}")
    for label, imp in report.improvement_pct.items():
        if imp["mean"] is not None:
            print(f"  {label}: {imp['mean']:+.2f}% mean")
    if report.infeasible:
        print(f"  {len(report.infeasible)} slot(s) with no user meeting the "
              f"SINR threshold (details in results.json)")
    print(f"wrote {paths['results'].parent}/: "
          + ", ".join(sorted(p.name for p in paths.values())))
    return 3 if report.infeasible else 0


def _cmd_trace(args) -> int:
    cfg = _load_cfg(args)
    seed = scenario.resolve_master_seed(cfg, args.seed)
    trace = mobility.generate_trace(cfg, scenario.stream(seed, scenario.MOBILITY_STREAM))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "trace.csv"
    mobility.save_trace(trace, path)
    print(f"wrote {path} ({trace.num_slots} slots x {trace.num_users} users)")
    return 0


def _cmd_inspect_channel(args) -> int:
    cfg = _load_cfg(args)
    seed = scenario.resolve_master_seed(cfg, args.seed)
    trace = mobility.generate_trace(cfg, scenario.stream(seed, scenario.MOBILITY_STREAM))
    if not 0 <= args.slot < trace.num_slots:
        raise ConfigError(f"--slot: must be in [0, {trace.num_slots - 1}]")
    placement = _default_placement(cfg)
    if args.uav:
        placement = channel.Placement(uav=_parse_floats(args.uav, 3, "--uav"),
                                      irs=placement.irs)
    if args.irs:
        placement = channel.Placement(uav=placement.uav,
                                      irs=_parse_floats(args.irs, 2, "--irs"))
    try:
        channel.validate_placement(placement, cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = channel.channel_debug_table(placement, trace.positions[args.slot], cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "channel.csv"
    header = list(rows[0].keys()) if rows else []
    _write_csv(path, header, [[row[k] for k in header] for row in rows])
    print(f"wrote {path} ({len(rows)} users)")
    return 0


def _cmd_converge(args) -> int:
    cfg = _load_cfg(args)
    seed = scenario.resolve_master_seed(cfg, args.seed)
    names = resolve_scenarios([args.scenario])
    surface, access = SCENARIOS[names[0]]
    trace = mobility.generate_trace(cfg, scenario.stream(seed, scenario.MOBILITY_STREAM))
    if not 0 <= args.slot < trace.num_slots:
        raise ConfigError(f"--slot: must be in [0, {trace.num_slots - 1}]")
    _, records = optimizer.optimize_trajectory(trace, cfg, seed, irs=surface, access=access)
    record = records[args.slot]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "convergence.csv"
    rows = [[gen, best, mean] for gen, (best, mean)
            in enumerate(zip(record.best_fitness, record.mean_fitness))]
    _write_csv(path, ["generation", "best_fitness", "mean_fitness"], rows)
    print(f"wrote {path} ({len(rows)} generations)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mirsim",
        description="UAV + mobile reflecting-surface network simulator and optimizer")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="config document (YAML)")
        p.add_argument("--seed", type=int, metavar="N", help="master seed override")
        p.add_argument("--out", default="out", metavar="DIR", help="output directory")

    run_p = sub.add_parser("run", help="run the full multi-seed experiment")
    common(run_p)
    run_p.add_argument("--seeds", type=int, metavar="N",
                       help="number of seeds to average (default: config num_seeds)")
    run_p.add_argument("--scenarios", metavar="LIST",
                       help="comma-separated scenario names (default: all)")
    run_p.add_argument("--trace", metavar="PATH",
                       help="externally supplied mobility trace CSV")
    run_p.set_defaults(func=_cmd_run)

    trace_p = sub.add_parser("trace", help="generate and export a mobility trace")
    common(trace_p)
    trace_p.set_defaults(func=_cmd_trace)

    inspect_p = sub.add_parser("inspect-channel", help="dump per-user channel internals")
    common(inspect_p)
    inspect_p.add_argument("--slot", type=int, default=0, metavar="T")
    inspect_p.add_argument("--uav", metavar="X,Y,Z", help="UAV position (default: center)")
    inspect_p.add_argument("--irs", metavar="X,Y", help="vehicle position (default: center)")
    inspect_p.set_defaults(func=_cmd_inspect_channel)

    conv_p = sub.add_parser("converge", help="export one slot's GA convergence curve")
    common(conv_p)
    conv_p.add_argument("--slot", type=int, default=0, metavar="T")
    conv_p.add_argument("--scenario", default="M-IRS-NOMA", metavar="NAME")
    conv_p.set_defaults(func=_cmd_converge)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
