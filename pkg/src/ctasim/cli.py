"""Command-line front end.

Subcommands: generate-population, contacts-report, run, sweep, sensitivity,
calibrate.  Every command is deterministic for a given invocation; outputs
carry metadata sidecars naming the config and seeds that produced them.
Errors print a single machine-readable line to stderr and exit nonzero.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__, backend
from .errors import ConfigurationError
from .synthpop import PopulationSpec, generate_population
from .contacts import POLICY_PRESETS, contact_distribution_report
from .engine import (ScenarioConfig, run, sweep, aggregate_sweep,
                     experiment_grid, sensitivity_scenarios,
                     calibration_report, write_sweep_csv, write_metadata,
                     scenario_population, SENSITIVITY_PARAMETERS,
                     DAILY_COLUMNS)


def _fail(message: str) -> int:
    sys.stderr.write(json.dumps({"error": message}) + "\n")
    return 2


def _parse_value(text: str):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("inf", "unlimited"):
        return math.inf
    if low == "null":
        return None
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _apply_overrides(scenario_dict: dict, pairs: list[str]) -> dict:
    """Dotted key=value overrides; unknown keys are rejected before any run
    starts (validation happens on construction)."""
    for pair in pairs:
        if "=" not in pair:
            raise ConfigurationError(f"override: expected key=value, got '{pair}'")
        key, text = pair.split("=", 1)
        value = _parse_value(text)
        parts = key.split(".")
        if len(parts) == 1:
            scenario_dict[parts[0]] = value
        elif len(parts) == 2 and parts[0] in ("policy", "disease", "population"):
            section = {"policy": "policy_overrides",
                       "disease": "disease_overrides",
                       "population": "population"}[parts[0]]
            sub = dict(scenario_dict.get(section) or {})
            sub[parts[1]] = value
            scenario_dict[section] = sub
        else:
            raise ConfigurationError(f"override: unknown key '{key}'")
    return scenario_dict


def _load_scenario(args) -> ScenarioConfig:
    if getattr(args, "scenario", None):
        with open(args.scenario) as fh:
            d = json.load(fh)
    else:
        d = {}
    if getattr(args, "seed", None) is not None:
        d["base_seed"] = args.seed
    d = _apply_overrides(d, getattr(args, "set", None) or [])
    return ScenarioConfig.from_json_dict(d)


def _progress(done: int, total: int):
    sys.stderr.write(f"\r{done}/{total} runs")
    sys.stderr.flush()
    if done == total:
        sys.stderr.write("\n")


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- subcommands -------------------------------------------------------------

def cmd_generate_population(args) -> int:
    if args.spec:
        spec = PopulationSpec.from_json_file(args.spec)
    else:
        spec = PopulationSpec()
    pop = generate_population(spec, args.seed)
    os.makedirs(args.out, exist_ok=True)
    _write_json(os.path.join(args.out, "population_summary.json"), pop.summary())
    _write_json(os.path.join(args.out, "population_spec.json"),
                {"spec": spec.to_json_dict(), "seed": args.seed,
                 "package_version": __version__})
    if args.edges:
        pop.network.export_edge_csv(os.path.join(args.out, "edges.csv"))
    print(json.dumps(pop.summary(), indent=2))
    return 0


def cmd_contacts_report(args) -> int:
    if args.policy not in POLICY_PRESETS:
        return _fail(f"policy: unknown preset '{args.policy}'")
    scenario = _load_scenario(args)
    pop = scenario_population(scenario)
    policy = POLICY_PRESETS[args.policy]()
    report = contact_distribution_report(pop, policy, n_days=args.days,
                                         seed=scenario.base_seed)
    os.makedirs(args.out, exist_ok=True)
    report.write_csv(os.path.join(args.out, f"contacts_{args.policy}.csv"))
    summary = {
        "policy": args.policy,
        "mean": report.mean,
        "sd": report.sd,
        "max": int(np.flatnonzero(report.histogram)[-1]) if report.histogram.any() else 0,
        "days": report.n_days,
        "per_layer_mean": report.per_layer_mean,
    }
    _write_json(os.path.join(args.out, f"contacts_{args.policy}_summary.json"),
                summary)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_run(args) -> int:
    scenario = _load_scenario(args)
    os.makedirs(args.out, exist_ok=True)
    ledger_path = (os.path.join(args.out, f"ledger_{args.replicate}.csv")
                   if args.ledger else None)
    result = run(scenario, replicate=args.replicate, ledger_path=ledger_path)
    result.write_daily_csv(os.path.join(args.out, f"daily_{args.replicate}.csv"))
    write_metadata(os.path.join(args.out, f"run_{args.replicate}.meta.json"),
                   scenario, extra={"replicate": args.replicate})
    summary = result.summary_dict()
    _write_json(os.path.join(args.out, f"summary_{args.replicate}.json"), summary)
    print(json.dumps(summary, indent=2))
    return 0


def _finish_sweep(scenarios, args, label: str) -> int:
    os.makedirs(args.out, exist_ok=True)
    rows = sweep(scenarios, args.replicates, workers=args.workers,
                 progress=_progress if not args.quiet else None)
    summary = aggregate_sweep(rows)
    write_sweep_csv(summary, os.path.join(args.out, f"{label}_summary.csv"))
    _write_json(os.path.join(args.out, f"{label}_runs.json"), rows)
    _write_json(os.path.join(args.out, f"{label}.meta.json"), {
        "scenarios": [s.to_json_dict() for s in scenarios],
        "replicates": args.replicates,
        "package_version": __version__,
        "backend": backend.name,
    })
    errors = [r for r in summary if r.get("error")]
    print(f"{label}: {len(scenarios)} scenarios x {args.replicates} replicates"
          f" -> {os.path.join(args.out, f'{label}_summary.csv')}"
          + (f" ({len(errors)} scenario rows failed)" if errors else ""))
    return 1 if errors else 0


def cmd_sweep(args) -> int:
    base_dict = {}
    if args.scenario:
        with open(args.scenario) as fh:
            base_dict = json.load(fh)
    if args.seed is not None:
        base_dict["base_seed"] = args.seed
    base_dict = _apply_overrides(base_dict, args.set or [])
    base = ScenarioConfig.from_json_dict(base_dict)
    scenarios = experiment_grid(base)
    if args.cta is not None:
        scenarios = [s for s in scenarios if s.cta_adoption in set(args.cta)]
    if args.capacity is not None:
        wanted = {math.inf if c in ("inf", "unlimited") else float(c)
                  for c in args.capacity}
        scenarios = [s for s in scenarios
                     if s.weekly_test_capacity in wanted]
    if args.policy:
        scenarios = [s for s in scenarios if s.testing_policy == args.policy]
    if args.compliance is not None:
        scenarios = [s for s in scenarios
                     if s.notified_compliance in set(args.compliance)]
    if not scenarios:
        return _fail("sweep filters left an empty grid")
    return _finish_sweep(scenarios, args, "sweep")


def cmd_sensitivity(args) -> int:
    values = args.values if args.values else None
    capacities = tuple(math.inf if c in ("inf", "unlimited") else float(c)
                       for c in args.capacity) if args.capacity else (0.015, math.inf)
    scenarios = sensitivity_scenarios(
        args.parameter, values=values,
        adoption_levels=tuple(args.adoption) if args.adoption else (0.0, 0.2, 0.4, 0.6, 0.8),
        capacities=capacities)
    if args.seed is not None:
        rebuilt = []
        for s in scenarios:
            d = s.to_json_dict()
            d["base_seed"] = args.seed
            rebuilt.append(ScenarioConfig.from_json_dict(d))
        scenarios = rebuilt
    return _finish_sweep(scenarios, args, f"sensitivity_{args.parameter}")


def cmd_calibrate(args) -> int:
    base_dict = {"policy_preset": "business_as_usual",
                 "weekly_test_capacity": 0.0, "cta_adoption": 0.0}
    if args.scenario:
        with open(args.scenario) as fh:
            base_dict.update(json.load(fh))
    if args.seed is not None:
        base_dict["base_seed"] = args.seed
    base_dict = _apply_overrides(base_dict, args.set or [])
    base = ScenarioConfig.from_json_dict(base_dict)
    report = calibration_report(args.beta, replicates=args.replicates,
                                base=base, target_r0=args.target,
                                workers=args.workers)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "calibration.csv"), "w") as fh:
        fh.write("beta_network,mean_r0,sd_r0,replicates\n")
        for row in report["grid"]:
            fh.write(f"{row['beta_network']:.6g},{row['mean_r0']:.6g},"
                     f"{row['sd_r0']:.6g},{row['replicates']}\n")
    _write_json(os.path.join(args.out, "calibration.json"), report)
    if not report["target_bracketed"]:
        sys.stderr.write(json.dumps(
            {"warning": "no grid point within 0.3 of target R0"}) + "\n")
    print(json.dumps({k: report[k] for k in
                      ("best_beta_network", "best_mean_r0", "target_r0")},
                     indent=2))
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctasim",
        description="Epidemic simulation on a multi-layer social network "
                    "with contact-tracing apps and capacity-limited testing.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-population",
                       help="build a synthetic population and report it")
    p.add_argument("--spec", help="population spec JSON file")
    p.add_argument("--seed", type=int, default=ScenarioConfig().base_seed)
    p.add_argument("--out", default="out/population")
    p.add_argument("--edges", action="store_true",
                   help="also export the full edge list CSV")
    p.set_defaults(func=cmd_generate_population)

    p = sub.add_parser("contacts-report",
                       help="daily contact-count distribution for a policy preset")
    p.add_argument("--policy", default="business_as_usual",
                   choices=sorted(POLICY_PRESETS))
    p.add_argument("--days", type=int, default=7)
    p.add_argument("--scenario", help="scenario JSON (for population and seed)")
    p.add_argument("--seed", type=int)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--out", default="out/contacts")
    p.set_defaults(func=cmd_contacts_report)

    p = sub.add_parser("run", help="run one scenario replicate")
    p.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--replicate", type=int, default=0)
    p.add_argument("--seed", type=int)
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override, e.g. cta_adoption=0.6 or policy.work_freq=2")
    p.add_argument("--ledger", action="store_true",
                   help="write the per-infection audit ledger CSV")
    p.add_argument("--out", default="out/run")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run the full experiment grid (filterable)")
    p.add_argument("--scenario", help="base scenario JSON file")
    p.add_argument("--seed", type=int)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--replicates", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--cta", type=float, nargs="+",
                   help="filter CTA adoption levels")
    p.add_argument("--capacity", nargs="+",
                   help="filter weekly capacities (fractions or 'unlimited')")
    p.add_argument("--policy", choices=("priority_symptomatic", "first_come"))
    p.add_argument("--compliance", type=float, nargs="+")
    p.add_argument("--quiet", action="store_true")
    p.add_argument("--out", default="out/sweep")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sensitivity",
                       help="one-parameter sensitivity sweep crossed with CTA adoption")
    p.add_argument("--parameter", required=True,
                   choices=sorted(SENSITIVITY_PARAMETERS))
    p.add_argument("--values", type=float, nargs="+")
    p.add_argument("--adoption", type=float, nargs="+")
    p.add_argument("--capacity", nargs="+")
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--quiet", action="store_true")
    p.add_argument("--out", default="out/sensitivity")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("calibrate",
                       help="pick the network beta matching a target R0")
    p.add_argument("--target", type=float, default=2.8)
    p.add_argument("--beta", type=float, nargs="+", required=True)
    p.add_argument("--replicates", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--scenario")
    p.add_argument("--seed", type=int)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--out", default="out/calibration")
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        return _fail(str(exc))
    except FileNotFoundError as exc:
        return _fail(f"file not found: {exc.filename}")


if __name__ == "__main__":
    sys.exit(main())
