"""Command-line front end.

simulate        run a Monte Carlo campaign, write metrics.csv + manifest.json
                (plus raw.csv with per-step records when trials == 1)
scenarios list  print the built-in scenario library
selftest        run the internal consistency checks

A run can be described in a YAML or JSON file whose keys mirror RunConfig
(see README); command-line flags override file values, which override the
preset defaults.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from .clutter import ClutterModel
from .harness import (
    ADAPT_MODES,
    CONTROLLER_KINDS,
    RunConfig,
    aggregate_records,
    derive_trial_seed,
    emit_csv,
    preset,
    resolve_scenario,
    run_monte_carlo,
    run_trial,
    write_manifest,
)
from .rl import POLICY_KINDS
from .scenarios import scenario_from_dict, scenario_library

__all__ = ["main", "build_parser"]

_CONFIG_KEYS = {f.name for f in fields(RunConfig)}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cogradar",
        description="closed-loop detection and beam-selection simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a seeded Monte Carlo campaign")
    sim.add_argument("--scenario", help="library scenario name or scenario file path")
    sim.add_argument("--controller", choices=CONTROLLER_KINDS)
    sim.add_argument("--policy", choices=POLICY_KINDS)
    sim.add_argument("--adaptive", choices=ADAPT_MODES)
    sim.add_argument("--eps", type=float, help="epsilon: static value, or start value when adaptive")
    sim.add_argument("--alpha", type=float, help="learning rate: static value, or start value when adaptive")
    sim.add_argument("--trials", type=int)
    sim.add_argument("--seed", type=int, help="campaign master seed")
    sim.add_argument("--preset", choices=("paper", "desk"), default="paper")
    sim.add_argument("--out", help="output directory (default: out)")
    sim.add_argument("--config", help="YAML/JSON run config; flags override its values")
    sim.add_argument("--workers", type=int, help="worker processes (default 1)")

    scen = sub.add_parser("scenarios", help="inspect the scenario library")
    scen_sub = scen.add_subparsers(dest="action", required=True)
    scen_sub.add_parser("list", help="print every built-in scenario")

    st = sub.add_parser("selftest", help="run internal consistency checks")
    st.add_argument("--full", action="store_true", help="include the slow full-scale checks")
    return parser


def _load_config_file(path: str) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith((".yaml", ".yml")):
        import yaml

        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise ValueError(f"run config {path} must hold a mapping")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown run config keys in {path}: {sorted(unknown)}")
    if isinstance(data.get("scenario"), dict):
        data["scenario"] = scenario_from_dict(data["scenario"])
    if isinstance(data.get("clutter"), dict):
        spec = data["clutter"]
        coeffs = tuple(
            complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c)
            for c in spec["ar_coeffs"]
        )
        t_dof = spec.get("t_dof", 3.0)
        data["clutter"] = ClutterModel(
            ar_coeffs=coeffs,
            t_dof=float("inf") if t_dof in ("inf", None) else float(t_dof),
            scale=float(spec.get("scale", 1.0)),
        )
    return data


def _simulate(args: argparse.Namespace) -> int:
    config = preset(args.preset)
    if args.config:
        config = replace(config, **_load_config_file(args.config))
    overrides = {}
    for flag, field_name in (
        ("scenario", "scenario"),
        ("controller", "controller"),
        ("policy", "policy"),
        ("adaptive", "adaptive"),
        ("eps", "eps"),
        ("alpha", "alpha"),
        ("trials", "trials"),
        ("seed", "master_seed"),
        ("out", "out_dir"),
        ("workers", "workers"),
    ):
        value = getattr(args, flag)
        if value is not None:
            overrides[field_name] = value
    config = replace(config, **overrides)

    out_dir = Path(config.out_dir or "out")
    out_dir.mkdir(parents=True, exist_ok=True)
    scenario = resolve_scenario(config)

    started = time.perf_counter()
    if config.trials == 1:
        records = run_trial(config, derive_trial_seed(config.master_seed, 0))
        metrics = aggregate_records(config, scenario, [records])
        emit_csv(records, out_dir / "raw.csv")
    else:
        metrics = run_monte_carlo(config)
    elapsed = time.perf_counter() - started

    emit_csv(metrics, out_dir / "metrics.csv")
    write_manifest(config, out_dir / "manifest.json")

    print(
        f"{scenario.name}: {config.trials} trial(s) x {scenario.horizon} steps, "
        f"controller {config.controller}"
        + (f" ({config.policy}, adaptive {config.adaptive})" if config.controller == "rl_c" else "")
        + f", {elapsed:.1f} s"
    )
    tail = max(1, metrics.horizon // 10)
    for tid in range(metrics.n_targets):
        spec = scenario.targets[tid]
        late = float(np.mean(metrics.pd[tid, -tail:]))
        print(
            f"  target {tid + 1} (bin {spec.bin}): "
            f"final pd {metrics.pd[tid, -1]:.3f}, last-{tail} mean {late:.3f}"
        )
    print(f"  false-alarm rate {metrics.pfa_overall:.2e} over target-free bins")
    wrote = ["metrics.csv", "manifest.json"] + (["raw.csv"] if config.trials == 1 else [])
    print(f"  wrote {', '.join(wrote)} to {out_dir}")
    return 0


def _scenarios_list() -> int:
    for name, scenario in scenario_library().items():
        print(f"{name}: horizon {scenario.horizon}, {len(scenario.targets)} target(s)")
        for i, t in enumerate(scenario.targets, 1):
            points = t.snr_db.points
            if len(points) == 1:
                snr = f"{points[0][1]:g} dB"
            else:
                snr = " -> ".join(f"{db:g} dB @ k={k}" for k, db in points)
            print(
                f"  target {i}: bin {t.bin} (nu {t.nu:+.2f}), "
                f"active k in [{t.active[0]}, {t.active[1]}], snr {snr}"
            )
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "simulate":
        return _simulate(args)
    if args.command == "scenarios":
        return _scenarios_list()
    if args.command == "selftest":
        from .selftest import run_selftest

        return 1 if run_selftest(full=args.full) else 0
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
