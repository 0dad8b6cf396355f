"""Closed-loop trials and seeded Monte Carlo campaigns.

One trial walks the loop transmit -> receive -> detect -> reward -> learn ->
beamform over a scenario horizon. Campaigns run independent trials (optionally
in worker processes), reduce them in trial order so results are byte-stable,
and serialize metrics to CSV plus a JSON run manifest.

Reproducibility: trial t of a campaign is seeded by the 64-bit hash
SeedSequence((master_seed, t)); inside a trial every pulse and every
(pulse, bin) pair draws from its own PCG64 substream (see environment).
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from functools import partial
from pathlib import Path

import numpy as np

from .arrays import ArrayGeometry, make_grid
from .beamformer import FocusRequest, focused_weights, orthogonal_weights
from .clutter import ClutterModel, default_clutter_model
from .detector import (
    build_report,
    estimate_covariance,
    threshold,
    wald_statistics_factored,
)
from .environment import PulseStream, synthesize_snapshot
from .rl import (
    ALPHA_ADAPT,
    EPS_ADAPT,
    POLICY_KINDS,
    AgentTrace,
    HyperParamState,
    adapt_hyperparam,
    baseline_action,
    initial_q,
    omega_set,
    reward,
    sarsa_update,
    select_action,
)
from .scenarios import Scenario, load_scenario, scenario_library, scenario_to_dict

__all__ = [
    "CONTROLLER_KINDS",
    "ADAPT_MODES",
    "RunConfig",
    "StepRecord",
    "AggregateMetrics",
    "preset",
    "resolve_scenario",
    "derive_trial_seed",
    "run_trial",
    "run_monte_carlo",
    "aggregate_records",
    "METRICS_HEADER",
    "RECORDS_HEADER",
    "emit_csv",
    "parse_metrics_csv",
    "parse_records_csv",
    "write_manifest",
    "run_h0_campaign",
]

CONTROLLER_KINDS = ("rl_c", "orthogonal", "nrl_c", "clairvoyant")
ADAPT_MODES = ("on", "off", "eps-only", "alpha-only")

# static fallbacks when a hyper-parameter is neither adaptive nor given
STATIC_EPS_DEFAULT = 0.5
STATIC_ALPHA_DEFAULT = 0.5

METRICS_HEADER = ("k", "target_id", "pd", "eps_mean", "alpha_mean", "pfa_running")
RECORDS_HEADER = ("k", "detect_map", "state_index", "action", "reward", "eps", "alpha", "detected")


@dataclass(frozen=True)
class RunConfig:
    """Everything a campaign needs; defaults follow the full-scale profile."""

    scenario: str | Scenario = "scenario1"
    controller: str = "rl_c"
    policy: str = "recovery"
    adaptive: str = "on"
    eps: float | None = None
    alpha: float | None = None
    n_tx: int = 100
    n_rx: int = 100
    n_bins: int = 20
    k_max: int = 5
    p_max: float = 1.0
    p_fa: float = 1e-4
    gamma: float = 0.8
    bandwidth: int = 6
    clutter: ClutterModel = field(default_factory=default_clutter_model)
    trials: int = 200
    master_seed: int = 1234
    workers: int = 1
    out_dir: str | None = None

    def __post_init__(self) -> None:
        if self.controller not in CONTROLLER_KINDS:
            raise ValueError(f"controller must be one of {CONTROLLER_KINDS}")
        if self.policy not in POLICY_KINDS:
            raise ValueError(f"policy must be one of {POLICY_KINDS}")
        if self.adaptive not in ADAPT_MODES:
            raise ValueError(f"adaptive must be one of {ADAPT_MODES}")
        for name in ("n_tx", "n_rx", "n_bins", "k_max", "trials", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.p_max <= 0:
            raise ValueError("p_max must be positive")
        if not 0.0 < self.p_fa < 1.0:
            raise ValueError("p_fa must lie strictly between 0 and 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.bandwidth < 0:
            raise ValueError("bandwidth must be nonnegative")
        if self.master_seed < 0:
            raise ValueError("master_seed must be nonnegative")
        if self.k_max > self.n_bins:
            raise ValueError("k_max cannot exceed the number of grid bins")
        if self.n_bins > self.n_tx:
            raise ValueError("beam placement needs n_bins <= n_tx")
        if self.n_rx <= self.bandwidth:
            raise ValueError("need n_rx > bandwidth")


def preset(name: str) -> RunConfig:
    """Named configuration profiles: 'paper' (full scale) or 'desk' (reduced)."""
    if name == "paper":
        return RunConfig()
    if name == "desk":
        return RunConfig(n_tx=50, n_rx=50, trials=100)
    raise ValueError(f"unknown preset {name!r}; expected 'paper' or 'desk'")


@dataclass(frozen=True)
class StepRecord:
    """Everything recorded about one closed-loop step.

    eps and alpha are the values in effect at the step (before adaptation);
    detected holds one 0/1 flag per scenario target, zero whenever the target
    is inactive.
    """

    k: int
    decisions: np.ndarray
    state_index: int
    action: int
    reward: float
    eps: float
    alpha: float
    detected: tuple[int, ...]


@dataclass(frozen=True)
class AggregateMetrics:
    """Campaign averages: per-target detection curves and hyper-parameter traces."""

    scenario_name: str
    horizon: int
    trials: int
    pd: np.ndarray
    eps_mean: np.ndarray
    alpha_mean: np.ndarray
    pfa_running: np.ndarray
    pfa_overall: float

    def __post_init__(self) -> None:
        for name in ("pd", "eps_mean", "alpha_mean", "pfa_running"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.pd.size and (self.pd.min() < 0 or self.pd.max() > 1):
            raise ValueError("detection probabilities must lie in [0, 1]")
        if self.pfa_running.size and (self.pfa_running.min() < 0 or self.pfa_running.max() > 1):
            raise ValueError("false-alarm rates must lie in [0, 1]")

    @property
    def n_targets(self) -> int:
        return self.pd.shape[0]


def resolve_scenario(config: RunConfig) -> Scenario:
    """Turn the config's scenario reference into a grid-resolved Scenario."""
    ref = config.scenario
    if isinstance(ref, Scenario):
        scenario = ref
    else:
        library = scenario_library()
        if ref in library:
            scenario = library[ref]
        elif Path(ref).is_file():
            scenario = load_scenario(ref)
        else:
            raise ValueError(
                f"unknown scenario {ref!r}: not a library name {tuple(library)} or a file"
            )
    return scenario.resolve(make_grid(config.n_bins))


def derive_trial_seed(master_seed: int, trial_index: int) -> int:
    """Stable 64-bit per-trial seed hash of (master_seed, trial_index)."""
    ss = np.random.SeedSequence((int(master_seed), int(trial_index)))
    return int(ss.generate_state(1, np.uint64)[0])


def _initial_hyper(config: RunConfig) -> HyperParamState:
    adapt_eps = config.adaptive in ("on", "eps-only")
    adapt_alpha = config.adaptive in ("on", "alpha-only")
    if config.eps is not None:
        eps0 = config.eps
    else:
        eps0 = EPS_ADAPT.x_max if adapt_eps else STATIC_EPS_DEFAULT
    if config.alpha is not None:
        alpha0 = config.alpha
    else:
        alpha0 = ALPHA_ADAPT.x_max if adapt_alpha else STATIC_ALPHA_DEFAULT
    return HyperParamState(eps=eps0, alpha=alpha0)


def run_trial(config: RunConfig, trial_seed: int) -> list[StepRecord]:
    """One closed-loop trial; deterministic in (config, trial_seed)."""
    grid = make_grid(config.n_bins)
    scenario = resolve_scenario(config)
    geom = ArrayGeometry(config.n_tx, config.n_rx)
    model = config.clutter
    thr = threshold(config.p_fa)
    nus = grid.as_array()
    steer_tx = np.exp(2j * np.pi * np.outer(np.arange(config.n_tx), nus))
    stream = PulseStream(trial_seed)
    policy_rng = stream.policy_rng()

    # weights only change when the focus set changes, so cache (W, W^T A_T)
    weight_cache: dict[tuple[int, ...], tuple] = {}

    def weights_for(bins: tuple[int, ...]):
        got = weight_cache.get(bins)
        if got is None:
            if bins:
                wm = focused_weights(FocusRequest(bins, config.p_max), grid, config.n_tx)
            else:
                wm = orthogonal_weights(config.n_tx, config.p_max)
            if len(weight_cache) >= 256:
                weight_cache.clear()
            got = (wm, wm.entries.T @ steer_tx)
            weight_cache[bins] = got
        return got

    w, u = weights_for(())
    is_rl = config.controller == "rl_c"
    q = initial_q(config.k_max)
    hyper = _initial_hyper(config)
    adapt_eps = config.adaptive in ("on", "eps-only")
    adapt_alpha = config.adaptive in ("on", "alpha-only")
    trace = AgentTrace(s_prev=0, s_curr=0, a_curr=0, r_curr=0.0, explored_flags=(False, False))

    records: list[StepRecord] = []
    for k in range(1, scenario.horizon + 1):
        y = synthesize_snapshot(w, scenario, k, geom, grid, model, stream)
        cov = estimate_covariance(y, config.bandwidth)
        stats = wald_statistics_factored(u, nus, config.n_rx, y, cov)
        report = build_report(stats, thr, config.k_max)
        r = reward(report, config.k_max)
        eps_used = hyper.eps if is_rl else 0.0
        alpha_used = hyper.alpha if is_rl else 0.0

        if is_rl:
            action, explored = select_action(
                config.policy, q, report.state_index, trace.s_curr, hyper.eps, policy_rng
            )
            q = sarsa_update(
                q, trace.s_curr, trace.a_curr, r, report.state_index, action,
                hyper.alpha, config.gamma,
            )
            flags = (trace.explored_flags[1], explored)
            if config.adaptive == "off":
                hyper = replace(hyper, last_reward=r)
            else:
                hyper = adapt_hyperparam(
                    hyper, r, k, flags, update_eps=adapt_eps, update_alpha=adapt_alpha
                )
            bins = tuple(sorted(omega_set(report, action)))
            trace = AgentTrace(trace.s_curr, report.state_index, action, r, flags)
            rec_action = action
        else:
            request = baseline_action(config.controller, report, scenario, k, config.p_max)
            bins = request.bins
            rec_action = len(bins)

        detected = tuple(
            int(t.active_at(k) and bool(report.decisions[t.bin - 1])) for t in scenario.targets
        )
        records.append(
            StepRecord(
                k=k,
                decisions=report.decisions,
                state_index=report.state_index,
                action=rec_action,
                reward=r,
                eps=eps_used,
                alpha=alpha_used,
                detected=detected,
            )
        )
        w, u = weights_for(bins)
    return records


def aggregate_records(
    config: RunConfig, scenario: Scenario, all_records: list[list[StepRecord]]
) -> AggregateMetrics:
    """Order-stable reduction of per-trial records into campaign metrics."""
    n_trials = len(all_records)
    if n_trials < 1:
        raise ValueError("need at least one trial")
    horizon = scenario.horizon
    n_targets = len(scenario.targets)
    n_bins = config.n_bins

    active_mask = np.zeros((horizon, n_bins), dtype=bool)
    for t in scenario.targets:
        active_mask[t.active[0] - 1 : t.active[1], t.bin - 1] = True

    det_sum = np.zeros((n_targets, horizon))
    eps_sum = np.zeros(horizon)
    alpha_sum = np.zeros(horizon)
    fa_sum = np.zeros(horizon)
    for records in all_records:
        if len(records) != horizon:
            raise ValueError("trial record length does not match the scenario horizon")
        dec = np.stack([rec.decisions for rec in records]).astype(bool)
        if n_targets:
            det_sum += np.array([rec.detected for rec in records], dtype=float).T
        eps_sum += np.array([rec.eps for rec in records])
        alpha_sum += np.array([rec.alpha for rec in records])
        fa_sum += (dec & ~active_mask).sum(axis=1)

    h0_per_k = (n_bins - active_mask.sum(axis=1)) * n_trials
    cum_h0 = np.maximum(np.cumsum(h0_per_k), 1)
    return AggregateMetrics(
        scenario_name=scenario.name,
        horizon=horizon,
        trials=n_trials,
        pd=det_sum / n_trials,
        eps_mean=eps_sum / n_trials,
        alpha_mean=alpha_sum / n_trials,
        pfa_running=np.cumsum(fa_sum) / cum_h0,
        pfa_overall=float(fa_sum.sum() / max(h0_per_k.sum(), 1)),
    )


def run_monte_carlo(config: RunConfig) -> AggregateMetrics:
    """Run config.trials independent trials and aggregate.

    Worker-process execution (workers > 1) yields byte-identical results to
    sequential execution: trials are seeded independently and reduced in trial
    order.
    """
    scenario = resolve_scenario(config)
    seeds = [derive_trial_seed(config.master_seed, t) for t in range(config.trials)]
    if config.workers > 1 and config.trials > 1:
        chunk = max(1, config.trials // (config.workers * 4))
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            all_records = list(pool.map(partial(run_trial, config), seeds, chunksize=chunk))
    else:
        all_records = [run_trial(config, s) for s in seeds]
    return aggregate_records(config, scenario, all_records)


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_csv(data: AggregateMetrics | list[StepRecord], path: str | Path) -> None:
    """Write metrics (one row per (k, target)) or raw records (one row per k).

    UTF-8, comma separators, '.' decimals, shortest round-trip float format,
    deterministic row order.
    """
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            if isinstance(data, AggregateMetrics):
                writer.writerow(METRICS_HEADER)
                for k in range(1, data.horizon + 1):
                    for tid in range(1, data.n_targets + 1):
                        writer.writerow(
                            (
                                k,
                                tid,
                                _fmt(data.pd[tid - 1, k - 1]),
                                _fmt(data.eps_mean[k - 1]),
                                _fmt(data.alpha_mean[k - 1]),
                                _fmt(data.pfa_running[k - 1]),
                            )
                        )
            else:
                writer.writerow(RECORDS_HEADER)
                for rec in data:
                    writer.writerow(
                        (
                            rec.k,
                            "".join(str(int(d)) for d in rec.decisions),
                            rec.state_index,
                            rec.action,
                            _fmt(rec.reward),
                            _fmt(rec.eps),
                            _fmt(rec.alpha),
                            "".join(str(int(d)) for d in rec.detected),
                        )
                    )
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def parse_metrics_csv(path: str | Path) -> list[dict]:
    """Read back a metrics CSV; values re-typed (ints for k/target_id, floats elsewhere)."""
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            rows.append(
                {
                    "k": int(row["k"]),
                    "target_id": int(row["target_id"]),
                    "pd": float(row["pd"]),
                    "eps_mean": float(row["eps_mean"]),
                    "alpha_mean": float(row["alpha_mean"]),
                    "pfa_running": float(row["pfa_running"]),
                }
            )
    return rows


def parse_records_csv(path: str | Path) -> list[dict]:
    """Read back a raw-records CSV; bit strings become integer tuples."""
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            rows.append(
                {
                    "k": int(row["k"]),
                    "detect_map": tuple(int(c) for c in row["detect_map"]),
                    "state_index": int(row["state_index"]),
                    "action": int(row["action"]),
                    "reward": float(row["reward"]),
                    "eps": float(row["eps"]),
                    "alpha": float(row["alpha"]),
                    "detected": tuple(int(c) for c in row["detected"]),
                }
            )
    return rows


def _clutter_to_obj(model: ClutterModel) -> dict:
    return {
        "ar_coeffs": [[c.real, c.imag] for c in model.ar_coeffs],
        "t_dof": "inf" if math.isinf(model.t_dof) else model.t_dof,
        "scale": model.scale,
    }


def write_manifest(config: RunConfig, path: str | Path) -> None:
    """Serialize the fully resolved configuration and seeding scheme to JSON."""
    from . import __version__

    scenario = resolve_scenario(config)
    doc = {
        "package_version": __version__,
        "rng": (
            "PCG64; trial seed = SeedSequence((master_seed, trial)) 64-bit hash; "
            "substreams keyed (trial_seed, tag, pulse[, bin]) with tags "
            "0=clutter, 1=phase, 2=policy"
        ),
        "config": {
            f.name: getattr(config, f.name)
            for f in fields(RunConfig)
            if f.name not in ("scenario", "clutter")
        },
        "clutter": _clutter_to_obj(config.clutter),
        "scenario": scenario_to_dict(scenario),
    }
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write manifest to {path}: {exc}") from exc


def run_h0_campaign(
    n_tx: int,
    n_rx: int,
    n_bins: int,
    model: ClutterModel,
    p_fa: float,
    n_snapshots: int,
    seed: int,
    bandwidth: int = 6,
) -> tuple[int, int]:
    """Target-free false-alarm campaign under the omnidirectional weighting.

    Returns (false_alarms, bin_decisions) over n_snapshots independent
    snapshots, each tested against all n_bins hypotheses.
    """
    from .clutter import gen_clutter

    grid = make_grid(n_bins)
    nus = grid.as_array()
    thr = threshold(p_fa)
    wm = orthogonal_weights(n_tx, 1.0)
    u = wm.entries.T @ np.exp(2j * np.pi * np.outer(np.arange(n_tx), nus))
    n = n_tx * n_rx
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((int(seed),))))
    false_alarms = 0
    for _ in range(n_snapshots):
        y = gen_clutter(n, model, rng)
        cov = estimate_covariance(y, bandwidth)
        lam = wald_statistics_factored(u, nus, n_rx, y, cov)
        false_alarms += int(np.count_nonzero(lam >= thr))
    return false_alarms, n_snapshots * n_bins
