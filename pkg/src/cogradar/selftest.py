"""Quick internal consistency checks runnable without the test suite.

Every check recomputes its expected value through an independent route
(brute-force kron products, dense Toeplitz forms, hand arithmetic) so a
passing run means the fast code paths agree with their definitions.
"""

from __future__ import annotations

import math

import numpy as np

from .arrays import (
    ArrayGeometry,
    WeightMatrix,
    make_grid,
    steering_vector,
    transmit_beampattern,
    virtual_response,
)
from .beamformer import FocusRequest, focused_weights, orthogonal_weights, power_used
from .clutter import ar_autocovariance, clutter_power, default_clutter_model, gen_clutter
from .detector import (
    DetectionReport,
    build_report,
    estimate_covariance,
    estimate_pd,
    quadratic_form,
    threshold,
    wald_statistic,
    wald_statistics_factored,
)
from .environment import PulseStream, synthesize_snapshot
from .harness import RunConfig, derive_trial_seed, run_h0_campaign, run_trial
from .rl import (
    HyperParamState,
    adapt_hyperparam,
    greedy_action,
    initial_q,
    omega_set,
    reward,
    sarsa_update,
)
from .scenarios import scenario_library

__all__ = ["run_selftest"]


def _check_threshold() -> None:
    assert abs(threshold(1e-4) - 18.420680743952367) < 1e-6
    assert abs(threshold(1e-2) - 9.210340371976184) < 1e-6
    assert abs(threshold(math.exp(-0.5)) - 1.0) < 1e-12


def _check_steering_and_grid() -> None:
    got = steering_vector(2, 0.25)
    assert np.allclose(got, [1.0, 1.0j], atol=1e-15)
    grid = make_grid(20)
    assert abs(grid.nu_of(1) + 0.50) < 1e-15
    assert abs(grid.nu_of(20) - 0.45) < 1e-15


def _check_virtual_response_kron() -> None:
    rng = np.random.default_rng(7)
    geom = ArrayGeometry(5, 4)
    entries = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    entries *= math.sqrt(0.9 / np.sum(np.abs(entries) ** 2))
    w = WeightMatrix(entries, p_max=1.0)
    nu = 0.17
    h = virtual_response(w, nu, geom)
    ref = np.kron(entries.T @ steering_vector(5, nu), steering_vector(4, nu))
    assert np.max(np.abs(h - ref)) < 1e-12
    bp = transmit_beampattern(w, nu)
    assert abs(bp - np.sum(np.abs(entries.T @ steering_vector(5, nu)) ** 2)) < 1e-12


def _check_quadratic_form_dense() -> None:
    from scipy.linalg import toeplitz

    rng = np.random.default_rng(11)
    y = rng.normal(size=40) + 1j * rng.normal(size=40)
    h = rng.normal(size=40) + 1j * rng.normal(size=40)
    cov = estimate_covariance(y, bandwidth=5)
    lags = np.zeros(40, dtype=complex)
    lags[: cov.lags.size] = cov.lags
    dense = toeplitz(np.conj(lags), lags)
    ref = float(np.real(np.vdot(h, dense @ h)))
    assert abs(quadratic_form(h, cov) - ref) < 1e-9 * max(1.0, abs(ref))


def _check_factored_matches_scalar() -> None:
    rng = np.random.default_rng(13)
    n_tx, n_rx = 8, 9
    geom = ArrayGeometry(n_tx, n_rx)
    grid = make_grid(6)
    w = orthogonal_weights(n_tx, 1.0)
    y = rng.normal(size=geom.n_virtual) + 1j * rng.normal(size=geom.n_virtual)
    cov = estimate_covariance(y, bandwidth=4)
    nus = grid.as_array()
    u = w.entries.T @ np.exp(2j * np.pi * np.outer(np.arange(n_tx), nus))
    fast = wald_statistics_factored(u, nus, n_rx, y, cov)
    slow = np.array(
        [wald_statistic(virtual_response(w, nu, geom), y, cov) for nu in nus]
    )
    assert np.max(np.abs(fast - slow)) < 1e-9 * max(1.0, float(np.max(slow)))


def _check_pd_series() -> None:
    lam = thr = 18.420680743952367
    nc = lam - 2.0
    total = 0.0
    pois = math.exp(-nc / 2.0)
    for j in range(200):
        inner = 0.0
        term = 1.0
        for m in range(j + 1):
            if m > 0:
                term *= (thr / 2.0) / m
            inner += term
        total += pois * math.exp(-thr / 2.0) * inner
        pois *= (nc / 2.0) / (j + 1)
    assert abs(estimate_pd(lam, thr) - total) < 1e-10
    assert estimate_pd(1.5, thr) == estimate_pd(2.0, thr)


def _check_report_and_reward() -> None:
    rep = build_report(np.array([3.0, 9.0, 9.0, 1.0]), thr=5.0, k_max=5)
    assert list(rep.decisions) == [0, 1, 1, 0]
    assert rep.state_index == 2
    assert list(rep.sorted_bins) == [2, 3, 1, 4]

    rep2 = build_report(np.array([5.0, 1.0, 9.0, 3.0]), thr=4.0, k_max=5)
    assert omega_set(rep2, 2) == {3, 1}

    hand = DetectionReport(
        statistics=np.array([50.0, 40.0, 30.0, 20.0, 10.0]),
        decisions=np.array([1, 1, 0, 0, 0], dtype=np.uint8),
        state_index=2,
        pd_estimates=np.array([0.9, 0.8, 0.3, 0.2, 0.1]),
        sorted_bins=np.array([1, 2, 3, 4, 5]),
    )
    assert abs(reward(hand, 5) - 1.1) < 1e-12


def _check_sarsa_and_greedy() -> None:
    q = initial_q(2).copy()
    q[1] = [0.0, 2.0, 1.0]
    assert greedy_action(q, 1) == 1
    q2 = sarsa_update(q, 1, 1, 1.0, 2, 2, alpha=0.2, gamma=0.8)
    assert abs(q2[1, 1] - (2.0 + 0.2 * (1.0 + 0.8 * 1.0 - 2.0))) < 1e-12
    assert q[1, 1] == 2.0


def _check_adaptation() -> None:
    h = HyperParamState(eps=0.8, alpha=0.6, last_reward=0.0)
    h1 = adapt_hyperparam(h, 0.2, k=2, explored_prev_two=(False, False))
    assert abs(h1.eps - 0.64) < 1e-12
    h = HyperParamState(eps=0.1, alpha=0.2, last_reward=0.0)
    h2 = adapt_hyperparam(h, 1.0, k=2, explored_prev_two=(False, False))
    assert abs(h2.eps - 0.2) < 1e-12
    h3 = adapt_hyperparam(h, 2.0, k=2, explored_prev_two=(False, False))
    assert abs(h3.eps - 0.8) < 1e-12 and abs(h3.alpha - 0.6) < 1e-12
    h4 = adapt_hyperparam(h, 2.0, k=2, explored_prev_two=(True, True))
    assert h4.eps == h.eps and h4.alpha == h.alpha and h4.last_reward == 2.0


def _check_beamformer() -> None:
    grid = make_grid(20)
    w = orthogonal_weights(16, 0.7)
    assert abs(power_used(w) - 0.7) < 1e-9
    wf = focused_weights(FocusRequest((3, 11, 18), 1.0), grid, 32)
    assert power_used(wf) <= 1.0 + 1e-9
    bps = [transmit_beampattern(wf, grid.nu_of(b)) for b in (3, 11, 18)]
    assert (max(bps) - min(bps)) / max(bps) < 1e-5


def _check_clutter_power() -> None:
    model = default_clutter_model()
    gamma = ar_autocovariance(model, 6)
    assert abs(gamma[0].imag) < 1e-9
    rng = np.random.default_rng(3)
    sample = gen_clutter(200_000, model, rng)
    emp = float(np.mean(np.abs(sample) ** 2))
    assert abs(emp - clutter_power(model)) / clutter_power(model) < 0.1


def _check_trial_determinism() -> None:
    config = RunConfig(scenario="scenario2", n_tx=20, n_rx=20, trials=1, master_seed=5)
    seed = derive_trial_seed(config.master_seed, 0)
    rec_a = run_trial(config, seed)
    rec_b = run_trial(config, seed)
    assert len(rec_a) == scenario_library()["scenario2"].horizon
    for a, b in zip(rec_a, rec_b):
        assert a.k == b.k and a.action == b.action and a.reward == b.reward
        assert np.array_equal(a.decisions, b.decisions)


def _check_snapshot_keyed_streams() -> None:
    # clutter and target phases are keyed per pulse, not per call: the same
    # pulse index must reproduce the same snapshot under the same weights
    grid = make_grid(20)
    geom = ArrayGeometry(10, 10)
    scenario = scenario_library()["scenario1"].resolve(grid)
    model = default_clutter_model()
    w = orthogonal_weights(10, 1.0)
    y1 = synthesize_snapshot(w, scenario, 3, geom, grid, model, PulseStream(99))
    y2 = synthesize_snapshot(w, scenario, 3, geom, grid, model, PulseStream(99))
    assert np.array_equal(y1, y2)


def _check_h0_rate_small() -> None:
    model = default_clutter_model()
    false_alarms, n_dec = run_h0_campaign(
        n_tx=100, n_rx=100, n_bins=20, model=model, p_fa=1e-2,
        n_snapshots=1000, seed=17,
    )
    rate = false_alarms / n_dec
    assert 0.6e-2 < rate < 1.4e-2, f"H0 rate {rate:.4f} strayed from 1e-2"


_QUICK = (
    ("threshold constants", _check_threshold),
    ("steering vector and grid", _check_steering_and_grid),
    ("virtual response vs kron", _check_virtual_response_kron),
    ("banded quadratic form vs dense", _check_quadratic_form_dense),
    ("factored statistics vs per-bin", _check_factored_matches_scalar),
    ("detection probability series", _check_pd_series),
    ("report, omega and reward", _check_report_and_reward),
    ("sarsa update and greedy", _check_sarsa_and_greedy),
    ("hyper-parameter adaptation", _check_adaptation),
    ("beamformer power and balance", _check_beamformer),
    ("clutter power", _check_clutter_power),
    ("trial determinism", _check_trial_determinism),
    ("keyed pulse streams", _check_snapshot_keyed_streams),
)

_FULL = (("false-alarm rate at full scale", _check_h0_rate_small),)


def run_selftest(full: bool = False) -> int:
    """Run the checks, print one line each, return the number of failures."""
    failures = 0
    checks = _QUICK + _FULL if full else _QUICK
    for name, fn in checks:
        try:
            fn()
        except Exception as exc:  # noqa: BLE001 - report and keep going
            failures += 1
            print(f"[FAIL] {name}: {exc!r}")
        else:
            print(f"[ok]   {name}")
    if failures:
        print(f"{failures} check(s) failed")
    else:
        print("all checks passed")
    return failures
