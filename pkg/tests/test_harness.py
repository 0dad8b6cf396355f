import json

import numpy as np
import pytest

from cogradar import (
    METRICS_HEADER,
    RECORDS_HEADER,
    AggregateMetrics,
    RunConfig,
    Scenario,
    TargetSpec,
    aggregate_records,
    default_clutter_model,
    derive_trial_seed,
    emit_csv,
    parse_metrics_csv,
    parse_records_csv,
    preset,
    resolve_scenario,
    run_h0_campaign,
    run_monte_carlo,
    run_trial,
    scenario_library,
    scenario_to_dict,
    write_manifest,
)

MINI = dict(n_tx=32, n_rx=32, trials=2, master_seed=77)


def mini_config(**overrides) -> RunConfig:
    kwargs = {"scenario": "scenario2", **MINI, **overrides}
    return RunConfig(**kwargs)


class TestRunConfig:
    def test_defaults_follow_full_scale_profile(self):
        c = RunConfig()
        assert (c.n_tx, c.n_rx, c.n_bins, c.k_max) == (100, 100, 20, 5)
        assert (c.trials, c.p_fa, c.gamma) == (200, 1e-4, 0.8)
        assert c.controller == "rl_c" and c.policy == "recovery" and c.adaptive == "on"

    @pytest.mark.parametrize(
        "bad",
        [
            {"controller": "sarsa"},
            {"policy": "softmax"},
            {"adaptive": "maybe"},
            {"p_fa": 0.0},
            {"p_fa": 1.0},
            {"gamma": 1.5},
            {"trials": 0},
            {"k_max": 21},
            {"n_tx": 10},  # fewer transmitters than grid bins
            {"n_rx": 6},  # receive side must exceed the covariance bandwidth
            {"master_seed": -1},
        ],
    )
    def test_validation(self, bad):
        with pytest.raises(ValueError):
            RunConfig(**bad)

    def test_presets(self):
        assert preset("paper") == RunConfig()
        desk = preset("desk")
        assert (desk.n_tx, desk.n_rx, desk.trials) == (50, 50, 100)
        with pytest.raises(ValueError):
            preset("bench")


class TestScenarioResolution:
    def test_library_name(self):
        s = resolve_scenario(RunConfig(scenario="scenario3"))
        assert s.name == "scenario3"
        assert all(t.nu is not None for t in s.targets)

    def test_scenario_instance_passthrough(self):
        custom = Scenario(
            name="mine", horizon=5, targets=(TargetSpec(bin=2, nu=None, snr_db=0.0, active=(1, 5)),)
        )
        s = resolve_scenario(RunConfig(scenario=custom))
        assert s.name == "mine"
        assert s.targets[0].nu == pytest.approx(-0.45)

    def test_file_path(self, tmp_path):
        import yaml

        path = tmp_path / "s.yaml"
        path.write_text(yaml.safe_dump(scenario_to_dict(scenario_library()["scenario2"])))
        assert resolve_scenario(RunConfig(scenario=str(path))).name == "scenario2"

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError, match="unknown scenario"):
            resolve_scenario(RunConfig(scenario="scenario9"))


class TestTrialSeeds:
    def test_deterministic_and_distinct(self):
        seeds = [derive_trial_seed(1234, t) for t in range(100)]
        assert seeds == [derive_trial_seed(1234, t) for t in range(100)]
        assert len(set(seeds)) == 100
        assert derive_trial_seed(1234, 0) != derive_trial_seed(1235, 0)


class TestRunTrial:
    def test_record_stream_shape(self):
        config = mini_config()
        records = run_trial(config, derive_trial_seed(config.master_seed, 0))
        assert len(records) == 100
        assert [rec.k for rec in records] == list(range(1, 101))
        for rec in records[:5]:
            assert rec.decisions.shape == (20,)
            assert 0 <= rec.state_index <= config.k_max
            assert len(rec.detected) == 1

    def test_deterministic(self):
        config = mini_config()
        seed = derive_trial_seed(config.master_seed, 3)
        a = run_trial(config, seed)
        b = run_trial(config, seed)
        for ra, rb in zip(a, b):
            np.testing.assert_array_equal(ra.decisions, rb.decisions)
            assert (ra.state_index, ra.action, ra.reward) == (rb.state_index, rb.action, rb.reward)
            assert (ra.eps, ra.alpha, ra.detected) == (rb.eps, rb.alpha, rb.detected)

    def test_adaptive_run_starts_at_maximum_hyperparams(self):
        records = run_trial(mini_config(adaptive="on"), 42)
        assert records[0].eps == 0.8
        assert records[0].alpha == 0.6

    def test_static_run_keeps_requested_hyperparams(self):
        records = run_trial(mini_config(adaptive="off", eps=0.3, alpha=0.4), 42)
        assert {rec.eps for rec in records} == {0.3}
        assert {rec.alpha for rec in records} == {0.4}

    def test_alpha_only_adaptation_pins_eps(self):
        records = run_trial(mini_config(adaptive="alpha-only", eps=0.5), 42)
        assert {rec.eps for rec in records} == {0.5}
        assert len({rec.alpha for rec in records}) > 1

    def test_baseline_records_no_hyperparams(self):
        records = run_trial(mini_config(controller="orthogonal"), 42)
        assert all(rec.eps == 0.0 and rec.alpha == 0.0 for rec in records)
        assert all(rec.action == 0 for rec in records)  # never focuses

    def test_detected_flag_respects_active_window(self):
        custom = Scenario(
            name="late",
            horizon=12,
            targets=(TargetSpec(bin=3, nu=None, snr_db=30.0, active=(6, 12)),),
        )
        records = run_trial(mini_config(scenario=custom, controller="clairvoyant"), 42)
        assert all(rec.detected == (0,) for rec in records[:5])
        # a +30 dB target is essentially always detected once active
        assert np.mean([rec.detected[0] for rec in records[5:]]) > 0.9


class TestAggregation:
    def test_shapes_and_ranges(self):
        config = mini_config(trials=3)
        records = [run_trial(config, derive_trial_seed(config.master_seed, t)) for t in range(3)]
        agg = aggregate_records(config, resolve_scenario(config), records)
        assert agg.n_targets == 1
        assert agg.pd.shape == (1, 100)
        assert agg.eps_mean.shape == (100,)
        assert agg.pfa_running.shape == (100,)
        assert agg.trials == 3
        assert 0.0 <= agg.pfa_overall <= 1.0
        assert agg.eps_mean[0] == pytest.approx(0.8)

    def test_single_trial_pd_is_binary(self):
        config = mini_config(trials=1)
        agg = run_monte_carlo(config)
        assert set(np.unique(agg.pd)) <= {0.0, 1.0}

    def test_record_length_mismatch_rejected(self):
        config = mini_config()
        records = run_trial(config, 42)
        with pytest.raises(ValueError):
            aggregate_records(config, resolve_scenario(config), [records[:-1]])

    def test_empty_campaign_rejected(self):
        config = mini_config()
        with pytest.raises(ValueError):
            aggregate_records(config, resolve_scenario(config), [])


class TestMonteCarlo:
    def test_matches_manual_loop(self):
        config = mini_config(trials=2)
        agg = run_monte_carlo(config)
        manual = aggregate_records(
            config,
            resolve_scenario(config),
            [run_trial(config, derive_trial_seed(config.master_seed, t)) for t in range(2)],
        )
        np.testing.assert_array_equal(agg.pd, manual.pd)
        np.testing.assert_array_equal(agg.eps_mean, manual.eps_mean)
        assert agg.pfa_overall == manual.pfa_overall

    def test_worker_count_does_not_change_results(self, tmp_path):
        seq = run_monte_carlo(mini_config(trials=4, workers=1))
        par = run_monte_carlo(mini_config(trials=4, workers=2))
        a, b = tmp_path / "seq.csv", tmp_path / "par.csv"
        emit_csv(seq, a)
        emit_csv(par, b)
        assert a.read_bytes() == b.read_bytes()


class TestCsv:
    def test_metrics_round_trip(self, tmp_path):
        config = mini_config(trials=2)
        agg = run_monte_carlo(config)
        path = tmp_path / "metrics.csv"
        emit_csv(agg, path)
        first = path.read_text(encoding="utf-8").splitlines()[0]
        assert first == ",".join(METRICS_HEADER)
        rows = parse_metrics_csv(path)
        assert len(rows) == 100  # horizon * n_targets
        assert rows[0]["k"] == 1 and rows[0]["target_id"] == 1
        np.testing.assert_allclose(
            [r["pd"] for r in rows if r["target_id"] == 1], agg.pd[0], rtol=0
        )

    def test_records_round_trip(self, tmp_path):
        records = run_trial(mini_config(), 42)
        path = tmp_path / "raw.csv"
        emit_csv(records, path)
        first = path.read_text(encoding="utf-8").splitlines()[0]
        assert first == ",".join(RECORDS_HEADER)
        rows = parse_records_csv(path)
        assert len(rows) == len(records)
        for rec, row in zip(records, rows):
            assert row["detect_map"] == tuple(int(d) for d in rec.decisions)
            assert row["reward"] == rec.reward
            assert row["detected"] == rec.detected

    def test_no_targets_gives_header_only_metrics(self, tmp_path):
        empty = Scenario(name="empty", horizon=5, targets=())
        config = mini_config(scenario=empty, trials=1)
        agg = run_monte_carlo(config)
        assert agg.n_targets == 0
        path = tmp_path / "metrics.csv"
        emit_csv(agg, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines == [",".join(METRICS_HEADER)]

    def test_emission_is_reproducible(self, tmp_path):
        agg = run_monte_carlo(mini_config(trials=2))
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_csv(agg, a)
        emit_csv(agg, b)
        assert a.read_bytes() == b.read_bytes()

    def test_write_error_names_the_path(self, tmp_path):
        agg = run_monte_carlo(mini_config(trials=1))
        missing = tmp_path / "no" / "such" / "dir" / "out.csv"
        with pytest.raises(OSError, match="cannot write CSV"):
            emit_csv(agg, missing)


class TestManifest:
    def test_contents(self, tmp_path):
        config = mini_config(trials=5)
        path = tmp_path / "manifest.json"
        write_manifest(config, path)
        doc = json.loads(path.read_text(encoding="utf-8"))
        assert doc["config"]["n_tx"] == 32
        assert doc["config"]["trials"] == 5
        assert "scenario" not in doc["config"]  # scenario serialized separately
        assert doc["scenario"]["name"] == "scenario2"
        assert len(doc["clutter"]["ar_coeffs"]) == 6
        assert doc["rng"].startswith("PCG64")
        assert "package_version" in doc

    def test_gaussian_dof_serialized_as_string(self, tmp_path):
        from cogradar import ClutterModel

        model = ClutterModel(ar_coeffs=(0.5,), t_dof=np.inf, scale=1.0)
        config = mini_config(clutter=model)
        path = tmp_path / "manifest.json"
        write_manifest(config, path)
        doc = json.loads(path.read_text(encoding="utf-8"))
        assert doc["clutter"]["t_dof"] == "inf"


class TestRunningFalseAlarmRate:
    def test_target_free_bins_track_nominal(self):
        # 10 trials x 100 steps x 19 target-free bins = 19000 decisions at
        # nominal 1e-2; the +-50% band is ~13 standard deviations wide
        agg = run_monte_carlo(
            RunConfig(
                scenario="scenario2", controller="orthogonal", p_fa=1e-2,
                n_tx=64, n_rx=64, trials=10, master_seed=31,
            )
        )
        assert 0.005 <= agg.pfa_overall <= 0.015
        assert 0.005 <= agg.pfa_running[-1] <= 0.015


class TestH0Campaign:
    def test_counts_and_determinism(self):
        model = default_clutter_model()
        fa, total = run_h0_campaign(32, 32, 20, model, 0.1, 50, seed=3)
        assert total == 1000
        assert 0 <= fa <= total
        assert (fa, total) == run_h0_campaign(32, 32, 20, model, 0.1, 50, seed=3)

    def test_seed_changes_counts(self):
        model = default_clutter_model()
        a = run_h0_campaign(32, 32, 20, model, 0.1, 50, seed=3)
        b = run_h0_campaign(32, 32, 20, model, 0.1, 50, seed=4)
        assert a != b
