import numpy as np
import pytest

from cogradar import (
    ArrayGeometry,
    PulseStream,
    WeightMatrix,
    clutter_power,
    default_clutter_model,
    gen_clutter,
    make_grid,
    scenario_from_dict,
    scenario_library,
    synthesize_snapshot,
    target_amplitude,
)


def orthogonal(n_tx: int, p_max: float = 1.0) -> WeightMatrix:
    return WeightMatrix(np.eye(n_tx) * np.sqrt(p_max / n_tx), p_max=p_max)


class TestPulseStream:
    def test_key_required(self):
        with pytest.raises(ValueError):
            PulseStream()
        with pytest.raises(ValueError):
            PulseStream(-1)

    def test_streams_reproducible(self):
        a = PulseStream(99).clutter_rng(3).standard_normal(8)
        b = PulseStream(99).clutter_rng(3).standard_normal(8)
        np.testing.assert_array_equal(a, b)

    def test_streams_distinct_across_pulses_and_tags(self):
        s = PulseStream(99)
        x = s.clutter_rng(3).standard_normal(8)
        assert not np.allclose(x, s.clutter_rng(4).standard_normal(8))
        assert not np.allclose(x, s.phase_rng(3, 1).standard_normal(8))
        assert not np.allclose(x, s.policy_rng().standard_normal(8))

    def test_phase_stream_keyed_by_bin(self):
        s = PulseStream(5, 7)
        a = s.phase_rng(2, 4).random()
        b = s.phase_rng(2, 5).random()
        assert a != b
        assert a == PulseStream(5, 7).phase_rng(2, 4).random()


class TestTargetAmplitude:
    def test_magnitude_from_snr(self):
        rng = np.random.default_rng(0)
        alpha = target_amplitude(-20.0, 4.0, rng)
        assert abs(alpha) == pytest.approx(np.sqrt(4.0 * 1e-2), rel=1e-12)

    def test_zero_db_means_clutter_power(self):
        alpha = target_amplitude(0.0, 2.5, np.random.default_rng(1))
        assert abs(alpha) ** 2 == pytest.approx(2.5, rel=1e-12)

    def test_phase_uniform_over_draws(self):
        rng = np.random.default_rng(2)
        phases = np.array([np.angle(target_amplitude(0.0, 1.0, rng)) for _ in range(4000)])
        assert abs(np.mean(np.exp(1j * phases))) < 0.05

    def test_rejects_nonpositive_clutter_power(self):
        with pytest.raises(ValueError):
            target_amplitude(0.0, 0.0, np.random.default_rng(0))


class TestSnapshot:
    def setup_method(self):
        self.geom = ArrayGeometry(8, 8)
        self.grid = make_grid(20)
        self.model = default_clutter_model()
        self.w = orthogonal(8)

    def scenario(self, bins):
        return scenario_from_dict(
            {
                "name": "t",
                "horizon": 10,
                "targets": [{"bin": b, "snr_db": 0.0} for b in bins],
            }
        ).resolve(self.grid)

    def test_deterministic(self):
        s = self.scenario([3])
        a = synthesize_snapshot(self.w, s, 2, self.geom, self.grid, self.model, PulseStream(1))
        b = synthesize_snapshot(self.w, s, 2, self.geom, self.grid, self.model, PulseStream(1))
        np.testing.assert_array_equal(a, b)
        assert a.shape == (64,)

    def test_no_targets_is_pure_clutter(self):
        s = scenario_from_dict({"horizon": 10, "targets": []})
        y = synthesize_snapshot(self.w, s, 1, self.geom, self.grid, self.model, PulseStream(4))
        ref = gen_clutter(64, self.model, PulseStream(4).clutter_rng(1))
        np.testing.assert_array_equal(y, ref)

    def test_targets_add_independently(self):
        # keyed per-bin phase streams make the two-target snapshot the exact
        # sum of the single-target contributions over common clutter
        key = PulseStream(7)
        both = synthesize_snapshot(
            self.w, self.scenario([3, 11]), 5, self.geom, self.grid, self.model, key
        )
        only3 = synthesize_snapshot(
            self.w, self.scenario([3]), 5, self.geom, self.grid, self.model, key
        )
        only11 = synthesize_snapshot(
            self.w, self.scenario([11]), 5, self.geom, self.grid, self.model, key
        )
        clutter = gen_clutter(64, self.model, key.clutter_rng(5))
        np.testing.assert_allclose(both, only3 + only11 - clutter, atol=1e-12)

    def test_inactive_target_not_injected(self):
        s = scenario_from_dict(
            {"horizon": 10, "targets": [{"bin": 3, "snr_db": 0.0, "active": [6, 10]}]}
        ).resolve(self.grid)
        key = PulseStream(9)
        y = synthesize_snapshot(self.w, s, 5, self.geom, self.grid, self.model, key)
        ref = gen_clutter(64, self.model, key.clutter_rng(5))
        np.testing.assert_array_equal(y, ref)

    def test_unresolved_nu_rejected(self):
        s = scenario_from_dict({"horizon": 10, "targets": [{"bin": 3, "snr_db": 0.0}]})
        with pytest.raises(ValueError):
            synthesize_snapshot(self.w, s, 1, self.geom, self.grid, self.model, PulseStream(1))

    def test_target_power_scales_with_snr(self):
        # at +30 dB the target dwarfs the clutter, so snapshot power tracks
        # |alpha|^2 * ||h||^2 within a loose factor
        s = scenario_from_dict(
            {"horizon": 10, "targets": [{"bin": 3, "snr_db": 30.0}]}
        ).resolve(self.grid)
        y = synthesize_snapshot(self.w, s, 1, self.geom, self.grid, self.model, PulseStream(2))
        expected = clutter_power(self.model) * 1e3 * 8.0  # ||h||^2 = p_max * n_rx
        assert float(np.sum(np.abs(y) ** 2)) == pytest.approx(expected, rel=0.35)

    def test_library_scenario_resolves_and_runs(self):
        s = scenario_library()["scenario1"].resolve(self.grid)
        y = synthesize_snapshot(self.w, s, 100, self.geom, self.grid, self.model, PulseStream(3))
        assert y.shape == (64,)
