"""Received-snapshot synthesis: clutter plus the active targets of a scenario,
under the current transmit weighting.

Randomness is organized as keyed substreams (PCG64 seeded through SeedSequence)
so that every (pulse, bin) pair owns its phase draw and every pulse owns its
clutter draw. This keeps snapshots additive across targets and trials
embarrassingly parallel without any stream bookkeeping.
"""

from __future__ import annotations

import numpy as np

from .arrays import AngularGrid, ArrayGeometry, WeightMatrix, virtual_response
from .clutter import ClutterModel, clutter_power, gen_clutter
from .scenarios import Scenario

__all__ = ["PulseStream", "target_amplitude", "synthesize_snapshot"]

# substream tags; bins are 1-based so (TAG_CLUTTER, k) never collides with (TAG_PHASE, k, bin)
TAG_CLUTTER = 0
TAG_PHASE = 1
TAG_POLICY = 2


class PulseStream:
    """Deterministic per-pulse randomness derived from an integer key.

    clutter_rng(k) and phase_rng(k, bin) return independent generators keyed by
    the pulse index (and bin), so the draw for one component never depends on
    which other components are present. policy_rng() is a single sequential
    stream for action selection.
    """

    def __init__(self, *key: int):
        if not key:
            raise ValueError("stream key must not be empty")
        self._key = tuple(int(x) for x in key)
        if any(x < 0 for x in self._key):
            raise ValueError("stream key entries must be nonnegative")

    def _derive(self, *tail: int) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self._key + tail)))

    def clutter_rng(self, k: int) -> np.random.Generator:
        return self._derive(TAG_CLUTTER, int(k))

    def phase_rng(self, k: int, bin_index: int) -> np.random.Generator:
        return self._derive(TAG_PHASE, int(k), int(bin_index))

    def policy_rng(self) -> np.random.Generator:
        return self._derive(TAG_POLICY)


def target_amplitude(snr_db: float, clutter_pow: float, rng: np.random.Generator) -> complex:
    """Complex amplitude with |alpha|^2 = clutter_pow * 10^(snr_db/10), uniform phase."""
    if clutter_pow <= 0:
        raise ValueError("clutter power must be positive")
    mag = np.sqrt(clutter_pow * 10.0 ** (snr_db / 10.0))
    phase = rng.uniform(0.0, 2.0 * np.pi)
    return complex(mag * np.exp(1j * phase))


def synthesize_snapshot(
    w: WeightMatrix,
    scenario: Scenario,
    k: int,
    geom: ArrayGeometry,
    grid: AngularGrid,
    model: ClutterModel,
    rng: PulseStream,
) -> np.ndarray:
    """One received snapshot y_k = sum over active targets alpha h(nu) + clutter.

    The same snapshot is later tested against every grid bin, so cross-bin
    leakage between targets is physical rather than suppressed.
    """
    active = scenario.active_targets(k)
    y = gen_clutter(geom.n_virtual, model, rng.clutter_rng(k))
    if not active:
        return y
    cp = clutter_power(model)
    for t in active:
        if t.nu is None:
            raise ValueError(f"target at bin {t.bin} has unresolved nu; resolve the scenario first")
        alpha = target_amplitude(t.snr_db_at(k), cp, rng.phase_rng(k, t.bin))
        y = y + alpha * virtual_response(w, t.nu, geom)
    return y
