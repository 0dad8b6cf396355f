"""Transmit weight synthesis: the omnidirectional baseline and focused
multi-beam matrices approximating the max-min beampattern program.

Focused mode restricts W to conjugate-steering columns, one per requested bin,
and balances the per-beam powers by a fixed-point iteration so the realized
beampattern values at the requested bins equalize. For bins that sit on grid
multiples of 1/n_tx the steering vectors are exactly orthogonal and the equal
split is already optimal.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .arrays import AngularGrid, WeightMatrix, steering_vector

__all__ = ["FocusRequest", "orthogonal_weights", "focused_weights", "power_used"]

logger = logging.getLogger(__name__)

MAX_BALANCE_ITERS = 50
BALANCE_TOL = 1e-6


@dataclass(frozen=True)
class FocusRequest:
    """A set of 1-based grid bins to illuminate, with the total power budget."""

    bins: tuple[int, ...]
    p_max: float

    def __post_init__(self) -> None:
        bins = tuple(sorted({int(b) for b in self.bins}))
        if any(b < 1 for b in bins):
            raise ValueError("bin indices are 1-based")
        if self.p_max <= 0:
            raise ValueError("p_max must be positive")
        object.__setattr__(self, "bins", bins)


def orthogonal_weights(n_tx: int, p_max: float) -> WeightMatrix:
    """Omnidirectional weighting sqrt(p_max / n_tx) I; uses the full budget."""
    if n_tx < 1:
        raise ValueError("n_tx must be at least 1")
    if p_max <= 0:
        raise ValueError("p_max must be positive")
    w = np.sqrt(p_max / n_tx) * np.eye(n_tx, dtype=np.complex128)
    return WeightMatrix(w, p_max)


def _balance_powers(gram: np.ndarray, p_max: float) -> tuple[np.ndarray, bool]:
    """Fixed-point max-min power balancing over the beampattern map gram @ p."""
    n = gram.shape[0]
    p = np.full(n, p_max / n)
    for _ in range(MAX_BALANCE_ITERS):
        bp = gram @ p
        if bp.max() - bp.min() <= BALANCE_TOL * bp.min():
            return p, True
        scaled = p / bp
        p = p_max * scaled / scaled.sum()
    bp = gram @ p
    return p, bool(bp.max() - bp.min() <= BALANCE_TOL * bp.min())


def focused_weights(req: FocusRequest, grid: AngularGrid, n_tx: int) -> WeightMatrix:
    """Multi-beam W with column bin-1 = sqrt(p_bin / n_tx) conj(a_T(nu_bin)).

    Beam powers are balanced so the beampattern values at the requested bins
    equalize; on non-convergence the equal split is used and a warning logged.
    """
    bins = req.bins
    if not bins:
        raise ValueError("empty focus set: use orthogonal_weights for the omni branch")
    if len(bins) > n_tx:
        raise ValueError(f"cannot focus {len(bins)} beams with n_tx = {n_tx}")
    if bins[-1] > len(grid):
        raise ValueError(f"bin {bins[-1]} beyond grid size {len(grid)}")
    if bins[-1] > n_tx:
        raise ValueError(f"bin {bins[-1]} has no transmit column with n_tx = {n_tx}")

    steer = [steering_vector(n_tx, grid.nu_of(b)) for b in bins]
    gram = np.empty((len(bins), len(bins)))
    for i, ai in enumerate(steer):
        for j, aj in enumerate(steer):
            inner = np.dot(ai, aj.conj())
            gram[i, j] = (inner.real**2 + inner.imag**2) / n_tx

    powers, converged = _balance_powers(gram, req.p_max)
    if not converged:
        logger.warning(
            "beam power balancing did not converge for bins %s; using equal split", bins
        )
        powers = np.full(len(bins), req.p_max / len(bins))

    w = np.zeros((n_tx, n_tx), dtype=np.complex128)
    for b, a, p in zip(bins, steer, powers):
        w[:, b - 1] = np.sqrt(p / n_tx) * a.conj()
    return WeightMatrix(w, req.p_max)


def power_used(w: WeightMatrix) -> float:
    """Total transmit power tr(W W^H)."""
    return float(np.sum(np.abs(w.entries) ** 2))
