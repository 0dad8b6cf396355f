"""Uniform linear arrays: steering vectors, the virtual-array response, and the
transmit beampattern.

Spatial frequency nu = (d / lambda) * sin(theta) is the canonical coordinate
throughout; physical angles are never stored. Complex exponent convention is
exp(+i 2 pi nu m).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ArrayGeometry",
    "AngularGrid",
    "WeightMatrix",
    "make_grid",
    "steering_vector",
    "virtual_response",
    "transmit_beampattern",
]

# slack allowed on the transmit power budget check
POWER_TOL = 1e-9


@dataclass(frozen=True)
class ArrayGeometry:
    """Co-located transmit/receive ULAs; the virtual array has n_tx * n_rx channels."""

    n_tx: int
    n_rx: int
    spacing_ratio: float = 0.5

    def __post_init__(self) -> None:
        if self.n_tx < 1 or self.n_rx < 1:
            raise ValueError("array sizes must be at least 1")
        if self.spacing_ratio <= 0:
            raise ValueError("spacing_ratio must be positive")

    @property
    def n_virtual(self) -> int:
        return self.n_tx * self.n_rx


@dataclass(frozen=True)
class AngularGrid:
    """Strictly increasing spatial-frequency bins, all within [-0.5, 0.5].

    Bin indices are 1-based everywhere in the public API.
    """

    nus: tuple[float, ...]

    def __post_init__(self) -> None:
        arr = np.asarray(self.nus, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("grid needs at least one bin")
        if np.any(np.diff(arr) <= 0):
            raise ValueError("grid frequencies must be strictly increasing")
        if np.any(np.abs(arr) > 0.5):
            raise ValueError("spatial frequencies must lie in [-0.5, 0.5]")
        object.__setattr__(self, "nus", tuple(float(v) for v in arr))

    def __len__(self) -> int:
        return len(self.nus)

    def nu_of(self, bin_index: int) -> float:
        """Spatial frequency of a 1-based bin index."""
        if not 1 <= bin_index <= len(self.nus):
            raise IndexError(f"bin {bin_index} outside 1..{len(self.nus)}")
        return self.nus[bin_index - 1]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.nus, dtype=float)


@dataclass(frozen=True)
class WeightMatrix:
    """Square transmit weighting W with its power budget.

    The total-power constraint tr(W W^H) <= p_max (+ 1e-9 slack) is checked at
    construction; entries are stored read-only.
    """

    entries: np.ndarray
    p_max: float

    def __post_init__(self) -> None:
        w = np.array(self.entries, dtype=np.complex128)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weight matrix must be square")
        if self.p_max <= 0:
            raise ValueError("p_max must be positive")
        used = float(np.sum(np.abs(w) ** 2))
        if used > self.p_max + POWER_TOL:
            raise ValueError(
                f"power budget violated: tr(WW^H) = {used:.9g} exceeds p_max = {self.p_max:.9g}"
            )
        w.setflags(write=False)
        object.__setattr__(self, "entries", w)

    @property
    def n_tx(self) -> int:
        return self.entries.shape[0]


def make_grid(n_bins: int) -> AngularGrid:
    """Uniform grid nu_l = (l - L/2 - 1) / L for 1-based l; requires even L."""
    if n_bins < 2:
        raise ValueError("grid needs at least 2 bins")
    if n_bins % 2 != 0:
        raise ValueError("bin count must be even for the uniform grid mapping")
    l = np.arange(1, n_bins + 1)
    return AngularGrid(tuple((l - n_bins / 2 - 1) / n_bins))


def steering_vector(n_elems: int, nu: float) -> np.ndarray:
    """ULA steering vector, element m = exp(i 2 pi nu m)."""
    if n_elems < 1:
        raise ValueError("n_elems must be at least 1")
    if abs(nu) > 0.5:
        raise ValueError(f"spatial frequency {nu} outside [-0.5, 0.5]")
    return np.exp(2j * np.pi * nu * np.arange(n_elems))


def virtual_response(w: WeightMatrix, nu: float, geom: ArrayGeometry) -> np.ndarray:
    """Virtual-array response h = (W^T a_T(nu)) kron a_R(nu), length n_tx * n_rx."""
    if w.n_tx != geom.n_tx:
        raise ValueError(f"weight matrix is {w.n_tx}x{w.n_tx} but geometry has n_tx = {geom.n_tx}")
    u = w.entries.T @ steering_vector(geom.n_tx, nu)
    v = steering_vector(geom.n_rx, nu)
    return (u[:, None] * v[None, :]).ravel()


def transmit_beampattern(w: WeightMatrix, nu):
    """Transmit power density a_T^T(nu) W W^H a_T*(nu); scalar or per-element of nu."""
    nus = np.atleast_1d(np.asarray(nu, dtype=float))
    if np.any(np.abs(nus) > 0.5):
        raise ValueError("spatial frequency outside [-0.5, 0.5]")
    a = np.exp(2j * np.pi * np.outer(np.arange(w.n_tx), nus))
    # a_T^T W row per nu; the pattern is its squared norm, real by construction
    rows = w.entries.T @ a
    vals = np.sum(np.abs(rows) ** 2, axis=0)
    return float(vals[0]) if np.isscalar(nu) or np.asarray(nu).ndim == 0 else vals
