"""Disturbance model: a stable AR process along the virtual channel, driven by
heavy-tailed Student-t innovations (independent real and imaginary parts).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import lfilter

__all__ = [
    "ClutterModel",
    "default_clutter_model",
    "innovation_variance",
    "gen_clutter",
    "ar_autocovariance",
    "clutter_power",
]

MIN_BURN_IN = 500

# default pole layout: conjugate pairs spread across the band so the
# autocovariance is substantially captured by lags 0..6; tight pole clusters
# near one frequency would leave long-lag correlation that a bandwidth-6
# covariance estimate cannot represent, breaking the false-alarm calibration
_DEFAULT_POLE_RADIUS = 0.55
_DEFAULT_POLE_ANGLES = (0.12 * np.pi, 0.45 * np.pi, 0.78 * np.pi)


@dataclass(frozen=True)
class ClutterModel:
    """AR(p) coefficients a_1..a_p with innovation dof and scale.

    x[m] = sum_p a_p x[m-p] + e[m], where e has i.i.d. Student-t real and
    imaginary parts (t_dof = inf selects the Gaussian limit). Stability and
    t_dof > 2 (finite innovation variance) are enforced at construction.
    """

    ar_coeffs: tuple[complex, ...]
    t_dof: float = 3.0
    scale: float = 1.0

    def __post_init__(self) -> None:
        coeffs = tuple(complex(c) for c in self.ar_coeffs)
        object.__setattr__(self, "ar_coeffs", coeffs)
        if not self.t_dof > 2:
            raise ValueError("t_dof must exceed 2 so the innovation variance exists")
        if self.scale <= 0:
            raise ValueError("innovation scale must be positive")
        if coeffs and any(c != 0 for c in coeffs):
            # roots of z^p - a_1 z^(p-1) - ... - a_p must stay inside the unit circle
            roots = np.roots(np.concatenate(([1.0], -np.asarray(coeffs))))
            if np.any(np.abs(roots) >= 1.0):
                raise ValueError("unstable AR polynomial: root on or outside the unit circle")

    @property
    def order(self) -> int:
        return len(self.ar_coeffs)


def default_clutter_model() -> ClutterModel:
    """Stable, moderately correlated AR(6) with t(3) innovations."""
    angles = np.concatenate((_DEFAULT_POLE_ANGLES, [-a for a in _DEFAULT_POLE_ANGLES]))
    poles = _DEFAULT_POLE_RADIUS * np.exp(1j * angles)
    coeffs = -np.poly(poles)[1:]  # conjugate pairs, so np.poly returns real coefficients
    return ClutterModel(ar_coeffs=tuple(coeffs), t_dof=3.0, scale=1.0)


def innovation_variance(model: ClutterModel) -> float:
    """E|e|^2 = 2 scale^2 t_dof / (t_dof - 2); Gaussian limit gives 2 scale^2."""
    if math.isinf(model.t_dof):
        return 2.0 * model.scale**2
    return 2.0 * model.scale**2 * model.t_dof / (model.t_dof - 2.0)


def gen_clutter(
    n: int, model: ClutterModel, rng: np.random.Generator, burn_in: int = MIN_BURN_IN
) -> np.ndarray:
    """Draw n samples of the AR process, discarding a stationarity burn-in.

    Draw order is fixed for reproducibility: real parts first, then imaginary.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if burn_in < MIN_BURN_IN:
        raise ValueError(f"burn_in must be at least {MIN_BURN_IN}")
    total = n + burn_in
    if math.isinf(model.t_dof):
        raw = rng.standard_normal((2, total))
    else:
        raw = rng.standard_t(model.t_dof, size=(2, total))
    e = model.scale * (raw[0] + 1j * raw[1])
    if model.order == 0 or all(c == 0 for c in model.ar_coeffs):
        return e[burn_in:]
    a_poly = np.concatenate(([1.0], -np.asarray(model.ar_coeffs)))
    x = lfilter([1.0], a_poly, e)
    return x[burn_in:]


def ar_autocovariance(model: ClutterModel, max_lag: int) -> np.ndarray:
    """Theoretical autocovariance gamma(0..max_lag) of the stationary AR process.

    Solves the stationarity equation S = A S A^H + Q for the companion-form
    state covariance (direct Kronecker linear solve), then extends by the
    Yule-Walker recursion gamma(m) = sum_p a_p gamma(m-p).
    """
    if max_lag < 0:
        raise ValueError("max_lag must be nonnegative")
    sigma2 = innovation_variance(model)
    p = model.order
    gamma = np.zeros(max_lag + 1, dtype=np.complex128)
    if p == 0 or all(c == 0 for c in model.ar_coeffs):
        gamma[0] = sigma2
        return gamma
    a = np.asarray(model.ar_coeffs, dtype=np.complex128)
    comp = np.zeros((p, p), dtype=np.complex128)
    comp[0, :] = a
    if p > 1:
        comp[1:, :-1] = np.eye(p - 1)
    q = np.zeros((p, p), dtype=np.complex128)
    q[0, 0] = sigma2
    # vec(S) = (I - conj(A) kron A)^-1 vec(Q), column-major vec
    m = np.eye(p * p, dtype=np.complex128) - np.kron(comp.conj(), comp)
    s = np.linalg.solve(m, q.flatten(order="F")).reshape((p, p), order="F")
    # S[0, j] = E[x_m conj(x_{m-j})] = gamma(j) for j = 0..p-1
    upto = min(max_lag, p - 1)
    gamma[: upto + 1] = s[0, : upto + 1]
    for lag in range(p, max_lag + 1):
        back = gamma[lag - p : lag][::-1]  # gamma(lag-1) .. gamma(lag-p)
        gamma[lag] = np.dot(a, back)
    return gamma


@lru_cache(maxsize=128)
def clutter_power(model: ClutterModel) -> float:
    """Stationary power gamma(0) of the clutter process."""
    return float(ar_autocovariance(model, 0)[0].real)
