"""Robust Wald-type detection on a single snapshot.

The disturbance covariance is estimated as a banded Hermitian Toeplitz matrix
from lag averages of the snapshot itself; the quadratic form h^H Gamma h is
evaluated from the lags in O(N b) without materializing the matrix. The
statistic Lambda = 2 |h^H y|^2 / (h^H Gamma h) is scale invariant, which is
what makes the false-alarm rate insensitive to the clutter law.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import ncx2

__all__ = [
    "CovarianceEstimate",
    "DetectionReport",
    "estimate_covariance",
    "quadratic_form",
    "wald_statistic",
    "wald_statistics_factored",
    "threshold",
    "estimate_pd",
    "build_report",
]

GAMMA0_FLOOR = 1e-12
QF_FLOOR = 1e-30


@dataclass(frozen=True)
class CovarianceEstimate:
    """Lags gamma(0..b) of a banded Hermitian Toeplitz covariance of size n_samples."""

    lags: np.ndarray
    n_samples: int

    def __post_init__(self) -> None:
        lags = np.array(self.lags, dtype=np.complex128)
        if lags.ndim != 1 or lags.size < 1:
            raise ValueError("lags must be a nonempty vector")
        g0 = lags[0]
        if abs(g0.imag) > 1e-9 * max(abs(g0.real), 1.0):
            raise ValueError("gamma(0) must be real")
        if g0.real <= 0:
            raise ValueError("gamma(0) must be positive")
        lags[0] = g0.real
        lags.setflags(write=False)
        object.__setattr__(self, "lags", lags)

    @property
    def bandwidth(self) -> int:
        return self.lags.size - 1


@dataclass(frozen=True)
class DetectionReport:
    """Per-bin statistics and everything the learner consumes.

    decisions[l-1] = 1 iff Lambda_l cleared the threshold; state_index is the
    detection count clipped at the largest action; sorted_bins lists 1-based
    bins by descending statistic (ties resolve to the lower bin).
    """

    statistics: np.ndarray
    decisions: np.ndarray
    state_index: int
    pd_estimates: np.ndarray
    sorted_bins: np.ndarray

    def __post_init__(self) -> None:
        for name in ("statistics", "decisions", "pd_estimates", "sorted_bins"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_bins(self) -> int:
        return self.statistics.size


def estimate_covariance(y: np.ndarray, bandwidth: int = 6) -> CovarianceEstimate:
    """Lag averages gamma(m) = mean of y[n+m] conj(y[n]) for m = 0..bandwidth."""
    y = np.asarray(y, dtype=np.complex128)
    n = y.size
    if bandwidth < 0:
        raise ValueError("bandwidth must be nonnegative")
    if n <= bandwidth:
        raise ValueError(f"need more than bandwidth = {bandwidth} samples, got {n}")
    lags = np.empty(bandwidth + 1, dtype=np.complex128)
    lags[0] = max(np.vdot(y, y).real / n, GAMMA0_FLOOR)
    for m in range(1, bandwidth + 1):
        lags[m] = np.vdot(y[: n - m], y[m:]) / (n - m)
    return CovarianceEstimate(lags, n)


def quadratic_form(h: np.ndarray, cov: CovarianceEstimate) -> float:
    """h^H Gamma h from the lags: gamma(0)||h||^2 + 2 Re sum_m gamma(m) T_m(h)."""
    h = np.asarray(h, dtype=np.complex128)
    acc = cov.lags[0].real * np.vdot(h, h).real
    for m in range(1, min(cov.bandwidth, h.size - 1) + 1):
        acc += 2.0 * (cov.lags[m] * np.vdot(h[:-m], h[m:])).real
    return max(float(acc), QF_FLOOR)


def wald_statistic(h: np.ndarray, y: np.ndarray, cov: CovarianceEstimate) -> float:
    """Lambda = 2 |h^H y|^2 / (h^H Gamma h)."""
    h = np.asarray(h, dtype=np.complex128)
    if not np.any(h):
        raise ValueError("degenerate steering: h is identically zero")
    num = np.vdot(h, y)
    return 2.0 * (num.real**2 + num.imag**2) / quadratic_form(h, cov)


def wald_statistics_factored(
    u: np.ndarray, nus: np.ndarray, n_rx: int, y: np.ndarray, cov: CovarianceEstimate
) -> np.ndarray:
    """All-bin Wald statistics for separable responses h_l = u_l kron a_R(nu_l).

    u holds the transmit-side vectors W^T a_T(nu_l) as columns. Exploits the
    exponential structure of a_R, so the banded quadratic form costs O(n_tx b)
    per bin instead of O(n_tx n_rx b). Matches per-bin wald_statistic over
    virtual_response to floating-point accuracy; requires n_rx > bandwidth so
    a lag shift crosses at most one transmit-index boundary.
    """
    u = np.asarray(u, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    nus = np.asarray(nus, dtype=float)
    n_tx, n_bins = u.shape
    if nus.size != n_bins:
        raise ValueError("one spatial frequency per column of u")
    if y.size != n_tx * n_rx:
        raise ValueError("snapshot length must equal n_tx * n_rx")
    b = cov.bandwidth
    if n_rx <= b:
        raise ValueError("factored path needs n_rx > bandwidth; use wald_statistic per bin")

    uu = np.einsum("pl,pl->l", u.conj(), u).real  # ||u_l||^2
    if np.any(uu == 0):
        raise ValueError("degenerate steering: some column of u is identically zero")
    v = np.exp(2j * np.pi * np.outer(np.arange(n_rx), nus))
    g = y.reshape(n_tx, n_rx) @ v.conj()
    numer = np.einsum("pl,pl->l", u.conj(), g)

    qf = cov.lags[0].real * uu * n_rx
    if b > 0:
        cu = np.einsum("pl,pl->l", u[:-1].conj(), u[1:]) if n_tx > 1 else np.zeros(n_bins)
        m = np.arange(1, b + 1)[:, None]
        # receive-side lag sums of a_R(nu): in-row term and the row-wrap term
        a_m = (n_rx - m) * np.exp(2j * np.pi * m * nus[None, :])
        b_m = m * np.exp(2j * np.pi * (m - n_rx) * nus[None, :])
        t_m = uu[None, :] * a_m + cu[None, :] * b_m
        qf = qf + 2.0 * np.einsum("m,ml->l", cov.lags[1:], t_m).real
    qf = np.maximum(qf, QF_FLOOR)
    return 2.0 * (numer.real**2 + numer.imag**2) / qf


def threshold(p_fa: float) -> float:
    """CFAR threshold lambda = -2 ln(p_fa)."""
    if not 0.0 < p_fa < 1.0:
        raise ValueError("p_fa must lie strictly between 0 and 1")
    return -2.0 * np.log(p_fa)


def estimate_pd(lam, thr: float):
    """Plug-in detection probability Q1(sqrt(max(Lambda - 2, 0)), sqrt(lambda)).

    The statistic is asymptotically noncentral chi-squared with 2 dof and mean
    2 + noncentrality, so max(Lambda - 2, 0) estimates the noncentrality.
    Scalar in, scalar out; arrays broadcast elementwise.
    """
    if thr <= 0:
        raise ValueError("threshold must be positive")
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr < 0):
        raise ValueError("statistics must be nonnegative")
    nc = np.maximum(lam_arr - 2.0, 0.0)
    with np.errstate(all="ignore"):
        pd = np.clip(ncx2.sf(thr, 2, nc), 0.0, 1.0)
    # the survival function overflows to nan for enormous noncentrality,
    # where its limit is 1 (floored quadratic forms produce such statistics)
    bad = ~np.isfinite(pd)
    if np.any(bad):
        pd = np.where(bad & (nc > thr), 1.0, np.where(bad, 0.0, pd))
    return float(pd) if lam_arr.ndim == 0 else pd


def build_report(statistics, thr: float, k_max: int) -> DetectionReport:
    """Threshold all bins and assemble the detection report.

    state_index = min(detection count, k_max); sorted_bins is the 1-based bin
    permutation by descending statistic, equal values ordered by bin index.
    """
    stats = np.asarray(statistics, dtype=float)
    if stats.ndim != 1 or stats.size < 1:
        raise ValueError("statistics must be a nonempty vector")
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    decisions = (stats >= thr).astype(np.uint8)
    state_index = int(min(int(decisions.sum()), k_max))
    order = np.lexsort((np.arange(stats.size), -stats))
    return DetectionReport(
        statistics=stats.copy(),
        decisions=decisions,
        state_index=state_index,
        pd_estimates=np.asarray(estimate_pd(stats, thr), dtype=float),
        sorted_bins=(order + 1).astype(np.int64),
    )
