"""The learning layer: detection-count MDP bookkeeping, SARSA updates, the
three exploration policies, data-driven epsilon/alpha adaptation, and the
non-learning baseline controllers.

States s^(0..K) and actions a^(0..K) are plain integers 0..K. Action j means
"focus the j highest-statistic bins next pulse" (0 = go omnidirectional).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .beamformer import FocusRequest
from .detector import DetectionReport
from .scenarios import Scenario

__all__ = [
    "POLICY_KINDS",
    "BASELINE_KINDS",
    "AdaptSpec",
    "EPS_ADAPT",
    "ALPHA_ADAPT",
    "HyperParamState",
    "AgentTrace",
    "initial_q",
    "greedy_action",
    "select_action",
    "sarsa_update",
    "omega_set",
    "reward",
    "adapt_hyperparam",
    "baseline_action",
]

POLICY_KINDS = ("eps", "quasi", "recovery")
BASELINE_KINDS = ("orthogonal", "nrl_c", "clairvoyant")


@dataclass(frozen=True)
class AdaptSpec:
    """Constants of the adaptation rule for one hyper-parameter."""

    x_min: float
    x_max: float
    c1: float
    c2: float
    eta1: float
    eta2: float

    def __post_init__(self) -> None:
        if not 0 < self.x_min <= self.x_max:
            raise ValueError("need 0 < x_min <= x_max")
        if not 0 < self.c1 < 1:
            raise ValueError("c1 must lie in (0, 1)")
        if self.c2 <= 1:
            raise ValueError("c2 must exceed 1")
        if not 0 <= self.eta1 <= self.eta2:
            raise ValueError("need 0 <= eta1 <= eta2")


EPS_ADAPT = AdaptSpec(x_min=0.1, x_max=0.8, c1=0.8, c2=2.0, eta1=0.5, eta2=1.8)
ALPHA_ADAPT = AdaptSpec(x_min=0.2, x_max=0.6, c1=0.9, c2=2.5, eta1=0.5, eta2=1.8)


@dataclass(frozen=True)
class HyperParamState:
    """Current epsilon and alpha with their adaptation constants and d_k memory."""

    eps: float
    alpha: float
    eps_spec: AdaptSpec = EPS_ADAPT
    alpha_spec: AdaptSpec = ALPHA_ADAPT
    last_reward: float = 0.0

    def __post_init__(self) -> None:
        if not self.eps_spec.x_min <= self.eps <= self.eps_spec.x_max:
            raise ValueError(f"eps = {self.eps} outside [{self.eps_spec.x_min}, {self.eps_spec.x_max}]")
        if not self.alpha_spec.x_min <= self.alpha <= self.alpha_spec.x_max:
            raise ValueError(
                f"alpha = {self.alpha} outside [{self.alpha_spec.x_min}, {self.alpha_spec.x_max}]"
            )


@dataclass(frozen=True)
class AgentTrace:
    """SARSA quintuple bookkeeping plus the last two exploration flags."""

    s_prev: int
    s_curr: int
    a_curr: int
    r_curr: float
    explored_flags: tuple[bool, bool]


def initial_q(k_max: int) -> np.ndarray:
    """Fresh state-action table, identity initialization."""
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    return np.eye(k_max + 1)


def greedy_action(q: np.ndarray, s: int) -> int:
    """Argmax over row s; ties resolve to the lowest action index."""
    return int(np.argmax(q[s]))


def select_action(
    policy_kind: str,
    q: np.ndarray,
    s_curr: int,
    s_prev: int,
    eps: float,
    rng: np.random.Generator,
) -> tuple[int, bool]:
    """Pick the next action; returns (action, explored).

    eps: greedy with probability 1 - eps, otherwise uniform over all actions
    except the greedy one.
    quasi: as eps, but the random draw is restricted to actions >= the current
    state index (never plan fewer beams than confirmed targets); an empty
    candidate set falls back to greedy without counting as exploration.
    recovery: when the state index dropped, deterministically replay the best
    action of the previous state; otherwise quasi.

    explored is True only when the random branch actually fired. Consumes one
    uniform draw per call plus one integer draw when exploring; the recovery
    branch consumes nothing.
    """
    if policy_kind not in POLICY_KINDS:
        raise ValueError(f"unknown policy kind {policy_kind!r}; expected one of {POLICY_KINDS}")
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    n_actions = q.shape[1]
    if policy_kind == "recovery" and s_curr < s_prev:
        return greedy_action(q, s_prev), False
    greedy = greedy_action(q, s_curr)
    low = 0 if policy_kind == "eps" else s_curr
    candidates = [a for a in range(low, n_actions) if a != greedy]
    u = rng.random()
    if u < eps and candidates:
        return candidates[int(rng.integers(len(candidates)))], True
    return greedy, False


def sarsa_update(
    q: np.ndarray,
    s: int,
    a: int,
    r: float,
    s_next: int,
    a_next: int,
    alpha: float,
    gamma: float,
) -> np.ndarray:
    """One on-policy temporal-difference update; returns a new table."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    out = q.copy()
    out[s, a] = q[s, a] + alpha * (r + gamma * q[s_next, a_next] - q[s, a])
    return out


def omega_set(report: DetectionReport, action_j: int) -> set[int]:
    """Bins to focus for an action: the action_j highest-statistic bins (1-based)."""
    if not 0 <= action_j <= report.n_bins:
        raise ValueError(f"action {action_j} outside 0..{report.n_bins}")
    return {int(b) for b in report.sorted_bins[:action_j]}


def reward(report: DetectionReport, k_max: int) -> float:
    """Detection-probability credit over the top-k_max bins.

    The top state_index of them count positively (detected), the remainder
    negatively (still unconfirmed).
    """
    psi = report.sorted_bins[:k_max]
    pd = report.pd_estimates[psi - 1]
    i = report.state_index
    return float(pd[:i].sum() - pd[i:].sum())


def adapt_hyperparam(
    h: HyperParamState,
    r_new: float,
    k: int,
    explored_prev_two: tuple[bool, bool],
    update_eps: bool = True,
    update_alpha: bool = True,
) -> HyperParamState:
    """Reward-difference-driven update of epsilon and alpha.

    d_k = r_k - r_{k-1} (d_1 = r_1). Small |d| decays the parameter toward
    x_min, moderate |d| grows it, |d| beyond eta2 resets it to x_max; boundary
    values take the lower branch. The update is skipped entirely when both of
    the last two steps were exploration steps, so random actions do not
    masquerade as scene changes. last_reward always advances.
    """
    r_new = float(r_new)
    d = abs(r_new if k == 1 else r_new - h.last_reward)
    eps, alpha = h.eps, h.alpha
    if not (explored_prev_two[0] and explored_prev_two[1]):
        if update_eps:
            eps = _adapt_value(eps, d, h.eps_spec)
        if update_alpha:
            alpha = _adapt_value(alpha, d, h.alpha_spec)
    return replace(h, eps=eps, alpha=alpha, last_reward=r_new)


def _adapt_value(x: float, d: float, spec: AdaptSpec) -> float:
    if d <= spec.eta1:
        return max(spec.c1 * x, spec.x_min)
    if d <= spec.eta2:
        return min(spec.c2 * x, spec.x_max)
    return spec.x_max


def baseline_action(
    kind: str, report: DetectionReport, scenario: Scenario, k: int, p_max: float
) -> FocusRequest:
    """Focus request of a non-learning controller.

    orthogonal never focuses; nrl_c focuses exactly the detected bins;
    clairvoyant reads the true active bins from the scenario.
    """
    if kind == "orthogonal":
        return FocusRequest((), p_max)
    if kind == "nrl_c":
        bins = tuple(int(b) for b in np.flatnonzero(report.decisions) + 1)
        return FocusRequest(bins, p_max)
    if kind == "clairvoyant":
        return FocusRequest(tuple(t.bin for t in scenario.active_targets(k)), p_max)
    raise ValueError(f"unknown baseline kind {kind!r}; expected one of {BASELINE_KINDS}")
