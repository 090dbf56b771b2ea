"""Closed-form challenge-probability model and its Monte Carlo oracle.

The chance that a committed state gets challenged is modeled as the
product of independent gates: the commitment is fraudulent, the fraud is
detectable, the window is long enough, and at least one of N independent
nodes actually raises the challenge. Fast finality is the complement.

The Monte Carlo estimator draws those gates literally, trial by trial,
so it stays an independent check on the algebra rather than a restatement
of it.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .schedule import FinalitySchedule, cumulative_duration

_MASK64 = (1 << 64) - 1


def _check_probability(value: float, name: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValueError(f"{name} must be a number, got {type(value).__name__}")
    if math.isnan(value) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value!r}")
    return float(value)


@dataclass(frozen=True)
class SecurityParams:
    """Inputs to the challenge-probability model.

    p_participation is carried for reporting and simulator policies; it is
    not a factor of the closed-form product.
    """

    p_fraud: float
    p_detect_given_fraud: float
    p_window: float
    n_nodes: int
    p_node_challenge: float
    p_participation: float = 1.0

    def __post_init__(self):
        _check_probability(self.p_fraud, "p_fraud")
        _check_probability(self.p_detect_given_fraud, "p_detect_given_fraud")
        _check_probability(self.p_window, "p_window")
        _check_probability(self.p_node_challenge, "p_node_challenge")
        _check_probability(self.p_participation, "p_participation")
        if not isinstance(self.n_nodes, int) or self.n_nodes < 0:
            raise ValueError(f"n_nodes must be a non-negative integer, got {self.n_nodes!r}")


def p_at_least_one_challenge(p_node_challenge: float, n_nodes: int) -> float:
    """1 - (1 - p)**N: the chance that any of N independent nodes challenges."""
    p = _check_probability(p_node_challenge, "p_node_challenge")
    if not isinstance(n_nodes, int) or n_nodes < 0:
        raise ValueError(f"n_nodes must be a non-negative integer, got {n_nodes!r}")
    return 1.0 - (1.0 - p) ** n_nodes


def p_challenge(params: SecurityParams) -> float:
    """Probability that a commitment gets challenged at all."""
    return (
        params.p_fraud
        * params.p_detect_given_fraud
        * params.p_window
        * p_at_least_one_challenge(params.p_node_challenge, params.n_nodes)
    )


def p_fast_finality(params: SecurityParams) -> float:
    """Probability of settling on the ideal path, 1 - p_challenge."""
    return 1.0 - p_challenge(params)


def _mix64(seed: int, index: int) -> int:
    """splitmix64 of (seed, index): independent per-trial seeds, so trials
    can run in any order or in parallel chunks and still agree."""
    z = (seed + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    std_error: float
    trials: int
    events: int

    def agrees_with(self, expected: float, sigmas: float = 3.0) -> bool:
        return abs(self.estimate - expected) <= sigmas * self.std_error

    def z_score(self, expected: float) -> float:
        if self.std_error == 0.0:
            return 0.0 if self.estimate == expected else math.inf
        return (self.estimate - expected) / self.std_error


def monte_carlo_p_challenge(
    params: SecurityParams, trials: int, seed: int = 0
) -> MonteCarloEstimate:
    """Estimate the challenge probability by simulating the gates directly.

    Per trial: draw the fraud gate, then detection, then window adequacy,
    then up to N node draws (short-circuited on the first challenger, which
    leaves the event distribution unchanged). The standard error is the
    binomial sqrt(p(1-p)/trials).
    """
    if not isinstance(trials, int) or trials < 1:
        raise ValueError(f"trials must be a positive integer, got {trials!r}")
    events = 0
    for i in range(trials):
        rng = random.Random(_mix64(seed, i))
        if rng.random() >= params.p_fraud:
            continue
        if rng.random() >= params.p_detect_given_fraud:
            continue
        if rng.random() >= params.p_window:
            continue
        if any(rng.random() < params.p_node_challenge for _ in range(params.n_nodes)):
            events += 1
    estimate = events / trials
    std_error = math.sqrt(estimate * (1.0 - estimate) / trials)
    return MonteCarloEstimate(estimate, std_error, trials, events)


@dataclass(frozen=True)
class SettlementDistribution:
    """Where the settlement mass lands across extension steps."""

    expected_ms: float
    settle_mass: tuple[float, ...]
    unsettled_mass: float
    cumulative_ms: tuple[int, ...]


def expected_settlement_time(
    schedule: FinalitySchedule, p_meet_threshold_per_step: list[float]
) -> SettlementDistribution:
    """Expected settlement time given a per-step threshold-success probability.

    Mass settling at step k is prod(1-p_j for j<k) * p_k and contributes the
    cumulative window time through step k; whatever survives every listed
    step is reported as unsettled residual mass.
    """
    probs = [_check_probability(p, f"p[{k}]") for k, p in enumerate(p_meet_threshold_per_step)]
    if len(probs) > schedule.max_step + 1:
        raise ValueError(
            f"{len(probs)} step probabilities exceed max_step {schedule.max_step} + 1"
        )
    masses: list[float] = []
    cumulative: list[int] = []
    surviving = 1.0
    expected = 0.0
    for step, p in enumerate(probs):
        mass = surviving * p
        cum_ms = cumulative_duration(step, schedule)
        masses.append(mass)
        cumulative.append(cum_ms)
        expected += mass * cum_ms
        surviving *= 1.0 - p
    return SettlementDistribution(
        expected_ms=expected,
        settle_mass=tuple(masses),
        unsettled_mass=surviving,
        cumulative_ms=tuple(cumulative),
    )
