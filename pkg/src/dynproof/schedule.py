"""Challenge-window schedule arithmetic.

The dispute period after a state commitment starts short and stretches
exponentially each time the approval threshold is missed, while the
number of required approvals decays toward zero. Window lengths are
exact integer milliseconds and thresholds are evaluated as rationals
before flooring, so two replays of the same schedule can never drift
apart in consensus-relevant values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

from .errors import ConfigurationError, ScheduleExhaustedError

RatioLike = Union[int, float, str, Fraction]

MS_PER_SECOND = 1_000
MS_PER_MINUTE = 60 * MS_PER_SECOND
MS_PER_HOUR = 60 * MS_PER_MINUTE
MS_PER_DAY = 24 * MS_PER_HOUR


def exact_ratio(value: RatioLike, name: str = "ratio") -> Fraction:
    """Exact rational from user input.

    Floats go through their shortest decimal repr, so 0.7 means 7/10
    rather than the nearest binary double.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ConfigurationError(f"{name} must be a number, got bool")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ConfigurationError(f"{name} must be finite, got {value!r}")
        return Fraction(str(value))
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigurationError(f"{name}: {exc}") from exc
    raise ConfigurationError(f"{name} must be a number, got {type(value).__name__}")


@dataclass(frozen=True)
class FinalitySchedule:
    """Per-delegation finality configuration.

    t0_ms     initial challenge window, milliseconds
    r_t       window growth factor per extension, > 1
    c0        initial required challenger sign-offs, >= 0
    r_c       challenger-count decay factor per extension, in (0, 1]
    max_step  last distinct step; beyond it the window re-arms at the
              max_step parameters indefinitely
    """

    t0_ms: int
    r_t: Fraction
    c0: int
    r_c: Fraction
    max_step: int = 10

    def __post_init__(self):
        object.__setattr__(self, "r_t", exact_ratio(self.r_t, "r_t"))
        object.__setattr__(self, "r_c", exact_ratio(self.r_c, "r_c"))
        if not isinstance(self.t0_ms, int) or self.t0_ms <= 0:
            raise ConfigurationError(f"t0_ms must be a positive integer, got {self.t0_ms!r}")
        if self.r_t <= 1:
            raise ConfigurationError(f"r_t must be > 1, got {self.r_t}")
        if not isinstance(self.c0, int) or self.c0 < 0:
            raise ConfigurationError(f"c0 must be a non-negative integer, got {self.c0!r}")
        if not 0 < self.r_c <= 1:
            raise ConfigurationError(f"r_c must be in (0, 1], got {self.r_c}")
        if not isinstance(self.max_step, int) or self.max_step < 0:
            raise ConfigurationError(f"max_step must be a non-negative integer, got {self.max_step!r}")
        # Millisecond resolution: the first extension must grow the window
        # by at least 1 ms or flooring could stall the sequence.
        if self.t0_ms * (self.r_t - 1) < 1:
            raise ConfigurationError("t0_ms * (r_t - 1) must be >= 1 ms")


def _check_step(step: int, schedule: FinalitySchedule) -> None:
    if not isinstance(step, int) or step < 0:
        raise ConfigurationError(f"step must be a non-negative integer, got {step!r}")
    if step > schedule.max_step:
        raise ScheduleExhaustedError(
            f"step {step} beyond schedule max_step {schedule.max_step}"
        )


def window_duration(step: int, schedule: FinalitySchedule) -> int:
    """Window length t0 * r_t**step at the given step, exact integer ms.

    Strictly increasing in step. Fractional growth factors floor to whole
    milliseconds after exact rational evaluation.
    """
    _check_step(step, schedule)
    return math.floor(schedule.t0_ms * schedule.r_t**step)


def required_raw(step: int, schedule: FinalitySchedule) -> Fraction:
    """Exact rational c0 * r_c**step before flooring."""
    _check_step(step, schedule)
    return schedule.c0 * schedule.r_c**step


def required_challengers(step: int, schedule: FinalitySchedule) -> int:
    """Sign-off threshold floor(c0 * r_c**step); non-increasing, may hit 0."""
    return math.floor(required_raw(step, schedule))


def cumulative_duration(step: int, schedule: FinalitySchedule) -> int:
    """Total time from commitment through the deadline at `step`, exact ms."""
    _check_step(step, schedule)
    return sum(window_duration(n, schedule) for n in range(step + 1))


def schedule_rows(schedule: FinalitySchedule) -> Iterator[tuple[int, int, int, Fraction, int]]:
    """Rows (n, t_n ms, cumulative ms, raw c_n, floored c_n) for 0..max_step."""
    cumulative = 0
    for n in range(schedule.max_step + 1):
        t_n = window_duration(n, schedule)
        cumulative += t_n
        yield n, t_n, cumulative, required_raw(n, schedule), required_challengers(n, schedule)


def format_duration(ms: int) -> str:
    """Human rendering alongside exact ms, never instead of it."""
    if ms < MS_PER_SECOND:
        return f"{ms} ms"
    if ms < MS_PER_MINUTE:
        return f"{ms / MS_PER_SECOND:.3g} s"
    if ms < MS_PER_HOUR:
        return f"{ms / MS_PER_MINUTE:.3g} min"
    if ms < MS_PER_DAY:
        return f"{ms / MS_PER_HOUR:.3g} h"
    return f"{ms / MS_PER_DAY:.4g} days"
