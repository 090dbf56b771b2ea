#!/usr/bin/env python3
"""Show how sign-off suppression trades liveness for safety: sweep the
censor's budget (in whole committee-rounds) and report where settlement
lands on the extension schedule.

Usage: python3 scripts/censorship_delay.py
"""

import sys

from dynproof import (
    FinalitySchedule,
    ScenarioConfig,
    censor_spec,
    challenger_spec,
    cumulative_duration,
    format_duration,
    operator_spec,
    run_scenario,
)

POOL = 8
SCHEDULE = FinalitySchedule(t0_ms=500, r_t=4, c0=POOL, r_c=0.7, max_step=8)


def main() -> int:
    print(f"{'rounds':>6} {'budget':>6} {'final step':>10} {'latency':>12} {'latency human':>14}")
    for rounds in range(0, 6):
        population = (operator_spec("op"),) + tuple(
            challenger_spec(f"h{i}") for i in range(POOL)
        )
        if rounds:
            population += (censor_spec("cz", budget=rounds * POOL),)
        config = ScenarioConfig(
            seed=100 + rounds, duration_ms=4000, commitment_cadence_ms=4000,
            schedule=SCHEDULE, population=population,
        )
        report = run_scenario(config)
        step = max(report.finalization_steps)
        latency = report.latency_max_ms
        assert latency == cumulative_duration(step, SCHEDULE)
        print(f"{rounds:>6} {rounds * POOL:>6} {step:>10} {latency:>12} "
              f"{format_duration(latency):>14}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
