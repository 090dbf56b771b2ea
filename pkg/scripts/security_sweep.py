#!/usr/bin/env python3
"""Sweep the challenge-probability model over committee size and per-node
challenge probability; cross-check each point with Monte Carlo.

Usage: python3 scripts/security_sweep.py [out.csv]
"""

import csv
import sys

from dynproof import SecurityParams, monte_carlo_p_challenge, p_challenge, p_fast_finality

N_GRID = [5, 10, 25, 50, 100, 200]
P_NODE_GRID = [0.01, 0.05, 0.1, 0.25, 0.5]
TRIALS = 50_000


def main() -> int:
    out_path = sys.argv[1] if len(sys.argv) > 1 else "security_sweep.csv"
    rows = []
    for n in N_GRID:
        for p_node in P_NODE_GRID:
            params = SecurityParams(
                p_fraud=0.01, p_detect_given_fraud=0.9, p_window=1.0,
                n_nodes=n, p_node_challenge=p_node,
            )
            closed = p_challenge(params)
            mc = monte_carlo_p_challenge(params, trials=TRIALS, seed=n * 1000 + int(p_node * 100))
            rows.append([n, p_node, f"{closed:.8f}", f"{p_fast_finality(params):.8f}",
                         f"{mc.estimate:.8f}", f"{mc.std_error:.8f}", mc.agrees_with(closed)])
            print(f"N={n:4d} p_node={p_node:.2f}  P(E)={closed:.6f}  "
                  f"mc={mc.estimate:.6f}+/-{mc.std_error:.6f}  "
                  f"{'ok' if mc.agrees_with(closed) else 'DISAGREE'}")
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_nodes", "p_node_challenge", "p_challenge", "p_fast_finality",
                         "mc_estimate", "mc_std_error", "agrees_3se"])
        writer.writerows(rows)
    print(f"wrote {out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
