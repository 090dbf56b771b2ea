#!/usr/bin/env python3
"""Run the bundled example scenarios and print one summary line each.

Usage: python3 scripts/run_baseline.py [out_dir]
"""

import json
import sys
from pathlib import Path

from dynproof import parse_scenario, run_scenario

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def main() -> int:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("out/baseline")
    out_dir.mkdir(parents=True, exist_ok=True)
    for path in sorted(CONFIG_DIR.glob("*.json")):
        config = parse_scenario(json.loads(path.read_text()))
        report = run_scenario(config)
        (out_dir / f"{path.stem}.report.json").write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
        )
        report.trace.write(out_dir / f"{path.stem}.trace.jsonl")
        print(
            f"{path.stem:>14}: submitted={report.submitted:4d} finalized={report.finalized:4d} "
            f"reverted={report.reverted:3d} fraud_caught={report.fraud_caught:3d} "
            f"p50={report.latency_p50_ms} ms max={report.latency_max_ms} ms "
            f"steps={report.finalization_steps} suppressed={report.suppressed_events}"
        )
    print(f"reports and traces under {out_dir}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
