"""Command-line front end: schedule tables, security-model checks, scenario runs.

Every number in the emitted tables comes from a library call; the CLI
only formats. Exit codes: 0 success, 2 malformed input, 3 protocol
invariant violation during a run.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError, InvariantViolation
from .scenario import parse_scenario
from .schedule import FinalitySchedule, format_duration, schedule_rows
from .security import MonteCarloEstimate, SecurityParams, monte_carlo_p_challenge, p_challenge, p_fast_finality
from .simulator import run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3


@dataclass
class RunManifest:
    config_path: Path
    out_dir: Path
    seed_override: int | None = None
    trials_override: int | None = None
    sweep_axes: dict[str, list] = field(default_factory=dict)


def _fail_config(message: str) -> int:
    print(f"config error: {message}", file=sys.stderr)
    return EXIT_CONFIG


# -- schedule ---------------------------------------------------------------

def cmd_schedule(args: argparse.Namespace) -> int:
    try:
        schedule = FinalitySchedule(
            t0_ms=args.t0, r_t=args.rt, c0=args.c0, r_c=args.rc, max_step=args.max_step
        )
    except ConfigurationError as exc:
        return _fail_config(str(exc))
    rows = list(schedule_rows(schedule))
    header = f"{'n':>3}  {'t_n_ms':>14}  {'t_n':>12}  {'cumulative_ms':>14}  {'c_raw':>14}  {'c_n':>6}"
    print(header)
    for n, t_n, cum, raw, floored in rows:
        print(
            f"{n:>3}  {t_n:>14}  {format_duration(t_n):>12}  {cum:>14}  {float(raw):>14.10g}  {floored:>6}"
        )
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "t_n_ms", "t_n_human", "cumulative_ms", "c_raw", "c_n"])
            for n, t_n, cum, raw, floored in rows:
                writer.writerow([n, t_n, format_duration(t_n), cum, f"{float(raw):.10g}", floored])
        print(f"wrote {args.csv}")
    return EXIT_OK


# -- security ----------------------------------------------------------------

_SECURITY_COLUMNS = [
    "p_fraud", "p_detect_given_fraud", "p_window", "n_nodes", "p_node_challenge",
    "p_participation", "p_challenge", "p_fast_finality",
    "mc_estimate", "mc_std_error", "mc_trials", "agrees_3se",
]


def _params_from_mapping(data: dict) -> SecurityParams:
    allowed = {"p_fraud", "p_detect_given_fraud", "p_window", "n_nodes",
               "p_node_challenge", "p_participation"}
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"unknown security parameter(s): {sorted(unknown)}")
    return SecurityParams(**data)


def cmd_security(args: argparse.Namespace) -> int:
    try:
        if args.params:
            raw = json.loads(Path(args.params).read_text())
            entries = raw if isinstance(raw, list) else [raw]
            param_sets = [_params_from_mapping(e) for e in entries]
        else:
            param_sets = [
                SecurityParams(
                    p_fraud=args.p_fraud,
                    p_detect_given_fraud=args.p_detect,
                    p_window=args.p_window,
                    n_nodes=args.nodes,
                    p_node_challenge=args.p_node_challenge,
                    p_participation=args.p_participation,
                )
            ]
    except (ValueError, TypeError, OSError, json.JSONDecodeError) as exc:
        return _fail_config(str(exc))

    rows = []
    for i, params in enumerate(param_sets):
        closed = p_challenge(params)
        fast = p_fast_finality(params)
        try:
            estimate: MonteCarloEstimate = monte_carlo_p_challenge(
                params, trials=args.trials, seed=args.seed + i
            )
        except ValueError as exc:
            return _fail_config(str(exc))
        agrees = estimate.agrees_with(closed)
        rows.append((params, closed, fast, estimate, agrees))
        flag = "ok" if agrees else f"DISAGREE z={estimate.z_score(closed):+.2f}"
        print(
            f"P(E)={closed:.7f}  fast_finality={fast:.7f}  "
            f"mc={estimate.estimate:.7f} +/- {estimate.std_error:.7f} "
            f"(trials={estimate.trials})  [{flag}]"
        )
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_SECURITY_COLUMNS)
            for params, closed, fast, estimate, agrees in rows:
                writer.writerow([
                    params.p_fraud, params.p_detect_given_fraud, params.p_window,
                    params.n_nodes, params.p_node_challenge, params.p_participation,
                    f"{closed:.12g}", f"{fast:.12g}",
                    f"{estimate.estimate:.12g}", f"{estimate.std_error:.12g}",
                    estimate.trials, agrees,
                ])
        print(f"wrote {args.csv}")
    return EXIT_OK


# -- run -----------------------------------------------------------------------

def _parse_sweeps(pairs: list[str]) -> dict[str, list]:
    axes: dict[str, list] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigurationError(f"sweep must look like field=v1,v2 (got {pair!r})")
        key, _, values = pair.partition("=")
        parsed = []
        for token in values.split(","):
            try:
                parsed.append(json.loads(token))
            except json.JSONDecodeError:
                parsed.append(token)
        axes[key.strip()] = parsed
    return axes


def _apply_override(raw: dict, dotted: str, value) -> None:
    parts = dotted.split(".")
    target = raw
    for part in parts[:-1]:
        if not isinstance(target.get(part), dict):
            raise ConfigurationError(f"sweep axis {dotted!r} does not name a config field")
        target = target[part]
    if parts[-1] not in target:
        raise ConfigurationError(f"sweep axis {dotted!r} does not name a config field")
    target[parts[-1]] = value


def _sweep_points(axes: dict[str, list]) -> list[dict]:
    points = [{}]
    for key, values in axes.items():
        points = [{**point, key: value} for point in points for value in values]
    return points


def _point_name(point: dict) -> str:
    if not point:
        return "base"
    parts = [f"{key.replace('.', '_')}={value}" for key, value in point.items()]
    return "__".join(parts)


def _write_ledger_csv(path: Path, snapshot: dict) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node", "balance", "escrow_operator", "escrow_challenger"])
        for name, row in snapshot["nodes"].items():
            writer.writerow([name, row["balance"], row["escrow_operator"], row["escrow_challenger"]])
        writer.writerow(["<burned>", snapshot["burned"], "", ""])
        writer.writerow(["<total_supply>", snapshot["total_supply"], "", ""])


_SUMMARY_COLUMNS = [
    "point", "seed", "submitted", "finalized", "reverted", "pending", "skipped_slots",
    "fraud_attempted", "fraud_finalized", "fraud_caught", "probes_issued",
    "lazy_slash_events", "challenges_raised", "suppressed_events",
    "latency_p50_ms", "latency_p90_ms", "latency_max_ms", "trace_sha256",
]


def cmd_run(args: argparse.Namespace) -> int:
    manifest = RunManifest(
        config_path=Path(args.config),
        out_dir=Path(args.out),
        seed_override=args.seed,
        sweep_axes={},
    )
    try:
        manifest.sweep_axes = _parse_sweeps(args.sweep or [])
        base_raw = json.loads(manifest.config_path.read_text())
    except (OSError, json.JSONDecodeError, ConfigurationError) as exc:
        return _fail_config(str(exc))

    manifest.out_dir.mkdir(parents=True, exist_ok=True)
    summary_rows = []
    for point in _sweep_points(manifest.sweep_axes):
        raw = json.loads(json.dumps(base_raw))  # deep copy
        overrides = dict(point)
        if manifest.seed_override is not None:
            overrides["seed"] = manifest.seed_override
        try:
            for dotted, value in overrides.items():
                _apply_override(raw, dotted, value)
            config = parse_scenario(raw)
        except ConfigurationError as exc:
            return _fail_config(str(exc))
        try:
            report = run_scenario(config)
        except InvariantViolation as exc:
            print(f"invariant violation: {exc}", file=sys.stderr)
            return EXIT_INVARIANT
        name = _point_name(point)
        point_dir = manifest.out_dir / name
        point_dir.mkdir(parents=True, exist_ok=True)
        document = {"overrides": overrides, **report.to_dict()}
        (point_dir / "report.json").write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")
        _write_ledger_csv(point_dir / "ledger.csv", report.ledger)
        report.trace.write(point_dir / "trace.jsonl")
        summary_rows.append([
            name, config.seed, report.submitted, report.finalized, report.reverted,
            report.pending, report.skipped_slots, report.fraud_attempted,
            report.fraud_finalized, report.fraud_caught, report.probes_issued,
            report.lazy_slash_events, report.challenges_raised, report.suppressed_events,
            report.latency_p50_ms, report.latency_p90_ms, report.latency_max_ms,
            report.trace_sha256,
        ])
        print(
            f"[{name}] submitted={report.submitted} finalized={report.finalized} "
            f"reverted={report.reverted} pending={report.pending} "
            f"p50={report.latency_p50_ms} ms trace={report.trace_sha256[:12]}"
        )
    with open(manifest.out_dir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_SUMMARY_COLUMNS)
        writer.writerows(summary_rows)
    return EXIT_OK


# -- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynproof",
        description="Dynamic challenge-window settlement: schedules, security model, simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sched = sub.add_parser("schedule", help="print the window/threshold schedule table")
    p_sched.add_argument("--t0", type=int, default=500, help="initial window, ms")
    p_sched.add_argument("--rt", type=float, default=4, help="window growth factor (> 1)")
    p_sched.add_argument("--c0", type=int, default=100, help="initial required challengers")
    p_sched.add_argument("--rc", type=float, default=0.7, help="challenger decay factor (0, 1]")
    p_sched.add_argument("--max-step", type=int, default=10)
    p_sched.add_argument("--csv", help="also write the table as CSV")
    p_sched.set_defaults(func=cmd_schedule)

    p_sec = sub.add_parser("security", help="closed-form challenge probability plus Monte Carlo check")
    p_sec.add_argument("--params", help="JSON file with one parameter set or a list of them")
    p_sec.add_argument("--p-fraud", type=float, default=0.01)
    p_sec.add_argument("--p-detect", type=float, default=0.9)
    p_sec.add_argument("--p-window", type=float, default=1.0)
    p_sec.add_argument("--nodes", type=int, default=100)
    p_sec.add_argument("--p-node-challenge", type=float, default=0.1)
    p_sec.add_argument("--p-participation", type=float, default=1.0)
    p_sec.add_argument("--trials", type=int, default=100_000)
    p_sec.add_argument("--seed", type=int, default=0)
    p_sec.add_argument("--csv", help="write the sweep table as CSV")
    p_sec.set_defaults(func=cmd_security)

    p_run = sub.add_parser("run", help="run a scenario config (optionally swept) and emit reports")
    p_run.add_argument("config", help="scenario config JSON path")
    p_run.add_argument("--out", default=os.environ.get("DYNPROOF_OUT", "out"),
                       help="output directory (default: $DYNPROOF_OUT or ./out)")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--sweep", action="append", metavar="FIELD=V1,V2",
                       help="sweep axis, e.g. schedule.r_t=2,4 (repeatable)")
    p_run.set_defaults(func=cmd_run)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
