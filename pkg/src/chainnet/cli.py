"""Command-line front end: scenario ingestion, simulation runs, mode
comparison and artifact outputs.

Artifacts per run (written atomically at run end, byte-reproducible for a
fixed scenario + seed):

* ``events.jsonl``   - event log, one canonical JSON object per line
                       (sorted keys, compact separators, UTF-8)
* ``snapshots.csv``  - per-tick agent rows: tick, agent, tier, stock,
                       backlog, on_order, demand_seen, order_placed,
                       messages_sent
* ``metrics.json``   - MetricsReport document (sorted keys)
* ``metrics.csv``    - flat long-format rows: tier, metric, value

Exit codes: 0 success, 2 scenario parse/validation error, 3 runtime abort.
``SCM_LOG_LEVEL`` in {error, info, debug} controls stderr logging.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from chainnet.coordination import CoordinationMode
from chainnet.metrics import EmptyLog, MetricsReport, compile_report, vacuous_report
from chainnet.runtime import World
from chainnet.scenario import ParseError, ScenarioConfig, ValidationError, load_scenario

logger = logging.getLogger("chainnet")

SNAPSHOT_COLUMNS = (
    "tick", "agent", "tier", "stock", "backlog", "on_order",
    "demand_seen", "order_placed", "messages_sent",
)


@dataclass(frozen=True)
class RunOutputs:
    """Paths of the run artifacts plus the in-memory report."""

    event_log: Path
    snapshots: Path
    metrics: Path
    metrics_csv: Path
    report: MetricsReport


def event_log_bytes(events: Sequence[dict]) -> bytes:
    lines = [
        json.dumps(record, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
        for record in events
    ]
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


def snapshots_csv_bytes(snapshots) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SNAPSHOT_COLUMNS)
    for row in snapshots:
        writer.writerow([
            row.tick, row.agent, row.tier, row.stock, row.backlog, row.on_order,
            row.demand_seen, row.order_placed, row.messages_sent,
        ])
    return buffer.getvalue().encode("utf-8")


def metrics_json_bytes(report: MetricsReport) -> bytes:
    return (json.dumps(report.to_json_dict(), sort_keys=True, indent=2) + "\n").encode("utf-8")


def metrics_csv_bytes(report: MetricsReport) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(("tier", "metric", "value"))
    for tier, metric, value in report.tier_rows():
        writer.writerow((tier, metric, value))
    return buffer.getvalue().encode("utf-8")


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def simulate(config: ScenarioConfig) -> Tuple[World, MetricsReport]:
    """Run one scenario to its horizon and compile the report in memory."""
    world = World(config)
    world.run_to_horizon()
    try:
        report = compile_report(world.events, world.snapshots, config.cost_h, config.cost_b)
    except EmptyLog:
        report = vacuous_report(
            [a.id for a in config.agents],
            [tier.value for tier in dict.fromkeys(a.tier for a in config.agents)],
        )
    return world, report


def run(config: ScenarioConfig, out_dir) -> RunOutputs:
    """Execute the scenario and write the artifact files.

    A runtime failure appends a ``run_abort`` marker record, flushes the
    partial event log, and re-raises for the caller to map to exit code 3.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    world = World(config)
    try:
        world.run_to_horizon()
    except Exception as exc:
        world.events.append({
            "tick": world.clock.tick,
            "kind": "run_abort",
            "agent": None,
            "payload": {"error": repr(exc)},
        })
        _atomic_write(out / "events.jsonl", event_log_bytes(world.events))
        raise
    try:
        report = compile_report(world.events, world.snapshots, config.cost_h, config.cost_b)
    except EmptyLog:
        report = vacuous_report(
            [a.id for a in config.agents],
            [tier.value for tier in dict.fromkeys(a.tier for a in config.agents)],
        )
    outputs = RunOutputs(
        event_log=out / "events.jsonl",
        snapshots=out / "snapshots.csv",
        metrics=out / "metrics.json",
        metrics_csv=out / "metrics.csv",
        report=report,
    )
    _atomic_write(outputs.event_log, event_log_bytes(world.events))
    _atomic_write(outputs.snapshots, snapshots_csv_bytes(world.snapshots))
    _atomic_write(outputs.metrics, metrics_json_bytes(report))
    _atomic_write(outputs.metrics_csv, metrics_csv_bytes(report))
    logger.info("simulated %d ticks (%s mode), artifacts in %s",
                config.horizon, config.mode.value, out)
    return outputs


def _comparison_rows(reports: Dict[str, MetricsReport]) -> List[Tuple[str, List[str]]]:
    def fmt(value) -> str:
        if value is None:
            return "undef"
        if isinstance(value, float):
            return f"{value:.6g}"
        return str(value)

    rows: List[Tuple[str, List[str]]] = []
    modes = list(reports)
    rows.append(("fill_rate", [fmt(reports[m].fill_rate) for m in modes]))
    rows.append(("avg_inventory", [fmt(reports[m].avg_inventory) for m in modes]))
    rows.append(("avg_backlog", [fmt(reports[m].avg_backlog) for m in modes]))
    rows.append(("total_cost", [fmt(reports[m].total_cost) for m in modes]))
    rows.append(("negotiations_settled", [fmt(reports[m].negotiations["settled"]) for m in modes]))
    rows.append(("negotiations_failed", [fmt(reports[m].negotiations["failed"]) for m in modes]))
    rows.append(("messages_total", [fmt(sum(reports[m].messages_sent.values())) for m in modes]))
    tiers = sorted({tier for report in reports.values() for tier in report.bullwhip})
    for tier in tiers:
        rows.append((f"bullwhip[{tier}]", [fmt(reports[m].bullwhip.get(tier)) for m in modes]))
    return rows


def compare(config: ScenarioConfig, modes: Sequence[CoordinationMode],
            out_dir=None) -> Dict[str, MetricsReport]:
    """Run the same scenario + seed under each mode; returns reports by mode
    name (modes may repeat, later runs override equal names in the mapping
    but the table shows each run)."""
    if len(modes) < 2:
        raise ValueError("compare needs at least two modes")
    reports: Dict[str, MetricsReport] = {}
    ordered: List[Tuple[str, MetricsReport]] = []
    for i, mode in enumerate(modes):
        mode_config = config.with_mode(mode)
        label = mode.value if modes.count(mode) == 1 else f"{mode.value}#{i}"
        if out_dir is not None:
            outputs = run(mode_config, Path(out_dir) / label)
            report = outputs.report
        else:
            _, report = simulate(mode_config)
        reports[label] = report
        ordered.append((label, report))
    return dict(ordered)


def render_comparison(reports: Dict[str, MetricsReport]) -> str:
    modes = list(reports)
    rows = _comparison_rows(reports)
    name_width = max(len(name) for name, _ in rows)
    widths = [max(len(mode), max(len(values[i]) for _, values in rows))
              for i, mode in enumerate(modes)]
    header = "  ".join([" " * name_width] + [mode.rjust(widths[i]) for i, mode in enumerate(modes)])
    lines = [header]
    for name, values in rows:
        lines.append("  ".join([name.ljust(name_width)]
                               + [values[i].rjust(widths[i]) for i in range(len(modes))]))
    return "\n".join(lines)


def _configure_logging() -> None:
    level_name = os.environ.get("SCM_LOG_LEVEL", "error").lower()
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        level_name, logging.ERROR)
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chainnet",
        description="Deterministic multi-agent supply-chain simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_sim = sub.add_parser("simulate", help="run one scenario and write artifacts")
    p_sim.add_argument("scenario", help="scenario JSON file")
    p_sim.add_argument("--out", default=None, help="output directory (default: <scenario>-out)")
    p_cmp = sub.add_parser("compare", help="run the scenario under several coordination modes")
    p_cmp.add_argument("scenario", help="scenario JSON file")
    p_cmp.add_argument("--modes", required=True,
                       help="comma-separated modes: centralized,decentralized,mobile")
    p_cmp.add_argument("--out", default=None, help="output directory (one subdir per mode)")
    p_val = sub.add_parser("validate", help="validate a scenario file")
    p_val.add_argument("scenario", help="scenario JSON file")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    _configure_logging()
    args = _build_parser().parse_args(argv)
    try:
        config = load_scenario(args.scenario)
    except (ParseError, ValidationError) as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        print(f"{args.scenario}: ok ({len(config.agents)} agents, horizon {config.horizon})")
        return 0
    if args.command == "simulate":
        out_dir = args.out or f"{Path(args.scenario).stem}-out"
        try:
            outputs = run(config, out_dir)
        except Exception as exc:  # partial log already flushed
            print(f"run aborted: {exc}", file=sys.stderr)
            return 3
        print(f"wrote {outputs.event_log}, {outputs.snapshots}, {outputs.metrics}")
        return 0
    # compare
    try:
        modes = [CoordinationMode(name.strip()) for name in args.modes.split(",") if name.strip()]
    except ValueError as exc:
        print(f"invalid mode list: {exc}", file=sys.stderr)
        return 2
    if len(modes) < 2:
        print("compare needs at least two modes", file=sys.stderr)
        return 2
    try:
        reports = compare(config, modes, out_dir=args.out)
    except Exception as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return 3
    print(render_comparison(reports))
    return 0


if __name__ == "__main__":
    sys.exit(main())
