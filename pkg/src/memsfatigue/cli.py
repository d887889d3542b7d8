"""Command-line entry point: ``memsfatigue {validate,generate-population,run,report}``.

Exit codes:
    0  success
    1  test condition violates the envelope
    2  usage error
    3  config file could not be parsed
    4  campaign aborted on a detected failure
    5  campaign cancelled (SIGINT)
    6  rig fault
    7  file I/O error
    8  record log unusable for a report (corrupt, empty, mismatched populations)
"""

from __future__ import annotations

import argparse
import logging
import signal
import sys
from dataclasses import replace
from pathlib import Path

from .campaign import AbortKind, Campaign, Status
from .config import CampaignConfig, ConfigError, dump_population, load_config
from .measurement import Thresholds
from .plan import validate_condition
from .records import JsonlWriter, LogFormatError, read_records
from .report import ReportFormat, emit_report, write_report
from .rig import RigFault, SimulatedRig
from .stats import PopulationMismatchError, compare, split_stages

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_FAILURE = 4
EXIT_CANCELLED = 5
EXIT_RIG_FAULT = 6
EXIT_IO = 7
EXIT_LOG = 8

log = logging.getLogger("memsfatigue")


def _load(args) -> CampaignConfig:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None and cfg.population is not None:
        cfg.population = replace(cfg.population, seed=args.seed)
    if getattr(args, "out_dir", None):
        cfg.out_dir = Path(args.out_dir)
    if getattr(args, "time_scale", None) is not None:
        cfg.time_scale = args.time_scale
    if getattr(args, "abort_on_failure", False):
        cfg.abort_on_failure = True
    return cfg


def cmd_validate(args) -> int:
    cfg = _load(args)
    violations = validate_condition(cfg.condition)
    for v in violations:
        print(v)
    if violations:
        return EXIT_INVALID
    print("valid")
    return EXIT_OK


def cmd_generate_population(args) -> int:
    cfg = _load(args)
    specimens = cfg.build_specimens()
    text = dump_population(specimens)
    if args.output == "-":
        sys.stdout.write(text)
        return EXIT_OK
    path = Path(args.output) if args.output else cfg.out_dir / "population.yaml"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    print(f"wrote {len(specimens)} specimens to {path}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load(args)
    violations = validate_condition(cfg.condition)
    if violations:
        for v in violations:
            print(v, file=sys.stderr)
        return EXIT_INVALID
    specimens = cfg.build_specimens()
    rig = SimulatedRig(capacity=cfg.rig_capacity)
    with JsonlWriter(cfg.record_log_path) as records, JsonlWriter(cfg.event_log_path) as events:
        campaign = Campaign(
            cfg.schedule(),
            rig,
            specimens,
            cfg.options(),
            on_record=lambda r: records.append(r.to_dict()),
            on_event=lambda e: events.append(e.to_dict()),
        )
        previous = signal.signal(signal.SIGINT, lambda signum, frame: campaign.cancel())
        try:
            state = campaign.run()
        except RigFault as exc:
            print(f"rig fault: {exc}", file=sys.stderr)
            return EXIT_RIG_FAULT
        finally:
            signal.signal(signal.SIGINT, previous)
    p = campaign.progress()
    print(
        f"{state.status.value}: {p.elapsed_cycles} of {p.planned_cycles} cycles, "
        f"{p.elapsed_hours:.2f} h simulated, {len(state.records)} records -> {cfg.record_log_path}"
    )
    if state.status is Status.ABORTED:
        print(f"aborted: {state.abort_reason}", file=sys.stderr)
        return EXIT_CANCELLED if state.abort_kind is AbortKind.CANCELLED else EXIT_FAILURE
    if state.failed:
        print("failure detected (abort_on_failure off): see event log", file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    thresholds = load_config(args.config).thresholds if args.config else Thresholds()
    records = read_records(args.log)
    before, after = split_stages(records)
    report = compare(before, after, thresholds, metadata={"record_log": str(args.log), "records": len(records)})
    out_dir = Path(args.out_dir) if args.out_dir else Path(args.log).parent / "report"
    paths = write_report(report, out_dir)
    sys.stdout.write(emit_report(report, ReportFormat.TEXT))
    print(f"wrote {len(paths)} files to {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="memsfatigue", description="MEMS vibration fatigue test bench")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", default="reference", help="config file, or 'reference' (bundled)")

    p = sub.add_parser("validate", help="check the test condition against the envelope")
    add_config(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("generate-population", help="write the specimen population file")
    add_config(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")
    p.add_argument("-o", "--output", help="output file ('-' for stdout); default <out-dir>/population.yaml")
    p.set_defaults(func=cmd_generate_population)

    p = sub.add_parser("run", help="run a campaign on the simulated rig")
    add_config(p)
    p.add_argument("--out-dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--time-scale", type=float, help="simulated seconds per wall second (0 = unthrottled)")
    p.add_argument("--abort-on-failure", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="compare before/after populations from a record log")
    p.add_argument("log", help="record log (JSON lines) written by 'run'")
    p.add_argument("--config", help="take thresholds from this config")
    p.add_argument("--out-dir", help="default: <log dir>/report")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LogFormatError, PopulationMismatchError) as exc:
        print(f"cannot report: {exc}", file=sys.stderr)
        return EXIT_LOG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
