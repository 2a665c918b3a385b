"""Command-line entry point: ``phcclab run | sweep | list-scenarios``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
The default output directory is ``$PHCCLAB_OUT`` or ``./results``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .errors import ConfigError, PhccLabError
from .experiment import emit_outputs, run_experiment, run_sweep
from .scenario import SweepSpec, list_scenarios, parse_param_arg, parse_scenario

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2
OUT_ENV = "PHCCLAB_OUT"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def default_out() -> Path:
    return Path(os.environ.get(OUT_ENV, "results"))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="phcclab", description="Dumbbell congestion-control experiments.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("--scenario", required=True, help="scenario file or canned name")
    run.add_argument("--seed", type=int)
    run.add_argument("--duration", type=float, help="override duration_s")
    run.add_argument("--out", type=Path, help="output directory")
    run.add_argument("--force", action="store_true", help="overwrite existing results")
    run.add_argument("--trace", action="store_true", help="record an event trace digest")
    run.add_argument("--debug", action="store_true", help="check sender invariants on every ACK")

    sw = sub.add_parser("sweep", help="run a scenario once per parameter value")
    sw.add_argument("--scenario", required=True)
    sw.add_argument("--param", help="name=v1,v2,... (defaults to the scenario's sweep key)")
    sw.add_argument("--seed", type=int)
    sw.add_argument("--duration", type=float)
    sw.add_argument("--out", type=Path)
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--force", action="store_true")

    sub.add_parser("list-scenarios", help="list the bundled scenarios")
    return p


def _load(args):
    cfg = parse_scenario(args.scenario)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.duration is not None:
        changes["duration_s"] = args.duration
    return cfg.with_overrides(**changes) if changes else cfg


def _print_report(report, out=None):
    out = out or sys.stdout
    print(f"{report.name}: seed={report.seed} duration={report.duration_s:g}s "
          f"config={report.config_hash}", file=out)
    for f in report.flows:
        print(f"  flow {f.flow_id} {f.cc:<6} {f.throughput_bps / 1e6:9.3f} Mbps "
              f"retx={f.retransmits} timeouts={f.timeouts}", file=out)
    print(f"  utilization={report.utilization:.4f} fairness={report.jain_fi:.5f} "
          f"avg_queue={report.avg_queue_pkts:.1f} pkts drops={report.queue_drops}", file=out)


def cmd_run(args) -> int:
    cfg = _load(args)
    out = args.out or default_out() / cfg.name
    if not args.force and (out / "summary.json").exists():
        print(f"phcclab: {out} already holds results (use --force)", file=sys.stderr)
        return EXIT_USAGE
    result = run_experiment(cfg, trace=args.trace, debug=args.debug)
    emit_outputs(result, out, interval=cfg.sample_interval_s, force=True, config=cfg)
    _print_report(result.report)
    print(f"results written to {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if args.param:
        param, values = parse_param_arg(args.param)
    elif cfg.sweep is not None:
        param, values = cfg.sweep.param, cfg.sweep.values
    else:
        raise ConfigError("no --param given and the scenario has no sweep key")
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    out = args.out or default_out() / f"{cfg.name}-sweep"
    if not args.force and (out / "sweep.csv").exists():
        print(f"phcclab: {out} already holds results (use --force)", file=sys.stderr)
        return EXIT_USAGE
    outcomes = run_sweep(SweepSpec(cfg, param, tuple(values)), out, jobs=args.jobs, force=True)
    failed = 0
    for o in outcomes:
        if o.report is None:
            failed += 1
            print(f"{param}={o.value}: FAILED {o.error}")
        else:
            r = o.report
            print(f"{param}={o.value}: utilization={r.utilization:.4f} "
                  f"fairness={r.jain_fi:.5f} avg_queue={r.avg_queue_pkts:.1f}")
    print(f"results written to {out}")
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_list(args) -> int:
    for name, desc in list_scenarios():
        print(f"{name:<24} {desc}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "sweep": cmd_sweep, "list-scenarios": cmd_list}[args.command]
    try:
        return handler(args)
    except (ConfigError, FileExistsError) as exc:
        print(f"phcclab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"phcclab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PhccLabError as exc:
        print(f"phcclab: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
