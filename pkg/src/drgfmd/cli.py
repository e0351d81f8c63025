"""
Command-line front end.

    drgfmd run CONFIG [--seed N] [--trials N] [--out DIR]
    drgfmd verify
    drgfmd suite ID [--out DIR] [--seed N] [--trials N]

Exit status: 0 success, 1 verification failure, 2 configuration error,
3 runtime abort.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import config as cfgmod
from .export import write_csv, write_svg
from .lab import SUITES, run_experiment, run_paper_suite


EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser():
    p = _Parser(prog="drgfmd", description="Distributed gradient-free mirror descent")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="run one configured experiment")
    r.add_argument("config")
    sub.add_parser("verify", help="run the property suite")
    s = sub.add_parser("suite", help="run a reproduction suite")
    s.add_argument("suite_id")
    for q in (r, s):
        q.add_argument("--out", default=None)
        q.add_argument("--seed", type=int, default=None)
        q.add_argument("--trials", type=int, default=None)
    return p


def cmd_run(path, out=None, seed=None, trials=None):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = cfgmod.parse_text(fh.read())
        if seed is not None:
            raw["trials.base_seed"] = seed
        if trials is not None:
            raw["trials.count"] = trials
        doc = cfgmod.normalize(raw)
        experiment = cfgmod.build(doc)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    summary = run_experiment(experiment, label="run")
    if summary.aborted:
        for msg in summary.aborted:
            print(f"run aborted: {msg}", file=sys.stderr)
        return EXIT_ABORT
    out_dir = Path(out or doc["output.directory"])
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(out_dir / "run.csv", summary, "run", experiment.fingerprint)
    write_svg(out_dir / "run.svg", summary, title=f"run {experiment.fingerprint}")
    print(f"wrote {out_dir / 'run.csv'} and {out_dir / 'run.svg'}")
    return EXIT_OK


def cmd_verify():
    from .verify import run_all, format_report
    reports = run_all()
    sys.stdout.write(format_report(reports))
    failed = [r.name for r in reports if r.status == "fail"]
    if failed:
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_suite(suite_id, out=None, seed=None, trials=None):
    if suite_id not in SUITES:
        print(f"unknown suite {suite_id!r}; choose from {', '.join(SUITES)}",
              file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_paper_suite(suite_id, out or "out", n_trials=trials,
                                 base_seed=seed)
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    aborted = [m for s in result.summaries for m in s.aborted]
    if aborted:
        for msg in aborted:
            print(f"run aborted: {msg}", file=sys.stderr)
        return EXIT_ABORT
    for path in result.files:
        print(f"wrote {path}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, args.out, args.seed, args.trials)
    if args.command == "verify":
        return cmd_verify()
    return cmd_suite(args.suite_id, args.out, args.seed, args.trials)


if __name__ == "__main__":
    sys.exit(main())
