"""Command-line entry point.

    codeval COURSE_NAME [--config PATH] [--once] [--interval SECONDS]
            [--assignment NAME] [--dry-run]

Runs the polling daemon for one course.  ``--once`` does a single poll
cycle (for external schedulers such as cron); ``--dry-run`` evaluates and
prints reports locally without posting anything.
"""

import argparse
import dataclasses
import logging
import signal
import sys
import threading

from .config import load_config
from .daemon import make_backend, poll_once, resolve_course, run_daemon
from .sandbox import ConfigError

log = logging.getLogger(__name__)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codeval",
        description="Evaluate pending programming-assignment submissions "
                    "and post feedback comments.",
    )
    parser.add_argument("course", help="display name of the course to evaluate")
    parser.add_argument("--config", default="codeval.ini",
                        help="configuration file (default: codeval.ini)")
    parser.add_argument("--once", action="store_true",
                        help="run a single poll cycle and exit")
    parser.add_argument("--interval", type=float, default=None, metavar="SECONDS",
                        help="override the poll interval")
    parser.add_argument("--assignment", default=None, metavar="NAME",
                        help="only evaluate this assignment")
    parser.add_argument("--dry-run", action="store_true",
                        help="evaluate and print reports without posting")
    return parser


def _print_report(submission, text: str) -> None:
    print(f"--- {submission.assignment.name} / {submission.student_id} "
          f"attempt {submission.attempt} ---")
    print(text)


def _print_summary(summary) -> None:
    print(f"assignments scanned: {summary.scanned_assignments}, "
          f"evaluated: {summary.evaluated}, "
          f"skipped (already commented): {summary.skipped_already_commented}, "
          f"errors: {len(summary.errors)}")
    for subject, reason in summary.errors:
        print(f"  error: {subject}: {reason}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(levelname)s %(message)s")

    try:
        config = load_config(args.config, course=args.course)
        if args.interval is not None:
            config = dataclasses.replace(config, poll_interval_s=args.interval)
    except ConfigError as exc:
        print(f"codeval: {exc}", file=sys.stderr)
        return 2

    if config.isolation.direct_mode:
        print("WARNING: no [RUN] command configured; submissions will run "
              "DIRECTLY ON THIS HOST with no isolation.", file=sys.stderr)

    backend = make_backend(config)
    try:
        resolve_course(backend, config.course)
    except ConfigError as exc:
        print(f"codeval: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"codeval: cannot reach backend: {exc}", file=sys.stderr)
        return 1

    sink = _print_report if args.dry_run else None

    if args.once:
        summary = poll_once(config, backend, assignment_filter=args.assignment,
                            dry_run=args.dry_run, report_sink=sink)
        _print_summary(summary)
        return 0

    stop = threading.Event()

    def _request_stop(signum, frame):
        log.info("received signal %d, finishing in-flight work", signum)
        stop.set()

    signal.signal(signal.SIGINT, _request_stop)
    signal.signal(signal.SIGTERM, _request_stop)
    run_daemon(config, backend, stop_event=stop,
               assignment_filter=args.assignment, dry_run=args.dry_run,
               report_sink=sink, on_summary=_print_summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
