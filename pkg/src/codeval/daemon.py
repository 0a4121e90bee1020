"""Polling loop: discover assignments, evaluate pending submissions, post
feedback comments.

The LMS comment is the only state store: a submission attempt is pending
until a marker comment lands on it, so crashing before the post simply
re-evaluates next cycle, while the marker makes re-posting impossible
(at-least-once evaluation, at-most-once visible comment).

Instructor-side problems (unparseable spec, missing support archive) are
recorded in the poll summary and logged; they are never posted where a
student would see them.
"""

import datetime
import logging
import subprocess
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Callable

from .config import Config
from .evaluator import REPORT_MARKER, evaluate, render_report
from .lms import CanvasBackend, LmsBackend, LocalBackend
from .lms.base import AssignmentRef, CourseRef, LmsError, SubmissionRef
from .sandbox import (
    ConfigError,
    ExtractionError,
    LimitError,
    SecurityError,
    create_workspace,
    destroy_workspace,
)
from .specfile import (
    ParseError,
    SpecFile,
    SUPPORTED_RUN_STRATEGIES,
    parse_spec,
)

log = logging.getLogger(__name__)

PRECOMMAND_TIMEOUT_S = 300.0

ReportSink = Callable[[SubmissionRef, str], None]


@dataclass
class PollSummary:
    """Outcome of one poll cycle; every pending submission encountered is
    accounted for in evaluated + skipped_already_commented + errors."""

    scanned_assignments: int = 0
    evaluated: int = 0
    skipped_already_commented: int = 0
    errors: list[tuple[str, str]] = field(default_factory=list)
    started_at: str = ""
    finished_at: str = ""


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def make_backend(config: Config) -> LmsBackend:
    """Backend for the configured server; a ``local:<path>`` url selects
    the directory backend (fixtures, dry runs)."""
    url = config.server.base_url
    if url.startswith("local:"):
        return LocalBackend(url[len("local:"):])
    return CanvasBackend(config.server)


def resolve_course(backend: LmsBackend, name: str) -> CourseRef:
    """Course ref for a display name; ambiguity is a startup error."""
    matches = [c for c in backend.list_courses() if c.name == name]
    if not matches:
        raise ConfigError(f"course {name!r} not found")
    if len(matches) > 1:
        ids = ", ".join(c.id for c in matches)
        raise ConfigError(f"course name {name!r} is ambiguous (ids: {ids})")
    return matches[0]


def _submission_label(submission: SubmissionRef) -> str:
    return (f"{submission.assignment.name}/{submission.student_id}"
            f"#{submission.attempt}")


def _rejection_report(problem: Exception) -> str:
    return (
        f"{REPORT_MARKER}\n\n"
        f"Your submission could not be evaluated:\n  {problem}\n"
        "Please upload a valid zip archive of your code and resubmit.\n"
    )


def _run_precommand(precommand: str) -> tuple[bool, str]:
    try:
        proc = subprocess.run(["/bin/sh", "-c", precommand],
                              capture_output=True, timeout=PRECOMMAND_TIMEOUT_S)
    except subprocess.TimeoutExpired:
        return False, "precommand timed out"
    except OSError as exc:
        return False, str(exc)
    if proc.returncode != 0:
        detail = proc.stderr.decode("utf-8", errors="replace").strip()
        return False, f"exit code {proc.returncode}: {detail}"
    return True, ""


def _load_assignment_spec(backend: LmsBackend, course: CourseRef,
                          assignment: AssignmentRef) -> tuple[SpecFile, list[bytes]]:
    """Fetch and parse the spec plus its support archives.

    Raises ParseError/LmsError/ConfigError for instructor-side problems;
    the caller records these without posting anything student-facing.
    """
    spec_bytes = backend.fetch_file(assignment.spec_file_id)
    spec = parse_spec(spec_bytes.decode("utf-8"))
    if spec.run_strategy not in SUPPORTED_RUN_STRATEGIES:
        raise ConfigError(f"unsupported run strategy {spec.run_strategy!r}")
    supports = []
    for name in spec.support_archives:
        ref = backend.find_course_file(course, name)
        if ref is None:
            raise ConfigError(f"support archive {name!r} not found in course files")
        supports.append(backend.fetch_file(ref.id))
    return spec, supports


def _process_submission(backend: LmsBackend, config: Config, spec: SpecFile,
                        supports: list[bytes], submission: SubmissionRef,
                        dry_run: bool, report_sink: ReportSink | None) -> tuple[str, str]:
    try:
        archive = backend.fetch_file(submission.archive_file_id)
    except LmsError as exc:
        return "error", f"archive fetch failed: {exc}"

    if config.isolation.precommand:
        ok, detail = _run_precommand(config.isolation.precommand)
        if not ok:
            return "error", f"precommand failed: {detail}"

    try:
        workspace = create_workspace(archive, supports)
    except (ExtractionError, SecurityError, LimitError) as exc:
        # Student-fixable problem: post a marker comment so the attempt
        # leaves the pending set instead of being retried forever.
        text = _rejection_report(exc)
        if report_sink:
            report_sink(submission, text)
        if not dry_run:
            try:
                backend.post_evaluation(submission, text)
            except LmsError as post_exc:
                return "error", f"{exc} (posting the rejection failed: {post_exc})"
        return "error", str(exc)

    try:
        report = evaluate(workspace, spec, config.isolation)
        text = render_report(report)
    except Exception as exc:  # keep the daemon alive whatever evaluation does
        return "error", f"evaluation failed: {exc}"
    finally:
        destroy_workspace(workspace)

    if report_sink:
        report_sink(submission, text)
    if dry_run:
        return "evaluated", ""

    try:
        # Re-check pending right before posting so a comment that appeared
        # meanwhile (another daemon, a manual run) is never duplicated.
        still_pending = any(
            s.student_id == submission.student_id and s.attempt == submission.attempt
            for s in backend.pending_submissions(submission.assignment)
        )
        if not still_pending:
            return "skipped", ""
        backend.post_evaluation(submission, text)
    except LmsError as exc:
        return "error", f"posting failed: {exc}"
    return "evaluated", ""


def poll_once(config: Config, backend: LmsBackend | None = None, *,
              assignment_filter: str | None = None, dry_run: bool = False,
              report_sink: ReportSink | None = None,
              stop_event: threading.Event | None = None) -> PollSummary:
    """One polling pass over every discovered assignment.

    Never raises for backend or submission problems; everything lands in
    the summary.  At most ``config.parallelism`` submissions evaluate
    concurrently.
    """
    backend = backend if backend is not None else make_backend(config)
    summary = PollSummary(started_at=_now())

    try:
        course = resolve_course(backend, config.course)
        assignments = backend.discover_assignments(course)
    except (LmsError, ConfigError) as exc:
        summary.errors.append(("course scan", str(exc)))
        summary.finished_at = _now()
        return summary

    summary.scanned_assignments = len(assignments)
    for assignment in assignments:
        if assignment_filter is not None and assignment.name != assignment_filter:
            continue
        if stop_event is not None and stop_event.is_set():
            break
        try:
            spec, supports = _load_assignment_spec(backend, course, assignment)
            pending = backend.pending_submissions(assignment)
        except (ParseError, LmsError, ConfigError, UnicodeDecodeError) as exc:
            summary.errors.append((f"assignment {assignment.name}", str(exc)))
            continue

        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            futures = {}
            for submission in pending:
                if stop_event is not None and stop_event.is_set():
                    break
                future = pool.submit(_process_submission, backend, config, spec,
                                     supports, submission, dry_run, report_sink)
                futures[future] = submission
            for future in as_completed(futures):
                kind, detail = future.result()
                if kind == "evaluated":
                    summary.evaluated += 1
                elif kind == "skipped":
                    summary.skipped_already_commented += 1
                else:
                    summary.errors.append((_submission_label(futures[future]), detail))

    summary.finished_at = _now()
    return summary


def run_daemon(config: Config, backend: LmsBackend | None = None, *,
               stop_event: threading.Event | None = None,
               max_cycles: int | None = None,
               assignment_filter: str | None = None, dry_run: bool = False,
               report_sink: ReportSink | None = None,
               on_summary: Callable[[PollSummary], None] | None = None) -> int:
    """Run poll cycles at the configured cadence until stopped.

    Cycles never overlap: a cycle that outruns the interval is followed
    immediately by the next one.  Setting the stop event finishes the
    in-flight submissions and exits; returns the number of cycles run.
    """
    stop = stop_event if stop_event is not None else threading.Event()
    backend = backend if backend is not None else make_backend(config)
    cycles = 0
    while not stop.is_set():
        cycle_start = time.monotonic()
        summary = poll_once(config, backend, stop_event=stop,
                            assignment_filter=assignment_filter,
                            dry_run=dry_run, report_sink=report_sink)
        cycles += 1
        log.info(
            "cycle %d: %d assignment(s), %d evaluated, %d skipped, %d error(s)",
            cycles, summary.scanned_assignments, summary.evaluated,
            summary.skipped_already_commented, len(summary.errors),
        )
        for subject, reason in summary.errors:
            log.warning("%s: %s", subject, reason)
        if on_summary is not None:
            on_summary(summary)
        if max_cycles is not None and cycles >= max_cycles:
            break
        elapsed = time.monotonic() - cycle_start
        stop.wait(max(0.0, config.poll_interval_s - elapsed))
    return cycles
