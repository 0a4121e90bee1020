"""LMS backend contract.

Two implementations exist: a Canvas-compatible REST client and a
local-directory backend used as the test double.  Both expose the same
operations and must behave identically for any fixture scenario.

An assignment is a CodEval assignment when the course files area holds a
file named ``<assignment name>.codeval``.  A submission attempt is pending
while it has an uploaded archive and no comment starting with the report
marker for that attempt; posting the evaluation comment is what removes it
from the pending set.
"""

import abc
import time
from dataclasses import dataclass, field

from ..evaluator import REPORT_MARKER

SPEC_FILE_SUFFIX = ".codeval"

RETRY_ATTEMPTS = 3
RETRY_BASE_DELAY_S = 1.0


class LmsError(Exception):
    pass


class AuthError(LmsError):
    """The credentials do not grant access."""


class NotFound(LmsError):
    """The referenced object does not exist."""


class TransportError(LmsError):
    """Transient network-level failure; safe to retry."""


@dataclass(frozen=True)
class CourseRef:
    id: str
    name: str


@dataclass(frozen=True)
class AssignmentRef:
    id: str
    name: str
    spec_file_id: str | None = None


@dataclass(frozen=True)
class FileRef:
    id: str
    name: str


@dataclass(frozen=True)
class SubmissionRef:
    """One student submission attempt; (assignment, student_id, attempt)
    is unique."""

    assignment: AssignmentRef
    student_id: str
    attempt: int
    archive_file_id: str
    submitted_at: str


@dataclass(frozen=True)
class BackendCredentials:
    base_url: str
    token: str = field(repr=False)  # must never reach logs or reports


class LmsBackend(abc.ABC):
    """Operations the daemon needs from an LMS."""

    retry_attempts = RETRY_ATTEMPTS
    retry_base_delay_s = RETRY_BASE_DELAY_S

    @abc.abstractmethod
    def list_courses(self) -> list[CourseRef]: ...

    @abc.abstractmethod
    def list_course_files(self, course: CourseRef) -> list[FileRef]: ...

    @abc.abstractmethod
    def _list_assignments(self, course: CourseRef) -> list[AssignmentRef]: ...

    @abc.abstractmethod
    def _fetch_file(self, file_id: str) -> bytes: ...

    @abc.abstractmethod
    def pending_submissions(self, assignment: AssignmentRef) -> list[SubmissionRef]: ...

    @abc.abstractmethod
    def _post_comment(self, submission: SubmissionRef, text: str) -> None: ...

    def discover_assignments(self, course: CourseRef) -> list[AssignmentRef]:
        """Assignments that have a matching spec file in the course files
        area, paired by exact name."""
        spec_files = {f.name: f.id for f in self.list_course_files(course)}
        discovered = []
        for assignment in self._list_assignments(course):
            file_id = spec_files.get(assignment.name + SPEC_FILE_SUFFIX)
            if file_id is not None:
                discovered.append(
                    AssignmentRef(assignment.id, assignment.name, spec_file_id=file_id)
                )
        return discovered

    def find_course_file(self, course: CourseRef, name: str) -> FileRef | None:
        for ref in self.list_course_files(course):
            if ref.name == name:
                return ref
        return None

    def fetch_file(self, file_id: str) -> bytes:
        """Complete file bytes; transport failures retried with exponential
        backoff, other errors raised immediately."""
        delay = self.retry_base_delay_s
        for attempt in range(1, self.retry_attempts + 1):
            try:
                return self._fetch_file(file_id)
            except TransportError:
                if attempt == self.retry_attempts:
                    raise
                time.sleep(delay)
                delay *= 2
        raise AssertionError("unreachable")

    def post_evaluation(self, submission: SubmissionRef, report_text: str) -> None:
        """Attach the report as a comment on the submission attempt.

        Rejects text that does not start with the report marker before any
        network traffic: an unmarked comment would leave the submission
        pending forever.
        """
        if not report_text.startswith(REPORT_MARKER):
            raise ValueError("report text must begin with the report marker")
        self._post_comment(submission, report_text)
