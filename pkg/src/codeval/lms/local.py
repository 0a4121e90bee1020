"""Local-directory LMS backend: the on-disk test double.

Fixture layout, stable for tests::

    root/
      manifest.json                 {"courses": [{"id": ..., "name": ...}]}
      <course_id>/
        files/                      spec files and support archives
        <assignment_name>/
          submissions/
            <student_id>/
              <attempt>/            1, 2, ...
                archive.zip
                comments.jsonl      one JSON object per comment

A comment object is ``{"attempt": int, "author": str, "text": str,
"posted_at": iso-timestamp}``.  File ids are root-relative paths, so a
backend scoped to a course can refuse ids belonging to other courses.
"""

import datetime
import json
from pathlib import Path

from ..evaluator import REPORT_MARKER
from .base import (
    AssignmentRef,
    AuthError,
    CourseRef,
    FileRef,
    LmsBackend,
    NotFound,
    SubmissionRef,
    TransportError,
)

MANIFEST_NAME = "manifest.json"
ARCHIVE_NAME = "archive.zip"
COMMENTS_NAME = "comments.jsonl"


class LocalBackend(LmsBackend):
    def __init__(self, root: str | Path, *, allowed_courses: set[str] | None = None,
                 retry_base_delay_s: float | None = None):
        self.root = Path(root)
        self.allowed_courses = allowed_courses
        if retry_base_delay_s is not None:
            self.retry_base_delay_s = retry_base_delay_s
        self._transport_failures_left = 0

    def inject_transport_failures(self, count: int) -> None:
        """Make the next ``count`` storage reads raise TransportError."""
        self._transport_failures_left = count

    def _maybe_fail(self) -> None:
        if self._transport_failures_left > 0:
            self._transport_failures_left -= 1
            raise TransportError("injected transport failure")

    def _check_scope(self, course_id: str) -> None:
        if self.allowed_courses is not None and course_id not in self.allowed_courses:
            raise AuthError(f"credentials do not grant access to course {course_id!r}")

    def list_courses(self) -> list[CourseRef]:
        manifest = self.root / MANIFEST_NAME
        if not manifest.is_file():
            raise NotFound(f"no manifest at {manifest}")
        entries = json.loads(manifest.read_text())["courses"]
        courses = [CourseRef(str(e["id"]), e["name"]) for e in entries]
        if self.allowed_courses is not None:
            courses = [c for c in courses if c.id in self.allowed_courses]
        return courses

    def _course_dir(self, course_id: str) -> Path:
        self._check_scope(course_id)
        path = self.root / course_id
        if not path.is_dir():
            raise NotFound(f"no such course: {course_id}")
        return path

    def list_course_files(self, course: CourseRef) -> list[FileRef]:
        files_dir = self._course_dir(course.id) / "files"
        if not files_dir.is_dir():
            return []
        return [FileRef(f"{course.id}/files/{p.name}", p.name)
                for p in sorted(files_dir.iterdir()) if p.is_file()]

    def _list_assignments(self, course: CourseRef) -> list[AssignmentRef]:
        course_dir = self._course_dir(course.id)
        return [AssignmentRef(f"{course.id}/{p.name}", p.name)
                for p in sorted(course_dir.iterdir())
                if p.is_dir() and p.name != "files"]

    def _fetch_file(self, file_id: str) -> bytes:
        self._maybe_fail()
        self._check_scope(file_id.split("/", 1)[0])
        path = (self.root / file_id).resolve()
        if not path.is_relative_to(self.root.resolve()):
            raise AuthError(f"file id {file_id!r} escapes the backend root")
        if not path.is_file():
            raise NotFound(f"no such file: {file_id}")
        return path.read_bytes()

    @staticmethod
    def _read_comments(path: Path) -> list[dict]:
        if not path.is_file():
            return []
        return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]

    def _has_marker_comment(self, comments: list[dict], attempt: int) -> bool:
        return any(c.get("attempt") == attempt
                   and str(c.get("text", "")).startswith(REPORT_MARKER)
                   for c in comments)

    def pending_submissions(self, assignment: AssignmentRef) -> list[SubmissionRef]:
        course_id, assignment_name = assignment.id.split("/", 1)
        submissions_dir = self._course_dir(course_id) / assignment_name / "submissions"
        if not submissions_dir.is_dir():
            return []
        pending = []
        for student_dir in sorted(submissions_dir.iterdir()):
            if not student_dir.is_dir():
                continue
            for attempt_dir in sorted(student_dir.iterdir(),
                                      key=lambda p: int(p.name) if p.name.isdigit() else 0):
                if not attempt_dir.is_dir() or not attempt_dir.name.isdigit():
                    continue
                attempt = int(attempt_dir.name)
                archive = attempt_dir / ARCHIVE_NAME
                if not archive.is_file():
                    continue
                comments = self._read_comments(attempt_dir / COMMENTS_NAME)
                if self._has_marker_comment(comments, attempt):
                    continue
                submitted = datetime.datetime.fromtimestamp(
                    archive.stat().st_mtime, tz=datetime.timezone.utc,
                ).isoformat()
                pending.append(SubmissionRef(
                    assignment=assignment,
                    student_id=student_dir.name,
                    attempt=attempt,
                    archive_file_id=(f"{assignment.id}/submissions/"
                                     f"{student_dir.name}/{attempt}/{ARCHIVE_NAME}"),
                    submitted_at=submitted,
                ))
        return pending

    def _post_comment(self, submission: SubmissionRef, text: str) -> None:
        self._maybe_fail()
        course_id, assignment_name = submission.assignment.id.split("/", 1)
        attempt_dir = (self._course_dir(course_id) / assignment_name / "submissions"
                       / submission.student_id / str(submission.attempt))
        if not attempt_dir.is_dir():
            raise NotFound(f"no such submission attempt: {submission.student_id}"
                           f"#{submission.attempt}")
        comment = {
            "attempt": submission.attempt,
            "author": "codeval",
            "text": text,
            "posted_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        }
        with open(attempt_dir / COMMENTS_NAME, "a") as fh:
            fh.write(json.dumps(comment) + "\n")
