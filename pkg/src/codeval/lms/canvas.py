"""Canvas-compatible REST backend.

Token bearer authentication; list endpoints are paginated and followed via
``Link: rel="next"`` headers until exhausted.  File downloads go through
the file metadata endpoint, which supplies the download URL.

Composite ids keep the course context with each ref: an assignment id is
``<course_id>/<assignment_id>``; file ids are Canvas file ids.
"""

import requests

from .base import (
    AssignmentRef,
    AuthError,
    BackendCredentials,
    CourseRef,
    FileRef,
    LmsBackend,
    LmsError,
    NotFound,
    SubmissionRef,
    TransportError,
)


class CanvasBackend(LmsBackend):
    def __init__(self, credentials: BackendCredentials, *,
                 per_page: int = 100, timeout_s: float = 30.0,
                 retry_base_delay_s: float | None = None):
        self._credentials = credentials
        self._base = credentials.base_url.rstrip("/")
        self._per_page = per_page
        self._timeout_s = timeout_s
        if retry_base_delay_s is not None:
            self.retry_base_delay_s = retry_base_delay_s
        self._session = requests.Session()
        self._session.headers["Authorization"] = f"Bearer {credentials.token}"

    def __repr__(self) -> str:  # token stays out of logs
        return f"CanvasBackend(base_url={self._base!r})"

    def _request(self, method: str, url: str, **kwargs) -> requests.Response:
        try:
            response = self._session.request(method, url,
                                             timeout=self._timeout_s, **kwargs)
        except requests.RequestException as exc:
            raise TransportError(f"{method} {url}: {exc}") from None
        if response.status_code in (401, 403):
            raise AuthError(f"{method} {url}: HTTP {response.status_code}")
        if response.status_code == 404:
            raise NotFound(f"{method} {url}: HTTP 404")
        if response.status_code >= 500:
            raise TransportError(f"{method} {url}: HTTP {response.status_code}")
        if response.status_code >= 400:
            raise LmsError(f"{method} {url}: HTTP {response.status_code}")
        return response

    def _get_paginated(self, path: str, params: dict | None = None) -> list:
        url = f"{self._base}{path}"
        params = {"per_page": self._per_page, **(params or {})}
        items: list = []
        while url:
            response = self._request("GET", url, params=params)
            params = None  # the next-link carries its own query string
            items.extend(response.json())
            next_link = response.links.get("next")
            url = next_link["url"] if next_link else None
        return items

    def list_courses(self) -> list[CourseRef]:
        return [CourseRef(str(c["id"]), c.get("name", ""))
                for c in self._get_paginated("/api/v1/courses")]

    def list_course_files(self, course: CourseRef) -> list[FileRef]:
        files = self._get_paginated(f"/api/v1/courses/{course.id}/files")
        return [FileRef(str(f["id"]), f.get("display_name") or f.get("filename", ""))
                for f in files]

    def _list_assignments(self, course: CourseRef) -> list[AssignmentRef]:
        assignments = self._get_paginated(f"/api/v1/courses/{course.id}/assignments")
        return [AssignmentRef(f"{course.id}/{a['id']}", a.get("name", ""))
                for a in assignments]

    def _fetch_file(self, file_id: str) -> bytes:
        meta = self._request("GET", f"{self._base}/api/v1/files/{file_id}").json()
        url = meta.get("url")
        if not url:
            raise NotFound(f"file {file_id} has no download URL")
        return self._request("GET", url).content

    def pending_submissions(self, assignment: AssignmentRef) -> list[SubmissionRef]:
        course_id, assignment_id = assignment.id.split("/", 1)
        submissions = self._get_paginated(
            f"/api/v1/courses/{course_id}/assignments/{assignment_id}/submissions",
            params={"include[]": ["submission_history", "submission_comments"]},
        )
        from ..evaluator import REPORT_MARKER

        pending = []
        for submission in submissions:
            student_id = str(submission.get("user_id", ""))
            comments = submission.get("submission_comments") or []
            commented_attempts = {
                c.get("attempt") for c in comments
                if str(c.get("comment", "")).startswith(REPORT_MARKER)
            }
            for entry in submission.get("submission_history") or []:
                attempt = entry.get("attempt")
                attachments = entry.get("attachments") or []
                if not attempt or not attachments:
                    continue
                if attempt in commented_attempts:
                    continue
                pending.append(SubmissionRef(
                    assignment=assignment,
                    student_id=student_id,
                    attempt=int(attempt),
                    archive_file_id=str(attachments[0]["id"]),
                    submitted_at=entry.get("submitted_at") or "",
                ))
        pending.sort(key=lambda s: (s.student_id, s.attempt))
        return pending

    def _post_comment(self, submission: SubmissionRef, text: str) -> None:
        course_id, assignment_id = submission.assignment.id.split("/", 1)
        self._request(
            "PUT",
            f"{self._base}/api/v1/courses/{course_id}/assignments/"
            f"{assignment_id}/submissions/{submission.student_id}",
            data={
                "comment[text_comment]": text,
                "comment[attempt]": submission.attempt,
            },
        )
