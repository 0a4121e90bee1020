"""LMS integration: assignment discovery, submission download, comment
posting."""

from .base import (
    AssignmentRef,
    AuthError,
    BackendCredentials,
    CourseRef,
    FileRef,
    LmsBackend,
    LmsError,
    NotFound,
    SPEC_FILE_SUFFIX,
    SubmissionRef,
    TransportError,
)
from .canvas import CanvasBackend
from .local import LocalBackend

__all__ = [
    "AssignmentRef",
    "AuthError",
    "BackendCredentials",
    "CanvasBackend",
    "CourseRef",
    "FileRef",
    "LmsBackend",
    "LmsError",
    "LocalBackend",
    "NotFound",
    "SPEC_FILE_SUFFIX",
    "SubmissionRef",
    "TransportError",
]
