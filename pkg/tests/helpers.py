"""Shared test fixtures: zip builders, sample programs, local-backend trees."""

import io
import json
import zipfile
from pathlib import Path

# The spec-file example every end-to-end scenario is built around: compile
# step, two visible tests (greeting and usage), one hidden test.
HELLO_SPEC_TEXT = """\
RUN evaluate.sh
C javac edu/sjsu/CS001/Hello.java

T java edu.sjsu.CS001.Hello ben
X 0
O Hello ben

T java edu.sjsu.CS001.Hello
X 1
O USAGE: edu.sjsu.CS001.Hello name

HT java edu.sjsu.CS001.Hello "long name here!"
X 0
O Hello long name here!
"""

# Same shape, runnable without a JDK: bash stands in for javac/java.
GREETER_SPEC_TEXT = """\
RUN evaluate.sh
C bash -n greet.sh

T bash greet.sh ben
X 0
O Hello ben

T bash greet.sh
X 1
O USAGE: greet.sh name

HT bash greet.sh "long name here!"
X 0
O Hello long name here!
"""

# Correct solution: usage + exit 1 without arguments, greets by name otherwise.
GREETER_OK = b"""#!/bin/bash
if [ $# -lt 1 ]; then
  echo "USAGE: greet.sh name"
  exit 1
fi
echo "Hello $*"
"""

# The classic mistake: prints a fixed string and ignores its arguments.
GREETER_HELLO_WORLD = b"""#!/bin/bash
echo "hello world"
"""

# Handles the usage case but hard-codes the name, so only the hidden test fails.
GREETER_ALWAYS_BEN = b"""#!/bin/bash
if [ $# -lt 1 ]; then
  echo "USAGE: greet.sh name"
  exit 1
fi
echo "Hello ben"
"""


def make_zip(files: dict[str, bytes | str]) -> bytes:
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        for name, data in files.items():
            zf.writestr(name, data)
    return buf.getvalue()


def raw_zip(entries: list[tuple[str, bytes]]) -> bytes:
    """Zip builder that keeps entry names verbatim (for hostile archives)."""
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        for name, data in entries:
            zf.writestr(zipfile.ZipInfo(name), data)
    return buf.getvalue()


def build_course_tree(root: Path, *, course_id: str = "c1",
                      course_name: str = "CS001",
                      specs: dict[str, str] | None = None,
                      extra_assignments: tuple[str, ...] = (),
                      files: dict[str, bytes] | None = None) -> Path:
    """Create (or extend) a local-backend fixture tree."""
    root = Path(root)
    manifest_path = root / "manifest.json"
    manifest = {"courses": []}
    if manifest_path.is_file():
        manifest = json.loads(manifest_path.read_text())
    if not any(c["id"] == course_id for c in manifest["courses"]):
        manifest["courses"].append({"id": course_id, "name": course_name})
    root.mkdir(parents=True, exist_ok=True)
    manifest_path.write_text(json.dumps(manifest))

    course_dir = root / course_id
    files_dir = course_dir / "files"
    files_dir.mkdir(parents=True, exist_ok=True)
    for name, spec_text in (specs or {}).items():
        (files_dir / f"{name}.codeval").write_text(spec_text)
        (course_dir / name / "submissions").mkdir(parents=True, exist_ok=True)
    for name in extra_assignments:
        (course_dir / name / "submissions").mkdir(parents=True, exist_ok=True)
    for name, data in (files or {}).items():
        (files_dir / name).write_bytes(data)
    return root


def add_submission(root: Path, course_id: str, assignment: str, student: str,
                   attempt: int, archive: bytes) -> Path:
    attempt_dir = Path(root) / course_id / assignment / "submissions" / student / str(attempt)
    attempt_dir.mkdir(parents=True, exist_ok=True)
    (attempt_dir / "archive.zip").write_bytes(archive)
    return attempt_dir


def add_comment(root: Path, course_id: str, assignment: str, student: str,
                attempt: int, text: str, author: str = "student") -> None:
    attempt_dir = Path(root) / course_id / assignment / "submissions" / student / str(attempt)
    attempt_dir.mkdir(parents=True, exist_ok=True)
    comment = {"attempt": attempt, "author": author, "text": text,
               "posted_at": "2026-01-01T00:00:00+00:00"}
    with open(attempt_dir / "comments.jsonl", "a") as fh:
        fh.write(json.dumps(comment) + "\n")


def read_comments(root: Path, course_id: str, assignment: str, student: str,
                  attempt: int) -> list[dict]:
    path = (Path(root) / course_id / assignment / "submissions" / student
            / str(attempt) / "comments.jsonl")
    if not path.is_file():
        return []
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
