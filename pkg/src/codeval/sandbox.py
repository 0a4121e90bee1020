"""Isolated workspaces for untrusted submission code.

A workspace is a throwaway directory holding the extracted submission plus
instructor support files.  Commands run against it through an operator
configurable isolation template (``SUBMISSIONS`` and ``EVALUATE``
placeholders, e.g. a ``docker run`` line) or directly on the host when
``direct_mode`` is set.  The built-in default template wraps the command in
a private mount namespace with the whole filesystem read-only except the
workspace; see :mod:`codeval.isolate`.
"""

import io
import logging
import os
import shlex
import shutil
import signal
import subprocess
import sys
import tempfile
import time
import zipfile
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath

log = logging.getLogger(__name__)

PLACEHOLDER_SUBMISSIONS = "SUBMISSIONS"
PLACEHOLDER_EVALUATE = "EVALUATE"

# Grace between SIGTERM and SIGKILL when tearing down a timed-out process
# tree, and therefore the upper slack on ExecResult.wall_time_s.
KILL_GRACE_S = 2.0

DEFAULT_SIZE_CAP = 256 * 1024 * 1024
OUTPUT_CAP = 10 * 1024 * 1024

# Read-only-filesystem isolation via mount namespaces; needs no container
# runtime.  Production deployments typically replace this with a docker
# template, e.g.:
#   docker run -i -v SUBMISSIONS:/submissions IMAGE bash -c "cd /submissions; EVALUATE"
DEFAULT_ISOLATION_TEMPLATE = (
    f"{shlex.quote(sys.executable)} -m codeval.isolate SUBMISSIONS EVALUATE"
)


class SandboxError(Exception):
    pass


class ExtractionError(SandboxError):
    """The archive is not a well-formed zip."""


class SecurityError(SandboxError):
    """An archive entry would escape the workspace root."""


class LimitError(SandboxError):
    """The archive expands past the configured size cap."""


class ConfigError(SandboxError):
    """Invalid isolation or daemon configuration."""


@dataclass
class Workspace:
    """A per-evaluation directory; ``manifest`` lists extracted files
    relative to ``root``."""

    root: Path
    manifest: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class IsolationConfig:
    """How to wrap evaluation commands.

    When ``direct_mode`` is false, ``command_template`` must contain the
    placeholders SUBMISSIONS and EVALUATE exactly once each.  ``precommand``
    is an optional host command the daemon runs before each evaluation
    (e.g. rebuilding a container image).
    """

    command_template: str | None = None
    precommand: str | None = None
    direct_mode: bool = False

    def __post_init__(self):
        if self.direct_mode:
            return
        template = self.command_template
        if template is None:
            raise ConfigError("isolation template required unless direct_mode is set")
        for placeholder in (PLACEHOLDER_SUBMISSIONS, PLACEHOLDER_EVALUATE):
            count = template.count(placeholder)
            if count != 1:
                raise ConfigError(
                    f"isolation template must contain {placeholder} exactly once, found {count}"
                )

    @classmethod
    def default(cls) -> "IsolationConfig":
        return cls(command_template=DEFAULT_ISOLATION_TEMPLATE)

    @classmethod
    def direct(cls, precommand: str | None = None) -> "IsolationConfig":
        return cls(precommand=precommand, direct_mode=True)


@dataclass(frozen=True)
class ExecRequest:
    command: str
    stdin_bytes: bytes = b""
    timeout_s: float = 20.0
    workdir: str = ""  # workspace-relative; "" means the root

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")


@dataclass(frozen=True)
class Exited:
    code: int


@dataclass(frozen=True)
class TimedOut:
    pass


@dataclass(frozen=True)
class SpawnFailed:
    reason: str


ExecStatus = Exited | TimedOut | SpawnFailed


@dataclass(frozen=True)
class ExecResult:
    status: ExecStatus
    stdout_bytes: bytes
    stderr_bytes: bytes
    wall_time_s: float
    stdout_truncated: bool = False
    stderr_truncated: bool = False


def _entry_parts(name: str) -> tuple[str, ...]:
    """Validated path components of a zip entry, or SecurityError."""
    if name.startswith(("/", "\\")) or (len(name) > 1 and name[1] == ":"):
        raise SecurityError(f"archive entry {name!r} has an absolute path")
    parts = PurePosixPath(name).parts
    if ".." in parts:
        raise SecurityError(f"archive entry {name!r} traverses outside the workspace")
    return parts


def _extract_archive(blob: bytes, root: Path, manifest: list[str], seen: set[str],
                     total: int, size_cap: int, label: str) -> int:
    try:
        archive = zipfile.ZipFile(io.BytesIO(blob))
    except zipfile.BadZipFile as exc:
        raise ExtractionError(f"{label} is not a valid zip archive: {exc}") from None
    resolved_root = root.resolve()
    with archive:
        infos = archive.infolist()
        # Validate every entry before writing anything.
        for info in infos:
            if info.filename:
                _entry_parts(info.filename)
        declared = total + sum(info.file_size for info in infos)
        if declared > size_cap:
            raise LimitError(
                f"{label} would expand to {declared} bytes, above the {size_cap} byte cap"
            )
        for info in infos:
            if not info.filename:
                continue
            parts = _entry_parts(info.filename)
            if not parts:
                continue
            dest = root.joinpath(*parts)
            if not dest.resolve().is_relative_to(resolved_root):
                raise SecurityError(f"archive entry {info.filename!r} escapes the workspace")
            if info.is_dir():
                dest.mkdir(parents=True, exist_ok=True)
                continue
            try:
                dest.parent.mkdir(parents=True, exist_ok=True)
                with archive.open(info) as src, open(dest, "wb") as out:
                    while chunk := src.read(64 * 1024):
                        total += len(chunk)
                        if total > size_cap:
                            raise LimitError(
                                f"{label} expands past the {size_cap} byte cap"
                            )
                        out.write(chunk)
            except OSError as exc:
                raise ExtractionError(
                    f"{label}: cannot extract {info.filename!r}: {exc}"
                ) from None
            rel = "/".join(parts)
            if rel not in seen:
                seen.add(rel)
                manifest.append(rel)
    return total


def create_workspace(submission_archive: bytes,
                     support_archives: tuple[bytes, ...] | list[bytes] = (),
                     *,
                     base_dir: str | Path | None = None,
                     size_cap: int = DEFAULT_SIZE_CAP) -> Workspace:
    """Extract a submission plus instructor support archives into a fresh
    directory.

    Support archives are extracted after the submission so instructor
    fixtures always win over student files of the same name.  On any
    failure the partially-built root is removed before the error
    propagates.
    """
    root = Path(tempfile.mkdtemp(prefix="codeval-ws-", dir=base_dir))
    manifest: list[str] = []
    seen: set[str] = set()
    total = 0
    try:
        total = _extract_archive(submission_archive, root, manifest, seen,
                                 total, size_cap, "submission archive")
        for index, blob in enumerate(support_archives, start=1):
            total = _extract_archive(blob, root, manifest, seen,
                                     total, size_cap, f"support archive {index}")
    except BaseException:
        shutil.rmtree(root, ignore_errors=True)
        raise
    return Workspace(root=root, manifest=manifest)


def destroy_workspace(workspace: Workspace) -> None:
    """Remove the workspace root; idempotent, failures logged but not raised."""
    root = workspace.root
    if not root.exists():
        return
    try:
        shutil.rmtree(root)
    except OSError as exc:
        log.warning("could not fully remove workspace %s: %s", root, exc)


def render_isolated_command(config: IsolationConfig, workspace: Workspace,
                            evaluate_command: str) -> str:
    """Substitute the workspace root and evaluation command into the
    isolation template; direct mode passes the command through unchanged."""
    if config.direct_mode:
        return evaluate_command
    template = config.command_template
    if template is None or PLACEHOLDER_SUBMISSIONS not in template \
            or PLACEHOLDER_EVALUATE not in template:
        raise ConfigError("isolation template is missing a placeholder")
    rendered = template.replace(PLACEHOLDER_SUBMISSIONS, str(workspace.root))
    return rendered.replace(PLACEHOLDER_EVALUATE, evaluate_command)


def _terminate_tree(proc: subprocess.Popen) -> None:
    for sig, grace in ((signal.SIGTERM, KILL_GRACE_S), (signal.SIGKILL, 5.0)):
        try:
            os.killpg(proc.pid, sig)
        except ProcessLookupError:
            return
        try:
            proc.wait(timeout=grace)
            return
        except subprocess.TimeoutExpired:
            continue
    proc.wait()  # pragma: no cover - SIGKILL cannot be ignored


def _read_capped(path: Path, cap: int = OUTPUT_CAP) -> tuple[bytes, bool]:
    size = path.stat().st_size
    with open(path, "rb") as fh:
        return fh.read(cap), size > cap


def execute(workspace: Workspace, request: ExecRequest,
            config: IsolationConfig) -> ExecResult:
    """Run one command against the workspace under the isolation config.

    stdin is fed from ``request.stdin_bytes``; stdout and stderr are
    captured separately, byte-faithful up to a 10 MiB cap each.  On timeout
    the whole process group gets SIGTERM, then SIGKILL after the kill
    grace, and the status is TimedOut.
    """
    cwd = workspace.root
    if request.workdir:
        cwd = (workspace.root / request.workdir).resolve()
        if not cwd.is_relative_to(workspace.root.resolve()):
            raise SecurityError(f"workdir {request.workdir!r} escapes the workspace")
    final_command = render_isolated_command(config, workspace, request.command)

    with tempfile.TemporaryDirectory(prefix="codeval-io-") as capture_dir:
        capture = Path(capture_dir)
        stdin_path = capture / "stdin"
        stdout_path = capture / "stdout"
        stderr_path = capture / "stderr"
        stdin_path.write_bytes(request.stdin_bytes)

        started = time.monotonic()
        try:
            with open(stdin_path, "rb") as fin, \
                    open(stdout_path, "wb") as fout, \
                    open(stderr_path, "wb") as ferr:
                proc = subprocess.Popen(
                    ["/bin/sh", "-c", final_command],
                    stdin=fin, stdout=fout, stderr=ferr,
                    cwd=cwd, start_new_session=True,
                )
        except OSError as exc:
            return ExecResult(SpawnFailed(str(exc)), b"", b"",
                              time.monotonic() - started)

        timed_out = False
        try:
            proc.wait(timeout=request.timeout_s)
        except subprocess.TimeoutExpired:
            timed_out = True
            wall = time.monotonic() - started
            _terminate_tree(proc)
        else:
            wall = time.monotonic() - started

        stdout_bytes, stdout_truncated = _read_capped(stdout_path)
        stderr_bytes, stderr_truncated = _read_capped(stderr_path)

    status: ExecStatus = TimedOut() if timed_out else Exited(proc.returncode)
    return ExecResult(status, stdout_bytes, stderr_bytes, wall,
                      stdout_truncated, stderr_truncated)
