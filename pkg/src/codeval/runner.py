"""Plan execution for evaluations.

The evaluator turns a spec into an ordered list of steps.  This module
renders those steps into a single shell driver script inside the
workspace, executes it with one sandbox invocation (so an isolation
template wraps the whole evaluation, not one container per test), and
reads the per-step captures back from ``.codeval/``.

Inside the driver each step gets its own ``timeout`` and its stdout,
stderr, exit code, and wall time land in ``.codeval/<key>.*``.  A failing
compile step writes an abort marker and stops the run.
"""

import shlex
import shutil
from dataclasses import dataclass
from pathlib import Path

from .sandbox import (
    ExecRequest,
    ExecResult,
    Exited,
    IsolationConfig,
    KILL_GRACE_S,
    OUTPUT_CAP,
    SpawnFailed,
    TimedOut,
    Workspace,
    execute,
)

RESULTS_DIR = ".codeval"

# exit codes GNU timeout uses for expired commands (SIGTERM / SIGKILL path)
_TIMEOUT_RCS = (124, 137)

_DRIVER_PRELUDE = """\
#!/bin/bash
# generated evaluation driver -- one run per submission evaluation
RES={res}

run_step() {{
  key="$1"; limit="$2"; inp="$3"; shift 3
  t0=$(date +%s%N 2>/dev/null || echo 0)
  if [ -n "$inp" ]; then
    timeout -k {grace} "$limit" bash -c "$1" < "$inp" > "$RES/$key.out" 2> "$RES/$key.err"
  else
    timeout -k {grace} "$limit" bash -c "$1" < /dev/null > "$RES/$key.out" 2> "$RES/$key.err"
  fi
  rc=$?
  t1=$(date +%s%N 2>/dev/null || echo 0)
  echo "$rc" > "$RES/$key.exit"
  echo $(( (t1 - t0) / 1000000 )) > "$RES/$key.ms" 2>/dev/null
  return $rc
}}
"""


@dataclass(frozen=True)
class Step:
    """One unit of the evaluation plan.

    ``kind`` is "run" (compile steps, command checks, tests) or "snapshot"
    (copy files into the results dir so later phases see the workspace
    state as of this point in the plan).
    """

    kind: str
    key: str
    command: str = ""
    timeout_s: float = 20.0
    stdin_path: str | None = None  # workspace-relative
    abort_on_fail: bool = False
    snapshot_paths: tuple[str, ...] = ()


@dataclass
class StepOutcome:
    key: str
    ran: bool
    exit_code: int | None = None
    timed_out: bool = False
    stdout: bytes = b""
    stderr: bytes = b""
    wall_ms: int | None = None
    stdout_truncated: bool = False
    stderr_truncated: bool = False


def results_dir(workspace: Workspace) -> Path:
    return workspace.root / RESULTS_DIR


def prepare_results_dir(workspace: Workspace) -> Path:
    """Reset ``.codeval/`` so stale or student-planted results never leak
    into a report."""
    res = results_dir(workspace)
    if res.is_symlink() or res.is_file():
        res.unlink()
    elif res.is_dir():
        shutil.rmtree(res)
    res.mkdir()
    return res


def _format_limit(seconds: float) -> str:
    return str(int(seconds)) if seconds == int(seconds) else f"{seconds:g}"


def generate_driver(steps: list[Step]) -> str:
    lines = [_DRIVER_PRELUDE.format(res=shlex.quote(RESULTS_DIR),
                                    grace=_format_limit(KILL_GRACE_S))]
    for step in steps:
        if step.kind == "snapshot":
            for index, rel in enumerate(step.snapshot_paths):
                target = f"{RESULTS_DIR}/{step.key}_{index}"
                lines.append(
                    f"cp -f -- {shlex.quote(rel)} {shlex.quote(target)} 2>/dev/null || true"
                )
            continue
        stdin = shlex.quote(step.stdin_path) if step.stdin_path else "''"
        lines.append(
            f"run_step {step.key} {_format_limit(step.timeout_s)} {stdin} "
            f"{shlex.quote(step.command)}"
        )
        if step.abort_on_fail:
            lines.append(
                f'if [ "$?" -ne 0 ]; then echo {step.key} > "$RES/aborted"; '
                f'echo done > "$RES/complete"; exit 0; fi'
            )
    lines.append('echo done > "$RES/complete"')
    return "\n".join(lines) + "\n"


def plan_budget_s(steps: list[Step]) -> float:
    """Outer timeout for the single driver invocation: every step can use
    its full timeout plus the kill grace, plus startup slack."""
    budget = 15.0
    for step in steps:
        if step.kind != "snapshot":
            budget += step.timeout_s + KILL_GRACE_S + 1.0
    return budget


def _read_int(path: Path) -> int | None:
    try:
        return int(path.read_text().strip())
    except (OSError, ValueError):
        return None


def _read_capped(path: Path) -> tuple[bytes, bool]:
    try:
        size = path.stat().st_size
        with open(path, "rb") as fh:
            return fh.read(OUTPUT_CAP), size > OUTPUT_CAP
    except OSError:
        return b"", False


def collect_outcome(workspace: Workspace, step: Step) -> StepOutcome:
    res = results_dir(workspace)
    exit_code = _read_int(res / f"{step.key}.exit")
    if exit_code is None:
        return StepOutcome(step.key, ran=False)
    wall_ms = _read_int(res / f"{step.key}.ms")
    # A program may exit with 124 on its own; only call it a timeout when
    # the recorded wall time actually reaches the limit.
    timed_out = exit_code in _TIMEOUT_RCS and (
        wall_ms is None or wall_ms >= step.timeout_s * 1000 - 100
    )
    stdout, out_trunc = _read_capped(res / f"{step.key}.out")
    stderr, err_trunc = _read_capped(res / f"{step.key}.err")
    return StepOutcome(step.key, True, exit_code, timed_out, stdout, stderr,
                       wall_ms, out_trunc, err_trunc)


def run_plan(workspace: Workspace, steps: list[Step], config: IsolationConfig,
             strategy_name: str) -> tuple[dict[str, StepOutcome], str]:
    """Execute the plan with one isolated invocation.

    Returns per-step outcomes plus a note describing any runner-level
    failure ("" when the driver completed or cleanly aborted on a compile
    failure).
    """
    driver_path = workspace.root / strategy_name
    driver_path.write_text(generate_driver(steps))
    driver_path.chmod(0o755)

    request = ExecRequest(command=f"bash {shlex.quote(strategy_name)}",
                          timeout_s=plan_budget_s(steps))
    result = execute(workspace, request, config)

    outcomes = {s.key: collect_outcome(workspace, s)
                for s in steps if s.kind != "snapshot"}
    return outcomes, _runner_note(workspace, result)


def aborted_at(workspace: Workspace) -> str | None:
    """Key of the compile step the driver aborted on, if any."""
    try:
        return (results_dir(workspace) / "aborted").read_text().strip() or None
    except OSError:
        return None


def _runner_note(workspace: Workspace, result: ExecResult) -> str:
    if (results_dir(workspace) / "complete").exists():
        return ""
    if isinstance(result.status, SpawnFailed):
        return f"evaluation runner could not start: {result.status.reason}"
    if isinstance(result.status, TimedOut):
        return "evaluation runner exceeded its overall time budget"
    assert isinstance(result.status, Exited)
    detail = result.stderr_bytes.decode("utf-8", errors="replace").strip()
    note = f"evaluation runner exited with code {result.status.code}"
    return f"{note}: {detail}" if detail else note
