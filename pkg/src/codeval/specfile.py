"""Parser for CodEval assignment specification files.

A specification file is line oriented: every non-blank line is a tag, a
single space, and a payload.  Tags either contribute file-level settings
(RUN, Z, C), declare static checks (CF, CMD, TCMD, CMP), open a test case
(T, HT), or attach data to the most recently opened test case (I, IF, O,
OF, E, TO, X).  ``parse_spec`` turns the text into a :class:`SpecFile`;
``render_spec`` writes a canonical form back out that re-parses to an
identical structure.
"""

import math
from dataclasses import dataclass, field

__all__ = [
    "ATTACHMENT_TAGS",
    "CompileStep",
    "CommandCheck",
    "DEFAULT_EXPECTED_EXIT",
    "DEFAULT_RUN_STRATEGY",
    "DEFAULT_TIMEOUT_S",
    "FileCompare",
    "FunctionUse",
    "ParseError",
    "RECOGNIZED_TAGS",
    "SpecDirective",
    "SpecFile",
    "SpecWarning",
    "SUPPORTED_RUN_STRATEGIES",
    "TestCase",
    "parse_spec",
    "render_spec",
    "scan_directives",
    "validate_spec",
]

DEFAULT_RUN_STRATEGY = "evaluate.sh"
DEFAULT_TIMEOUT_S = 20.0
DEFAULT_EXPECTED_EXIT = 0

# Registry of evaluation strategies a RUN line may select.  Only the
# built-in shell-driver strategy is registered; unknown values parse fine
# but are flagged by validate_spec and refused by the evaluator.
SUPPORTED_RUN_STRATEGIES = frozenset({DEFAULT_RUN_STRATEGY})

ATTACHMENT_TAGS = frozenset({"I", "IF", "O", "OF", "E", "TO", "X"})
RECOGNIZED_TAGS = frozenset(
    {"RUN", "Z", "C", "CF", "CMD", "TCMD", "CMP", "T", "HT"}
) | ATTACHMENT_TAGS


class ParseError(ValueError):
    """Raised for any malformed specification line.

    ``line_number`` is 1-based and points at the offending line of the
    original text.
    """

    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"line {line_number}: {reason}")


@dataclass(frozen=True)
class SpecDirective:
    """One tagged line: the tag, its raw payload, and where it came from."""

    tag: str
    payload: str
    line_number: int


@dataclass(frozen=True)
class CompileStep:
    command: str


@dataclass(frozen=True)
class FunctionUse:
    """CF check: ``function`` must appear as a whole-word identifier in at
    least one of ``files``."""

    function: str
    files: tuple[str, ...]


@dataclass(frozen=True)
class CommandCheck:
    """CMD/TCMD check; only TCMD (``must_succeed``) can fail the evaluation."""

    command: str
    must_succeed: bool


@dataclass(frozen=True)
class FileCompare:
    """CMP check: two workspace-relative files that must be byte-identical."""

    left: str
    right: str


StaticCheck = FunctionUse | CommandCheck | FileCompare


@dataclass(frozen=True)
class TestCase:
    """One dynamic test in file order.

    ``stdin_lines``/``stdin_file`` and ``stdout_lines``/``stdout_file`` are
    mutually exclusive.  ``stderr_lines`` of ``None`` means stderr is not
    checked at all; stdout is always checked (no O/OF means it must be
    empty).
    """

    ordinal: int
    command: str
    hidden: bool = False
    stdin_lines: tuple[str, ...] | None = None
    stdin_file: str | None = None
    stdout_lines: tuple[str, ...] | None = None
    stdout_file: str | None = None
    stderr_lines: tuple[str, ...] | None = None
    expected_exit: int = DEFAULT_EXPECTED_EXIT
    timeout_s: float = DEFAULT_TIMEOUT_S


@dataclass(frozen=True)
class SpecFile:
    """A parsed evaluation plan."""

    run_strategy: str = DEFAULT_RUN_STRATEGY
    support_archives: tuple[str, ...] = ()
    compile_steps: tuple[CompileStep, ...] = ()
    static_checks: tuple[StaticCheck, ...] = ()
    tests: tuple[TestCase, ...] = ()


@dataclass(frozen=True)
class SpecWarning:
    code: str
    message: str


def scan_directives(text: str) -> list[SpecDirective]:
    """Tokenize spec text into directives.

    Accepts LF or CRLF line endings.  Blank (or whitespace-only) lines are
    skipped.  Payloads keep their text verbatim after the first space,
    except that trailing whitespace is stripped.
    """
    directives = []
    for number, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        tag, sep, payload = line.partition(" ")
        if tag not in RECOGNIZED_TAGS:
            raise ParseError(number, f"unrecognized tag {tag!r}")
        payload = payload.rstrip()
        if not sep or not payload:
            raise ParseError(number, f"tag {tag} requires a payload")
        directives.append(SpecDirective(tag, payload, number))
    return directives


class _TestBuilder:
    def __init__(self, command: str, hidden: bool, line_number: int):
        self.command = command
        self.hidden = hidden
        self.line_number = line_number
        self.stdin_lines: list[str] | None = None
        self.stdin_file: str | None = None
        self.stdout_lines: list[str] | None = None
        self.stdout_file: str | None = None
        self.stderr_lines: list[str] | None = None
        self.expected_exit: int | None = None
        self.timeout_s: float | None = None

    def attach(self, d: SpecDirective) -> None:
        if d.tag == "I":
            if self.stdin_file is not None:
                raise ParseError(d.line_number, "I conflicts with an earlier IF on this test")
            self.stdin_lines = (self.stdin_lines or []) + [d.payload]
        elif d.tag == "IF":
            if self.stdin_file is not None:
                raise ParseError(d.line_number, "duplicate IF on one test")
            if self.stdin_lines is not None:
                raise ParseError(d.line_number, "IF conflicts with an earlier I on this test")
            self.stdin_file = d.payload
        elif d.tag == "O":
            if self.stdout_file is not None:
                raise ParseError(d.line_number, "O conflicts with an earlier OF on this test")
            self.stdout_lines = (self.stdout_lines or []) + [d.payload]
        elif d.tag == "OF":
            if self.stdout_file is not None:
                raise ParseError(d.line_number, "duplicate OF on one test")
            if self.stdout_lines is not None:
                raise ParseError(d.line_number, "OF conflicts with an earlier O on this test")
            self.stdout_file = d.payload
        elif d.tag == "E":
            self.stderr_lines = (self.stderr_lines or []) + [d.payload]
        elif d.tag == "X":
            if self.expected_exit is not None:
                raise ParseError(d.line_number, "duplicate X on one test")
            try:
                self.expected_exit = int(d.payload, 10)
            except ValueError:
                raise ParseError(d.line_number, f"X requires an integer exit code, got {d.payload!r}") from None
        elif d.tag == "TO":
            if self.timeout_s is not None:
                raise ParseError(d.line_number, "duplicate TO on one test")
            try:
                seconds = float(d.payload)
            except ValueError:
                raise ParseError(d.line_number, f"TO requires a number of seconds, got {d.payload!r}") from None
            if not math.isfinite(seconds) or seconds <= 0:
                raise ParseError(d.line_number, f"TO requires a positive number of seconds, got {d.payload!r}")
            self.timeout_s = seconds
        else:  # pragma: no cover - scan_directives guards the tag set
            raise ParseError(d.line_number, f"tag {d.tag} cannot attach to a test")

    def build(self, ordinal: int) -> TestCase:
        return TestCase(
            ordinal=ordinal,
            command=self.command,
            hidden=self.hidden,
            stdin_lines=tuple(self.stdin_lines) if self.stdin_lines is not None else None,
            stdin_file=self.stdin_file,
            stdout_lines=tuple(self.stdout_lines) if self.stdout_lines is not None else None,
            stdout_file=self.stdout_file,
            stderr_lines=tuple(self.stderr_lines) if self.stderr_lines is not None else None,
            expected_exit=self.expected_exit if self.expected_exit is not None else DEFAULT_EXPECTED_EXIT,
            timeout_s=self.timeout_s if self.timeout_s is not None else DEFAULT_TIMEOUT_S,
        )


def _require_workspace_relative(path: str, line_number: int, tag: str) -> None:
    if path.startswith(("/", "\\")):
        raise ParseError(line_number, f"{tag} path {path!r} must be workspace-relative")
    if ".." in path.split("/"):
        raise ParseError(line_number, f"{tag} path {path!r} must not traverse outside the workspace")


def parse_spec(text: str) -> SpecFile:
    """Parse specification text into a :class:`SpecFile`.

    Attachment tags bind to the most recently opened T/HT test; using one
    before any test is an error, as are duplicate RUN/X/TO/IF/OF lines and
    mixing the inline and file forms of stdin or stdout on one test.
    """
    run_strategy: str | None = None
    support_archives: list[str] = []
    compile_steps: list[CompileStep] = []
    static_checks: list[StaticCheck] = []
    builders: list[_TestBuilder] = []

    for d in scan_directives(text):
        if d.tag == "RUN":
            if run_strategy is not None:
                raise ParseError(d.line_number, "duplicate RUN directive")
            run_strategy = d.payload
        elif d.tag == "Z":
            support_archives.extend(d.payload.split())
        elif d.tag == "C":
            compile_steps.append(CompileStep(d.payload))
        elif d.tag == "CF":
            parts = d.payload.split()
            if len(parts) < 2:
                raise ParseError(d.line_number, "CF requires a function name and at least one file")
            static_checks.append(FunctionUse(parts[0], tuple(parts[1:])))
        elif d.tag in ("CMD", "TCMD"):
            static_checks.append(CommandCheck(d.payload, must_succeed=d.tag == "TCMD"))
        elif d.tag == "CMP":
            parts = d.payload.split()
            if len(parts) != 2:
                raise ParseError(d.line_number, "CMP requires exactly two files to compare")
            for part in parts:
                _require_workspace_relative(part, d.line_number, "CMP")
            static_checks.append(FileCompare(parts[0], parts[1]))
        elif d.tag in ("T", "HT"):
            builders.append(_TestBuilder(d.payload, hidden=d.tag == "HT", line_number=d.line_number))
        else:
            if not builders:
                raise ParseError(d.line_number, f"{d.tag} must follow a T or HT test line")
            builders[-1].attach(d)

    return SpecFile(
        run_strategy=run_strategy if run_strategy is not None else DEFAULT_RUN_STRATEGY,
        support_archives=tuple(support_archives),
        compile_steps=tuple(compile_steps),
        static_checks=tuple(static_checks),
        tests=tuple(b.build(ordinal) for ordinal, b in enumerate(builders, start=1)),
    )


def validate_spec(spec: SpecFile) -> list[SpecWarning]:
    """Non-fatal lint of a parsed spec.

    Flags specs with no tests, collects every file the evaluation will
    expect to find in the workspace (IF/OF/CMP references), and warns when
    the run strategy is not in :data:`SUPPORTED_RUN_STRATEGIES`.
    """
    warnings = []
    if not spec.tests:
        warnings.append(SpecWarning("no-tests", "specification defines no test cases"))
    for test in spec.tests:
        if test.stdin_file is not None:
            warnings.append(SpecWarning(
                "file-reference",
                f"test {test.ordinal} reads stdin from {test.stdin_file!r}; "
                "the file must be present in the workspace at evaluation time",
            ))
        if test.stdout_file is not None:
            warnings.append(SpecWarning(
                "file-reference",
                f"test {test.ordinal} expects stdout from {test.stdout_file!r}; "
                "the file must be present in the workspace at evaluation time",
            ))
    for check in spec.static_checks:
        if isinstance(check, FileCompare):
            warnings.append(SpecWarning(
                "file-reference",
                f"CMP compares {check.left!r} and {check.right!r}; both must exist "
                "in the workspace when the check runs",
            ))
    if spec.run_strategy not in SUPPORTED_RUN_STRATEGIES:
        known = ", ".join(sorted(SUPPORTED_RUN_STRATEGIES))
        warnings.append(SpecWarning(
            "unknown-strategy",
            f"run strategy {spec.run_strategy!r} is not registered (known: {known})",
        ))
    return warnings


def _renderable(value: str, what: str) -> str:
    if value == "" or value != value.rstrip():
        raise ValueError(f"cannot render {what}: empty or trailing whitespace ({value!r})")
    if "\n" in value or "\r" in value:
        raise ValueError(f"cannot render {what}: contains a line break ({value!r})")
    return value


def _renderable_word(value: str, what: str) -> str:
    _renderable(value, what)
    if any(ch.isspace() for ch in value):
        raise ValueError(f"cannot render {what}: contains whitespace ({value!r})")
    return value


def _format_seconds(seconds: float) -> str:
    return str(int(seconds)) if seconds == int(seconds) else repr(seconds)


def render_spec(spec: SpecFile) -> str:
    """Render a SpecFile to canonical text that parses back to an equal value.

    Defaults (exit code 0, 20 s timeout) are omitted; Z archives get one
    line each.  Raises ValueError for values the line grammar cannot carry
    (embedded newlines, trailing whitespace, empty payloads).
    """
    lines = [f"RUN {_renderable(spec.run_strategy, 'run strategy')}"]
    for name in spec.support_archives:
        lines.append(f"Z {_renderable_word(name, 'Z archive name')}")
    for step in spec.compile_steps:
        lines.append(f"C {_renderable(step.command, 'compile command')}")
    for check in spec.static_checks:
        if isinstance(check, FunctionUse):
            words = [_renderable_word(check.function, "CF function")]
            words += [_renderable_word(f, "CF file") for f in check.files]
            lines.append("CF " + " ".join(words))
        elif isinstance(check, CommandCheck):
            tag = "TCMD" if check.must_succeed else "CMD"
            lines.append(f"{tag} {_renderable(check.command, 'check command')}")
        else:
            left = _renderable_word(check.left, "CMP file")
            right = _renderable_word(check.right, "CMP file")
            lines.append(f"CMP {left} {right}")
    for test in spec.tests:
        lines.append("")
        tag = "HT" if test.hidden else "T"
        lines.append(f"{tag} {_renderable(test.command, 'test command')}")
        if test.stdin_lines is not None:
            lines += [f"I {_renderable(line, 'I line')}" for line in test.stdin_lines]
        if test.stdin_file is not None:
            lines.append(f"IF {_renderable(test.stdin_file, 'IF path')}")
        if test.stdout_lines is not None:
            lines += [f"O {_renderable(line, 'O line')}" for line in test.stdout_lines]
        if test.stdout_file is not None:
            lines.append(f"OF {_renderable(test.stdout_file, 'OF path')}")
        if test.stderr_lines is not None:
            lines += [f"E {_renderable(line, 'E line')}" for line in test.stderr_lines]
        if test.expected_exit != DEFAULT_EXPECTED_EXIT:
            lines.append(f"X {test.expected_exit}")
        if test.timeout_s != DEFAULT_TIMEOUT_S:
            lines.append(f"TO {_format_seconds(test.timeout_s)}")
    return "\n".join(lines) + "\n"
