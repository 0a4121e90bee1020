"""codeval: automatic evaluation of programming-assignment submissions.

Submissions are zip archives pulled from an LMS, evaluated in an isolated
workspace against an instructor-written specification file, and the
resulting pass/fail report is posted back as a submission comment.
"""

__version__ = "0.1.0"

from .specfile import (
    ParseError,
    SpecFile,
    TestCase,
    parse_spec,
    render_spec,
    validate_spec,
)
from .sandbox import (
    ConfigError,
    ExecRequest,
    ExecResult,
    ExtractionError,
    IsolationConfig,
    LimitError,
    SecurityError,
    Workspace,
    create_workspace,
    destroy_workspace,
    execute,
    render_isolated_command,
)
from .evaluator import (
    EvaluationReport,
    REPORT_MARKER,
    TestResult,
    compare_output,
    evaluate,
    render_report,
    run_test,
)
from .config import Config, load_config
from .daemon import PollSummary, poll_once, run_daemon

__all__ = [
    "Config",
    "ConfigError",
    "EvaluationReport",
    "ExecRequest",
    "ExecResult",
    "ExtractionError",
    "IsolationConfig",
    "LimitError",
    "ParseError",
    "PollSummary",
    "REPORT_MARKER",
    "SecurityError",
    "SpecFile",
    "TestCase",
    "TestResult",
    "Workspace",
    "compare_output",
    "create_workspace",
    "destroy_workspace",
    "evaluate",
    "execute",
    "load_config",
    "parse_spec",
    "poll_once",
    "render_isolated_command",
    "render_report",
    "render_spec",
    "run_daemon",
    "run_test",
    "validate_spec",
]
