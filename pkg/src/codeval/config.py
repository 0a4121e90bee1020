"""Operator configuration.

Sectioned key=value file with a [SERVER] section (url, token) and a [RUN]
section (precommand, command).  The CODEVAL_TOKEN environment variable
overrides the token so secrets can stay out of files.  A missing or empty
[RUN] command means evaluations run directly on the host (direct mode),
which the CLI warns about loudly.
"""

import configparser
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .lms.base import BackendCredentials
from .sandbox import ConfigError, IsolationConfig

TOKEN_ENV_VAR = "CODEVAL_TOKEN"
REDACTED_TOKEN = "REDACTED"

DEFAULT_POLL_INTERVAL_S = 300.0
DEFAULT_PARALLELISM = 2


@dataclass(frozen=True)
class Config:
    server: BackendCredentials
    isolation: IsolationConfig
    course: str = ""
    poll_interval_s: float = DEFAULT_POLL_INTERVAL_S
    parallelism: int = DEFAULT_PARALLELISM

    def __post_init__(self):
        if self.poll_interval_s <= 0:
            raise ConfigError("poll interval must be positive")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be at least 1")


def _parse_sections(text: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"line {exc.lineno}: key outside any [SECTION]") from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else "?"
        raise ConfigError(f"line {lineno}: malformed configuration line") from None
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    return parser


def load_config(path: str | Path, env: Mapping[str, str] | None = None,
                course: str = "") -> Config:
    """Load a config file, applying environment overrides and defaults.

    Raises ConfigError (with a line number where possible) for malformed
    files, a missing url or token, or an isolation command lacking its
    placeholders.
    """
    env = os.environ if env is None else env
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    parser = _parse_sections(text)

    url = parser.get("SERVER", "url", fallback="").strip()
    token = env.get(TOKEN_ENV_VAR, "").strip() or \
        parser.get("SERVER", "token", fallback="").strip()
    if not url:
        raise ConfigError("missing url in [SERVER] section")
    if not token:
        raise ConfigError(f"missing token: set it in [SERVER] or via {TOKEN_ENV_VAR}")

    precommand = parser.get("RUN", "precommand", fallback="").strip() or None
    command = parser.get("RUN", "command", fallback="").strip()
    if command:
        isolation = IsolationConfig(command_template=command, precommand=precommand)
    else:
        isolation = IsolationConfig.direct(precommand=precommand)

    return Config(
        server=BackendCredentials(base_url=url, token=token),
        isolation=isolation,
        course=course,
        poll_interval_s=parser.getfloat("RUN", "poll_interval",
                                        fallback=DEFAULT_POLL_INTERVAL_S),
        parallelism=parser.getint("RUN", "parallelism",
                                  fallback=DEFAULT_PARALLELISM),
    )


def dump_config(config: Config) -> str:
    """Serialize a Config with the token redacted (restore it via the
    CODEVAL_TOKEN environment variable when reloading)."""
    lines = [
        "[SERVER]",
        f"url={config.server.base_url}",
        f"token={REDACTED_TOKEN}",
        "",
        "[RUN]",
        f"precommand={config.isolation.precommand or ''}",
        f"command={'' if config.isolation.direct_mode else config.isolation.command_template}",
        f"poll_interval={config.poll_interval_s:g}",
        f"parallelism={config.parallelism}",
    ]
    return "\n".join(lines) + "\n"
