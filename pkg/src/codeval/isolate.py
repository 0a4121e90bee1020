"""Mount-namespace isolation wrapper: ``python -m codeval.isolate ROOT CMD...``

Re-executes itself under ``unshare`` with private mount and pid namespaces,
remounts the filesystem read-only except for ROOT (kept writable via a
bind mount over itself), changes into ROOT, and execs CMD.  The command
therefore cannot modify anything on the root filesystem outside the
workspace, and every process it spawns dies with the namespace.

Exit codes: the command's own on success, 125 if isolation setup fails,
2 on usage error.
"""

import os
import subprocess
import sys

SETUP_FAILED = 125
_STAGE2 = "--stage2"


def _mount(args: list[str]) -> None:
    result = subprocess.run(["mount", *args], capture_output=True, text=True)
    if result.returncode != 0:
        print(f"codeval.isolate: mount {' '.join(args)} failed: "
              f"{result.stderr.strip()}", file=sys.stderr)
        sys.exit(SETUP_FAILED)


def _stage2(root: str, command: list[str]) -> None:
    _mount(["--make-rprivate", "/"])
    _mount(["--bind", root, root])
    _mount(["-o", "remount,ro,bind", "/"])
    # Fresh /proc so the command sees its own pid namespace; best effort.
    subprocess.run(["mount", "-t", "proc", "proc", "/proc"],
                   capture_output=True)
    os.chdir(root)
    try:
        os.execvp(command[0], command)
    except OSError as exc:
        print(f"codeval.isolate: cannot exec {command[0]!r}: {exc}", file=sys.stderr)
        sys.exit(127)


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else list(argv)
    if args and args[0] == _STAGE2:
        if len(args) < 3:
            print("codeval.isolate: internal usage error", file=sys.stderr)
            return 2
        _stage2(args[1], args[2:])
        return SETUP_FAILED  # pragma: no cover - _stage2 never returns
    if len(args) < 2:
        print("usage: python -m codeval.isolate ROOT COMMAND [ARG...]",
              file=sys.stderr)
        return 2
    unshare = ["unshare", "--mount", "--pid", "--fork"]
    if os.geteuid() != 0:
        unshare.append("--map-root-user")
    stage2 = [sys.executable, "-m", "codeval.isolate", _STAGE2, *args]
    try:
        os.execvp("unshare", unshare + stage2)
    except OSError as exc:
        print(f"codeval.isolate: cannot run unshare: {exc}", file=sys.stderr)
        return SETUP_FAILED


if __name__ == "__main__":
    sys.exit(main())
