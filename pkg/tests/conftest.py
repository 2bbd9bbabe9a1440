import contextlib
import io
import json
import sys

import pytest

from argact import cli


_LOADED: dict = {}


def load(name: str):
    """Parsed and grounded corpus domain, cached for the whole session."""
    if name not in _LOADED:
        _LOADED[name] = cli.load(name)
    return _LOADED[name]


def run_cli(*argv: str) -> tuple[int, str]:
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf), contextlib.redirect_stderr(buf):
        code = cli.main(list(argv))
    return code, buf.getvalue()


def run_json(*argv: str) -> tuple[int, dict]:
    code, out = run_cli(*argv, "--format", "json")
    return code, json.loads(out)


@pytest.fixture
def domain():
    return load


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])
