import numpy as np
import pytest


def pytest_configure(config):
    config._acceptance_lines = {}


@pytest.fixture
def acceptance(request):
    """Record the one-line verdict of an acceptance criterion."""
    lines = request.config._acceptance_lines

    def emit(number: int, passed: bool, message: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {message}"
        lines[number] = line
        print(line)

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
