import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def write_lines(path, lines):
    path.write_text("".join(f"{line}\n" for line in lines))
    return path


# one PASS/FAIL line per acceptance criterion, repeated in the terminal summary
CRITERIA: dict[int, list[str]] = {}


def record_criterion(number: int, passed: bool, detail: str, rows=()) -> None:
    lines = [f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"]
    lines += [f"    {r}" for r in rows]
    CRITERIA[number] = lines
    print("\n".join(lines))


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        for line in CRITERIA[number]:
            terminalreporter.write_line(line)
