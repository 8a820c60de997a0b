import numpy as np
import pytest

from flightdiff.trajmetrics import TrajectoryLog


def circle_log(radius=2.0, speed=1.0, rate=1000.0, turns=1.0, z=0.0, t0=0.0):
    """Constant-speed circle sampled at ``rate`` Hz, positions only."""
    period = 2 * np.pi * radius / speed
    dt = 1.0 / rate
    t = np.arange(0.0, turns * period + dt / 2, dt)
    theta = speed * t / radius
    x = np.stack([radius * np.cos(theta), radius * np.sin(theta), np.full_like(t, z)], axis=1)
    return TrajectoryLog(t + t0, x)


def line_log(start, velocity, duration, rate=100.0):
    t = np.arange(0.0, duration + 0.5 / rate, 1.0 / rate)
    x = np.asarray(start, float) + t[:, None] * np.asarray(velocity, float)
    return TrajectoryLog(t, x)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria report, one line per criterion, shown at the end of the run
ACCEPTANCE_LINES: dict = {}


def record_criterion(number: int, title: str, passed: bool, detail: str = "") -> None:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {title}"
    if detail:
        line += f"  [{detail}]"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
