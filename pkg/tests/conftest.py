import pytest

from memsfatigue.dut import Axis, PopulationSpec, generate_population
from memsfatigue.plan import CheckpointPolicy, FatigueTestCondition, compile_schedule

REFERENCE_COVS = {"X": 0.0514, "Y": 0.0514, "Z": 0.018}


def schedule(orientations=(Axis.X, Axis.Y, Axis.Z), hours=32.0, frequency=80.0, interval=None):
    cond = FatigueTestCondition(20.0, frequency, hours, tuple(orientations))
    return compile_schedule(cond, CheckpointPolicy(interval_cycles=interval))


def population(count=10, seed=42):
    return generate_population(PopulationSpec(count, REFERENCE_COVS, 0.0, seed))


@pytest.fixture
def reference_schedule():
    return schedule()


@pytest.fixture
def reference_population():
    return population()


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
