import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def crandn(rng, *shape):
    """Circularly-symmetric complex Gaussian samples with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


class CriterionRecorder:
    def __init__(self, number, title):
        self.number = number
        self.title = title
        self.line = None

    def check(self, passed, detail):
        status = "PASS" if passed else "FAIL"
        self.line = f"criterion {self.number:2d} {status}: {self.title} ({detail})"
        assert passed, self.line


@pytest.fixture
def criterion():
    made = []

    def factory(number, title):
        rec = CriterionRecorder(number, title)
        made.append(rec)
        return rec

    yield factory
    for rec in made:
        ACCEPTANCE_LINES.append(rec.line or f"criterion {rec.number:2d} FAIL: {rec.title} (did not complete)")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
