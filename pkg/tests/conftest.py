import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "geoflow", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("geoflow")

ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def criterion(request):
    """Record a one-line verdict for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(label: str, passed: bool, detail: str) -> None:
        lines[label] = f"{label} {'PASS' if passed else 'FAIL'}: {detail}"
        print(lines[label])
        assert passed, lines[label]

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for label in sorted(lines, key=lambda s: int(s[1:])):
            terminalreporter.write_line(lines[label])
