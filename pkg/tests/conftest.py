import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def study_point(rng):
    """Random symmetric values (a0, d0) below the Erdos-Renyi curve in the study window."""
    while True:
        e = rng.uniform(0.5, 0.75)
        t = -rng.uniform(0.001, 0.045)
        w = np.cbrt(-t)
        if 0.0 < e - w and e + w < 1.0:
            return e - w, e + w


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE = {}


def record(criterion: int, ok: bool, detail: str) -> bool:
    """Store one acceptance verdict for the end-of-run summary."""
    ACCEPTANCE[criterion] = (bool(ok), detail)
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
