import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from philter.amplify import Amplifier, EnergyWindow
from philter.spectral import h2_model, hf_ansatz

settings.register_profile(
    "repro",
    deadline=None,
    derandomize=True,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repro")


@pytest.fixture(scope="session")
def h2():
    return h2_model()


@pytest.fixture(scope="session")
def h2_amp20(h2):
    """Amplifier for the HF ansatz on a 20-qubit energy register, shared across tests."""
    return Amplifier(h2, hf_ansatz(), EnergyWindow("00"), 20)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    """Record one verdict line per acceptance criterion."""

    def record(name, ok, detail):
        ACCEPTANCE[name] = (bool(ok), detail)
        return ok

    return record


def pytest_sessionstart(session):
    import time

    session.config._started = time.perf_counter()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    import time

    if not ACCEPTANCE:
        return
    elapsed = time.perf_counter() - config._started
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in sorted(ACCEPTANCE.items()):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    terminalreporter.write_line(f"{'PASS' if elapsed < 600 else 'FAIL'}  suite runtime: {elapsed:.1f} s (< 600 s)")
