import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from iqlink.scenarios import ScenarioTemplate

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_template():
    """Two 2x2 users per subcarrier, one interferer, coarse imbalance."""
    return ScenarioTemplate(n_rx=6, n_users=2, n_users_cp=2, n_interferers=1, irr_min_db=15.0)


@pytest.fixture
def small_scenario(small_template, rng):
    return small_template.draw(rng)


def random_template(seed: int) -> ScenarioTemplate:
    """Small template with dimensions picked from ``seed``."""
    r = np.random.default_rng(seed)
    n_tx = int(r.integers(1, 3))
    n_users = int(r.integers(1, 3))
    return ScenarioTemplate(
        n_rx=int(r.integers(2, 7)),
        n_users=n_users,
        n_users_cp=int(r.integers(0, 3)),
        n_tx=n_tx,
        n_streams=int(r.integers(1, n_tx + 1)),
        n_interferers=int(r.integers(0, 3)),
        interferer_antennas=int(r.integers(1, 3)),
        snr_db=float(r.uniform(0, 30)),
        sir_db=float(r.uniform(-20, 10)),
        irr_min_db=float(r.uniform(10, 35)),
    )


# criterion -> list of (part, passed, detail), printed after the run
ACCEPTANCE: dict = {}


def record(criterion: int, part: str, passed: bool, detail: str) -> bool:
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        verdict = "PASS" if all(p for _, p, _ in parts) else "FAIL"
        body = "; ".join(f"{name} {'ok' if p else 'FAILED'} ({d})" for name, p, d in parts)
        terminalreporter.write_line(f"criterion {crit:2d}: {verdict}  {body}")
