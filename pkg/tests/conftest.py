import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from piq import Dataset

settings.register_profile("piq", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("piq")

# criterion label -> (passed, detail); filled by test_acceptance, printed at the end
ACCEPTANCE_RESULTS = {}


def record(label, passed, detail=""):
    ACCEPTANCE_RESULTS[label] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE_RESULTS, key=lambda s: int(s.split()[0])):
        ok, detail = ACCEPTANCE_RESULTS[label]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def regression_instance(seed, n=30, p=3, o=3, shift=8.0):
    r = np.random.default_rng(seed)
    X = r.standard_normal((n, p))
    beta = r.standard_normal(p)
    y = X @ beta + 0.5 * r.standard_normal(n)
    y[:o] += shift
    return Dataset(X, y)


def logistic_instance(seed, n=40, p=3, flips=3):
    r = np.random.default_rng(seed)
    X = r.standard_normal((n, p))
    beta = r.standard_normal(p)
    y = (r.random(n) < 1 / (1 + np.exp(-X @ beta))).astype(float)
    y[:flips] = 1 - y[:flips]
    return Dataset(X, y)
