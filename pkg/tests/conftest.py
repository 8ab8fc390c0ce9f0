import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from refugelab.config import DEFAULT_PARAMS
from refugelab.core import Grid, ModelParams

settings.register_profile("repo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow,
                                                 HealthCheck.function_scoped_fixture])
settings.load_profile("repo")


@pytest.fixture
def params():
    return ModelParams(**DEFAULT_PARAMS)


@pytest.fixture
def interior_params():
    """xi = 0.3, m = 0.9: the best constant refuge is interior for large enough infection."""
    return ModelParams(beta_VH=3.0, beta_HV=2e-7, sigma_V=0.05, sigma_P=0.05, alpha=0.0,
                       s_V=0.5, s_P=1.0, h=1.0, gamma=0.5, H0=100.0, rP_r=1.0, rP_f=0.2,
                       bV_r=1.0, bV_f=1.0, dV_r=0.2, dV_f=0.1)


@pytest.fixture
def grid():
    return Grid(1.0, 200)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Acceptance criteria report: one line per criterion at the end of the run

_ACCEPTANCE: dict = {}


class _Recorder:
    def __init__(self):
        self.entries = []

    def __call__(self, number: int, title: str, ok: bool, detail: str = "") -> bool:
        self.entries.append((number, title, bool(ok), detail))
        return bool(ok)


@pytest.fixture
def accept(request):
    rec = _Recorder()
    yield rec
    number = getattr(request.node.get_closest_marker("criterion"), "args", (None,))[0]
    for num, title, ok, detail in rec.entries:
        prev = _ACCEPTANCE.get(num)
        _ACCEPTANCE[num] = (title, ok and (prev is None or prev[1]), detail)
    if number is not None and number not in _ACCEPTANCE:
        _ACCEPTANCE[number] = (request.node.name, False, "did not complete")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[num]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {num:2d}. {title}: {detail}")
