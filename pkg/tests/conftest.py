import numpy as np
import pytest
from hypothesis import settings

from handval.kinematics import DistanceSeries, REFERENCE

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def series(values, fps=30.0, label="IFT_TT", t0=0.0, system=REFERENCE):
    values = np.asarray(values, dtype=float)
    t = t0 + np.arange(values.size) / fps
    return DistanceSeries(label, t, values, system, fps)


def tone(freq, amp=40.0, base=60.0, fps=30.0, duration=15.0, phase=0.0, label="IFT_TT"):
    t = np.arange(int(round(duration * fps))) / fps
    return DistanceSeries(label, t, base + amp * np.cos(2 * np.pi * freq * t + phase), REFERENCE, fps)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria: one summary line per criterion -------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when not in ("setup", "call"):
        return
    number, title = marker.args
    if rep.failed or (rep.when == "call" and number not in _CRITERIA):
        _CRITERIA[number] = (title, "FAIL" if rep.failed else "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {title}")
