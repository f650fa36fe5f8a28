import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile("ci", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("ci")


@pytest.fixture
def np_rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def bell_rho():
    from contextuality.pmsquare import bell_state

    psi = bell_state()
    return np.outer(psi, psi.conj())


_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, text): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call":
        return
    cid, text = marker.args
    prev = _CRITERIA.get(cid, (text, True))
    _CRITERIA[cid] = (text, prev[1] and rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_CRITERIA):
        text, ok = _CRITERIA[cid]
        terminalreporter.write_line(f"{cid} {'PASS' if ok else 'FAIL'}  {text}")
