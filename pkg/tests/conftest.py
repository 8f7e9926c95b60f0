"""Per-criterion pass/fail summary for tests marked ``@pytest.mark.criterion(n)``."""

import pytest

CRITERIA = {
    1: "bound soundness",
    2: "single-photon yield basis equality",
    3: "Z-bound dominance",
    4: "infinite-decoy baseline dominance",
    5: "oracle equivalence",
    6: "closed-form spot checks",
    7: "optimizer correctness",
    8: "determinism",
}

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion exercised by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = marker.args[0]
    ok = _outcomes.setdefault(n, True)
    if rep.failed or (rep.when == "call" and rep.skipped):
        _outcomes[n] = False
    elif rep.when == "call":
        _outcomes[n] = ok and rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        if n in _outcomes:
            status = "PASS" if _outcomes[n] else "FAIL"
        else:
            status = "NOT RUN"
        terminalreporter.write_line(f"criterion {n} ({title}): {status}")
