from __future__ import annotations

import pytest

AC_LABELS = {
    "AC1": "Euclidean integral",
    "AC2": "positivity certification",
    "AC3": "commutator sign",
    "AC4": "resonance threshold",
    "AC5": "uniform boundedness",
    "AC6": "constant-weight bound",
    "AC7": "resonant blow-up",
    "AC8": "solver fidelity",
    "AC9": "flow monotonicity",
}

# label -> list of (test id, passed, detail)
_AC_OUTCOMES: dict[str, list[tuple[str, bool, str]]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("ac")
    if marker is None:
        return
    label = marker.args[0]
    # a setup or teardown error also counts against the criterion
    if report.when == "call" or report.failed:
        detail = "; ".join(v for k, v in item.user_properties if k == "ac_detail")
        _AC_OUTCOMES.setdefault(label, []).append((item.name, report.passed, detail))


@pytest.fixture
def ac_detail(request):
    """Attach a short measurement string to the acceptance line of this test."""
    def add(text: str) -> None:
        request.node.user_properties.append(("ac_detail", text))
    return add


def pytest_terminal_summary(terminalreporter):
    if not _AC_OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for label, title in AC_LABELS.items():
        runs = _AC_OUTCOMES.get(label)
        if not runs:
            tr.write_line(f"{label} NOT RUN  {title}")
            continue
        ok = all(p for _, p, _ in runs)
        details = "; ".join(d for _, _, d in runs if d)
        tr.write_line(f"{label} {'PASS' if ok else 'FAIL'}  {title}: {details}")
