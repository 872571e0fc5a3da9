import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from patternmc.data import THETA, load_yoshi  # noqa: E402
from patternmc.umm import build_umm  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def yoshi():
    mixture, _ = load_yoshi()
    return mixture


@pytest.fixture(scope="session")
def yoshi_umm(yoshi):
    return build_umm(yoshi, THETA)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


# -- acceptance summary ------------------------------------------------------
# tests marked ``@pytest.mark.criterion(n, "title")`` report one line each
# at the end of the run; a criterion passes only if all its tests pass.

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    if report.when == "setup" and report.passed:
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "details": []})
    entry["ok"] = entry["ok"] and report.passed
    entry["details"].extend(v for k, v in item.user_properties if k == "detail")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = "PASS" if entry["ok"] else "FAIL"
        detail = "; ".join(entry["details"])
        line = f"criterion {number:>2}: {status}  {entry['title']}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))


@pytest.fixture
def detail(request):
    """Attach a short measurement to the acceptance summary line."""

    def add(text):
        request.node.user_properties.append(("detail", text))

    return add
