import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k, title): acceptance criterion number k")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    rep = outcome.get_result()
    k, title = mark.args
    entry = _CRITERIA.setdefault(k, {"title": title, "ok": True, "seconds": 0.0, "detail": ""})
    if rep.when == "call":
        entry["seconds"] += rep.duration
        entry["detail"] = getattr(item, "criterion_detail", "")
    if rep.failed:
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        e = _CRITERIA[k]
        verdict = "PASS" if e["ok"] else "FAIL"
        detail = f" ({e['detail']})" if e["detail"] else ""
        tr.write_line(f"criterion {k}: {verdict} {e['title']}{detail} [{e['seconds']:.1f}s]")
