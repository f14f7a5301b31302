import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from yamabe_bubbles.manifolds import ModelManifold

settings.register_profile("repo", deadline=None, derandomize=True, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=[ModelManifold.sphere(3), ModelManifold.sphere(6), ModelManifold.product(3, 0.7),
                        ModelManifold.product(5, 0.4)], ids=str)
def model(request):
    return request.param


# ---------------------------------------------------------------------------
# one pass/fail line per acceptance criterion

_CRITERIA: dict[int, dict] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            item.user_properties.append(("criterion", marker.args))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when != "call" and not (report.when == "setup" and report.skipped):
        return
    k, title = props["criterion"]
    row = _CRITERIA.setdefault(k, {"title": title, "passed": 0, "failed": 0, "xfailed": 0})
    if hasattr(report, "wasxfail"):
        row["xfailed" if report.skipped else "failed"] += 1
    elif report.passed:
        row["passed"] += 1
    else:
        row["failed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        row = _CRITERIA[k]
        ok = row["failed"] == 0 and row["xfailed"] == 0
        line = f"criterion {k} ({row['title']}): {'PASS' if ok else 'FAIL'}  {row['passed']} cases pass"
        if row["xfailed"]:
            line += f", {row['xfailed']} cases fail as recorded (strict xfail)"
        if row["failed"]:
            line += f", {row['failed']} cases fail unexpectedly"
        tr.write_line(line)
