import math

import hypothesis
import numpy as np
import pytest

from polarize.geometry import parse_region
from polarize.potential import PotentialSpec

hypothesis.settings.register_profile("default", deadline=None, max_examples=60)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=10)
hypothesis.settings.load_profile("default")

TRIANGLE_DOC = {"type": "polygon", "vertices": [[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]]}


@pytest.fixture(scope="session")
def triangle():
    return parse_region(TRIANGLE_DOC)


@pytest.fixture(scope="session")
def disk():
    return parse_region({"type": "disk", "center": [0, 0], "radius": 1})


@pytest.fixture(scope="session")
def two_triangles():
    return parse_region({"type": "union", "parts": [
        TRIANGLE_DOC,
        {"type": "polygon", "vertices": [[3.0, 0.0], [4.0, 0.0], [3.5, math.sqrt(3) / 2]]},
    ]})


@pytest.fixture(scope="session")
def gauss5():
    return PotentialSpec(5.0)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion")


_outcomes = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _outcomes[item.nodeid] = (marker.args[0], marker.args[1], rep.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    # stable sort keeps run order within a criterion
    for num, text, outcome, detail in sorted(_outcomes.values(), key=lambda r: r[0]):
        verdict = "PASS" if outcome == "passed" else "FAIL"
        line = f"criterion {num} [{verdict}] {text}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)
