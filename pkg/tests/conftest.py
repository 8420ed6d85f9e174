import os
import re

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

PAPER_SCALE = os.environ.get("CAVCOOL_PAPER_SCALE") == "1"


def pytest_collection_modifyitems(config, items):
    if PAPER_SCALE:
        return
    skip = pytest.mark.skip(reason="paper-scale run; set CAVCOOL_PAPER_SCALE=1")
    for item in items:
        if "paper_scale" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record the outcome of an acceptance criterion and assert it."""

    def record(number, title, ok, detail=""):
        _CRITERIA[number] = (title, bool(ok), detail)
        assert ok, f"criterion {number} ({title}) failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA, key=lambda k: (int(re.match(r"\d+", k).group()), k)):
        title, ok, detail = _CRITERIA[number]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:>3}  {title}: {detail}")
