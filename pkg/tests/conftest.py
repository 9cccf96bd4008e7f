import math
import sys

import numpy as np
import pytest
from hypothesis import settings

from susypt.pt_model import PTParams

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

SQRT2 = math.sqrt(2)
PARAM_SETS = [(SQRT2, 4.0), (SQRT2, 3.0), (2.5, 3.7)]


@pytest.fixture(params=PARAM_SETS, ids=lambda p: f"a{p[0]:.3g}_b{p[1]:.3g}")
def params(request):
    return PTParams(*request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
