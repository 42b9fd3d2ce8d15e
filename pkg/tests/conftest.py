import json
import os
import sys
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from voaspan.cofinite import compute_constants  # noqa: E402
from voaspan.modealg import store_for  # noqa: E402
from voaspan.spanset import compute_L  # noqa: E402
from voaspan.virmodel import LEE_YANG_C, SIMPLE, VERMA, build_module, build_virasoro_voa  # noqa: E402

settings.register_profile(
    "repo", deadline=None, max_examples=60, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("repo")

H_LY = Fraction(-1, 5)


@pytest.fixture(scope="session")
def frozen():
    with open(os.path.join(os.path.dirname(__file__), "data", "frozen.json")) as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def ly_voa():
    return build_virasoro_voa(LEE_YANG_C, 12)


@pytest.fixture(scope="session")
def ly_store(ly_voa):
    return store_for(ly_voa)


@pytest.fixture(scope="session")
def ly_data(ly_voa):
    return compute_constants(ly_voa)


@pytest.fixture(scope="session")
def ly_module(ly_voa):
    return build_module(ly_voa, H_LY, 8, SIMPLE)


@pytest.fixture(scope="session")
def ly_vacuum_module(ly_voa):
    return build_module(ly_voa, 0, 8, SIMPLE)


@pytest.fixture(scope="session")
def ly_L(ly_module, ly_data):
    return compute_L(ly_module, ly_data.X)


@pytest.fixture(scope="session")
def verma_module(ly_voa):
    return build_module(ly_voa, Fraction(3, 7), 6, VERMA)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
