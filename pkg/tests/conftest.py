import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session", autouse=True)
def reference_cache(tmp_path_factory):
    """Reference optima are cached per test session, never across sessions."""
    path = tmp_path_factory.mktemp("reference-cache")
    old = os.environ.get("UFW_CACHE")
    os.environ["UFW_CACHE"] = str(path)
    yield path
    if old is None:
        os.environ.pop("UFW_CACHE", None)
    else:
        os.environ["UFW_CACHE"] = old


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
