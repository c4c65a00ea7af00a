import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from roughtransport import MeasureState, PiecewiseCoefficient, default_family

settings.register_profile(
    "repo", max_examples=40, deadline=None, derandomize=True, print_blob=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def family():
    return default_family()


@pytest.fixture(scope="session")
def neg_sign():
    return PiecewiseCoefficient.step("1", "-1", T=4.0)


@pytest.fixture(scope="session")
def two_heaviside():
    return PiecewiseCoefficient.step("2", "0", T=4.0)


@pytest.fixture(scope="session")
def unit_density():
    return MeasureState.lebesgue(1.0)


@pytest.fixture(scope="session")
def bump_density():
    return MeasureState.density("(1-x**2)**2", -1.0, 1.0)



@pytest.fixture(scope="session")
def registry(tmp_path_factory):
    """Every builtin scenario, run once with default options and reports on disk."""
    from roughtransport.runner import RunOptions, run_scenario
    from roughtransport.scenarios import BUILTIN_IDS, builtin

    opts = RunOptions(out=str(tmp_path_factory.mktemp("runs")))
    return {sid: run_scenario(builtin(sid), opts) for sid in BUILTIN_IDS}


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
