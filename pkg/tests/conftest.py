import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from oracles import ENTANGLED  # noqa: E402

from bohmlab.wavefield import GridSpec, ModelParams, build_grid, init_state  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def grid2():
    return build_grid(GridSpec(2, 1, (-20.0, 20.0), 256))


@pytest.fixture(scope="session")
def params2():
    return ModelParams((1.0, 1.0))


@pytest.fixture(scope="session")
def entangled(grid2, params2):
    return init_state(ENTANGLED, grid2, params2)


@pytest.fixture(scope="session")
def grid1():
    return build_grid(GridSpec(1, 1, (-20.0, 20.0), 256))


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"criterion {crit:3s} {'PASS' if ok else 'FAIL'}  {detail}")
