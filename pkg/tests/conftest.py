import numpy as np
import pytest

from crossview.simulator import default_cameras, plane_induced_homography

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def rig():
    cam1, cam2 = default_cameras()
    return cam1, cam2, plane_induced_homography(cam1, cam2)
