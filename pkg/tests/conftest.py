import math

import pytest

from morphleg.analysis import GridSpec
from morphleg.linkage import FootState, LinkLengths, inverse_kinematics

BASE = LinkLengths(0.10, 0.20, 0.20, 0.10, 0.10, 0.05)
# grid used for the published area comparison
AREA_GRID = GridSpec(-0.4, 0.6, -0.5, 0.5, 0.002)
SYM_DEG = (120.0, 60.0)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def base():
    return BASE


@pytest.fixture
def ref_pose():
    """A comfortably nonsingular pose: foot straight below the ground-link midpoint."""
    return inverse_kinematics(BASE, FootState(0.05, -0.15))


@pytest.fixture
def sym_angles():
    return tuple(math.radians(a) for a in SYM_DEG)

# published usable-workspace areas (m^2) for the one-at-a-time length changes
PUBLISHED_AREAS = {
    "baseline": 0.0902,
    "retracted_ad": 0.0291, "elongated_ad": 0.1247,
    "retracted_bc": 0.0667, "elongated_bc": 0.1336,
    "retracted_e": 0.0671, "elongated_e": 0.1124,
    "retracted_n": 0.1251, "elongated_n": 0.0639,
}
