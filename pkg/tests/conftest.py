import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from indefla import AngularSpectrum, AnnularGeometry, SourceSpec  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def geometries(draw, min_gap=1.05, max_ratio=6.0):
    r_i = draw(st.floats(0.2, 3.0))
    q = draw(st.floats(min_gap, max_ratio))
    p = draw(st.floats(min_gap, max_ratio))
    return AnnularGeometry(r_i, r_i * q, r_i * q * p)


@pytest.fixture
def canonical():
    """Geometry with critical radius 4."""
    return AnnularGeometry(1.0, 2.0, 8.0)


@pytest.fixture
def small():
    return AnnularGeometry(1.0, 2.0, 4.0)


@pytest.fixture
def in_range_source():
    return SourceSpec(5.0, 6.0, AngularSpectrum.parametric(1.0, 2.0, 1.0))


@pytest.fixture
def mode3_source():
    return SourceSpec(5.0, 6.0, AngularSpectrum.single(3))


def pytest_terminal_summary(terminalreporter):
    from checks import ACCEPTANCE_LINES

    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
