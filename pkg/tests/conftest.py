import pytest

from cutstokes3f import Circle, build_structured_mesh, collect_cut_sets

ACCEPTANCE_LINES = []


@pytest.fixture
def unit_square_mesh():
    return build_structured_mesh(1, 1, (0.0, 0.0, 1.0, 1.0))


@pytest.fixture(scope="session")
def circle_cut_16():
    """Unit circle in a 16x16 mesh of [-1.5, 1.5]^2."""
    mesh = build_structured_mesh(16, 16, (-1.5, -1.5, 1.5, 1.5))
    return collect_cut_sets(mesh, Circle())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
