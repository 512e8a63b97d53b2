import numpy as np
import pytest

import specgal as sg

ACCEPTANCE_RESULTS = []


def record_acceptance(name: str, passed: bool, detail: str = ""):
    ACCEPTANCE_RESULTS.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if passed else "FAIL"
        line = f"{status}  {name}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


def bump_field(basis: "sg.SpectralBasis", amplitude: float = 1.0) -> "sg.SpectralField":
    """Projection of a smooth unit-peak bump compatible with the walls."""
    grid = basis.default_grid()
    length = basis.spec.side_length
    values = np.full(grid.shape, amplitude)
    for mesh in np.meshgrid(*grid.axes, indexing="ij"):
        if basis.spec.domain_kind == "dirichlet-cube":
            values = values * (4.0 / length**2) * mesh * (length - mesh)
        else:
            values = values * 0.5 * (1.0 - np.cos(2.0 * np.pi * mesh / length))
    return sg.project(sg.PhysicalField(grid, values), basis)


@pytest.fixture
def dirichlet_1d():
    return sg.build_basis(sg.BasisSpec("dirichlet-cube", np.pi, 1, 4))


@pytest.fixture
def dirichlet_3d():
    return sg.build_basis(sg.BasisSpec("dirichlet-cube", np.pi, 3, 2))


@pytest.fixture
def torus_1d():
    return sg.build_basis(sg.BasisSpec("periodic-torus", 4.0 * np.pi, 1, 8))
