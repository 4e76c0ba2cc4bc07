import numpy as np
import pytest

from toric_hcsck.polytope import interval, standard_simplex, unit_square
from toric_hcsck.spectral import builtin_spectral

PRESET_BUILDERS = {"interval": interval, "square": unit_square, "simplex": standard_simplex}
# scalar curvature of the Guillemin potential on each preset
CANONICAL_A = {"interval": 2.0, "square": 4.0, "simplex": 6.0}


@pytest.fixture(params=list(PRESET_BUILDERS))
def preset(request):
    return request.param, PRESET_BUILDERS[request.param]()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["linear", "quadratic", "hyperkahler"])
def k_builtin(request):
    return builtin_spectral(request.param)


def interior_points(P, m, rng, margin=0.05):
    """Uniform samples of P at distance > margin from the boundary."""
    lo, hi = P.bounding_box
    out = []
    while len(out) < m:
        x = lo + (hi - lo) * rng.random(P.dim)
        if P.distance_to_boundary(x[None])[0] > margin:
            out.append(x)
    return np.array(out)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
