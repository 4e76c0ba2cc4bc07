from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from conftest import CANONICAL_A
from toric_hcsck.polytope import interval, standard_simplex, transform_polytope, unit_square
from toric_hcsck.stability import (
    CreaseFunction,
    affine_pairings,
    extremal_affine,
    futaki_pairing,
    sample_probes,
    transform_probe,
    uniform_scan,
)


def test_extremal_affine_constants(preset):
    name, P = preset
    A = extremal_affine(P)
    np.testing.assert_allclose(A, [CANONICAL_A[name]] + [0.0] * P.dim, atol=1e-12)


def test_extremal_affine_translated_simplex():
    P = transform_polytope(standard_simplex(), [[1, 0], [0, 1]], [2, -1])
    A = extremal_affine(P)
    assert np.max(np.abs(affine_pairings(P, A))) < 1e-12


def test_affine_pairing_vanishes(preset, rng):
    _, P = preset
    A = extremal_affine(P)
    for _ in range(5):
        c = rng.standard_normal(P.dim + 1)
        assert abs(futaki_pairing(P, A, lambda x: c[0] + x @ c[1:])) < 1e-12


def test_interval_hand_example():
    assert futaki_pairing(interval(), [2.0, 0.0], CreaseFunction((1.0,), 0.5)) == pytest.approx(0.25, abs=1e-15)


def test_crease_closed_form_matches_quadrature_path(preset, rng):
    _, P = preset
    A = extremal_affine(P)
    for v in sample_probes(P, 5, seed=3):
        # the generic path only sees a callable, not a CreaseFunction
        generic = futaki_pairing(P, A, lambda x, v=v: v.values(x), order=40)
        assert futaki_pairing(P, A, v) == pytest.approx(generic, abs=2e-3)


def _brute_force(P, A, v):
    """dblquad over P plus line integrals over each facet."""
    A = np.asarray(A, dtype=float)
    f = lambda x, y: (A[0] + A[1] * x + A[2] * y) * v.values([[x, y]])[0]  # noqa: E731
    lo, hi = P.bounding_box
    if len(P.vertices) == 3:
        area = integrate.dblquad(lambda y, x: f(x, y), 0, 1, 0, lambda x: 1 - x, epsabs=1e-10, epsrel=1e-10)[0]
    else:
        area = integrate.dblquad(lambda y, x: f(x, y), lo[0], hi[0], lo[1], hi[1], epsabs=1e-10, epsrel=1e-10)[0]
    bnd = 0.0
    for fct, (i, j) in zip(P.facets, P.facet_vertices):
        a, b = P.vertices[i], P.vertices[j]
        L = np.linalg.norm(b - a) / fct.norm
        bnd += L * integrate.quad(lambda s: v.values([a + s * (b - a)])[0], 0, 1, epsabs=1e-13, epsrel=1e-13)[0]
    return bnd - area


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("P", [unit_square(), standard_simplex()], ids=["square", "simplex"])
def test_crease_pairing_brute_force(P):
    A = extremal_affine(P)
    for v in sample_probes(P, 6, seed=11):
        assert futaki_pairing(P, A, v) == pytest.approx(_brute_force(P, A, v), abs=1e-6)


def test_interval_ratio_family():
    # up-crease at b: L = b (1 - b), boundary = 1 - b, ratio b; down-crease at c: ratio 1 - c
    P = interval()
    probes = [CreaseFunction((1.0,), b) for b in (0.1, 0.4, 0.9)] + [CreaseFunction((-1.0,), -c) for c in (0.2, 0.95)]
    rep = uniform_scan(P, [2.0, 0.0], probes=probes)
    np.testing.assert_allclose(rep.ratios, [0.1, 0.4, 0.9, 0.8, 0.05], atol=1e-14)
    assert rep.lambda_hat == pytest.approx(0.05)
    assert rep.worst_probe == probes[-1]


def test_interval_scan_positive_and_small():
    rep = uniform_scan(interval(), n_probes=1000, seed=0)
    assert 0 < rep.lambda_hat < 1e-2


@pytest.mark.parametrize("P", [unit_square(), standard_simplex()], ids=["square", "simplex"])
def test_cscK_polytopes_scan_positive(P):
    assert uniform_scan(P, n_probes=1000, seed=0).lambda_hat > 0


def test_obstructed_A_detected():
    P = interval()
    A = extremal_affine(P) + np.array([0.0, 10.0])
    rep = uniform_scan(P, A, n_probes=1000, seed=0)
    assert min(rep.values) < 0
    assert np.max(np.abs(rep.affine_pairings)) > 1


def test_scan_threads_deterministic():
    P = unit_square()
    a = uniform_scan(P, n_probes=300, seed=5)
    b = uniform_scan(P, n_probes=300, seed=5, threads=4)
    assert a.values == b.values


def test_lattice_invariance():
    P = standard_simplex()
    g, t = np.array([[1, 1], [0, 1]]), [Fraction(1, 3), 2]
    Q = transform_polytope(P, g, t)
    probes = sample_probes(P, 200, seed=2)
    rP = uniform_scan(P, probes=probes)
    rQ = uniform_scan(Q, probes=[transform_probe(v, g, [float(s) for s in t]) for v in probes])
    np.testing.assert_allclose(rQ.values, rP.values, atol=1e-12)
    np.testing.assert_allclose(extremal_affine(Q)[0], 6.0, atol=1e-12)
