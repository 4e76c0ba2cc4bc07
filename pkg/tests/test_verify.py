import numpy as np
import pytest

from toric_hcsck import verify
from toric_hcsck.basis import Polynomial
from toric_hcsck.operator import DeformationHessian
from toric_hcsck.polytope import interval
from toric_hcsck.spectral import builtin_spectral
from toric_hcsck.stability import extremal_affine

HK = builtin_spectral("hyperkahler")


@pytest.mark.parametrize("hval", [0.0, 0.2])
def test_all_suites_pass(preset, hval):
    _, P = preset
    H = DeformationHessian(P.dim, constant=hval * np.eye(P.dim))
    res = verify.run_suites(P, H, HK, extremal_affine(P), degree=8, oracle_mesh=50)
    assert all(r.passed for r in res), [r.to_dict() for r in res if not r.passed]


def test_boundary_fault_detected():
    P = interval()
    r = verify.ibp_suite(P, DeformationHessian.zero(1), HK, boundary_scale=2.0)
    assert not r.passed


def test_low_degree_oracle_uses_loose_tolerance():
    P = interval()
    H = DeformationHessian.from_potential(Polynomial([[3]], np.array([0.05])))
    r = verify.oracle_suite(P, H, HK, [2.0, 0.0], degree=2, mesh=50)
    assert r.tolerance == verify.ORACLE_TOL_LOW_DEGREE
    assert 1e-5 < r.worst <= r.tolerance


def test_oracle_error_table_decreases():
    P = interval()
    H = DeformationHessian.from_potential(Polynomial([[3]], np.array([0.05])))
    errs = [verify.oracle_suite(P, H, HK, [2.0, 0.0], degree=d, mesh=50).worst for d in range(4, 9)]
    assert all(a >= 1.5 * b for a, b in zip(errs, errs[1:]))


def test_oracle_suite_skipped_in_2d(preset):
    name, P = preset
    r = verify.oracle_suite(P, DeformationHessian.zero(P.dim), HK, extremal_affine(P), degree=4)
    assert r.passed
    assert ("skipped" in r.details) == (P.dim == 2)
