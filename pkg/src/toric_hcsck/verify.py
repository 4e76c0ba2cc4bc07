"""Invariant suites shared by the ``verify`` command and the test-suite.

Each suite returns a SuiteResult with the worst observed discrepancy and the
tolerance it was judged against.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisExpansion, GalerkinBasis, random_polynomial
from .errors import ToricError
from .operator import (
    DeformationHessian,
    Discretization,
    PotentialField,
    energy,
    energy_gradient_check,
    ibp_terms,
)
from .oracle import oracle_1d
from .solver import solution_field, solve

log = logging.getLogger(__name__)

IBP_TOL_EXACT = 1e-6
IBP_TOL_FD = 1e-3
GRADIENT_TOL = 1e-5
CONVEXITY_TOL = 1e-8
JACOBIAN_TOL = 1e-4
ORACLE_TOL = 1e-5
# below degree 8 the oracle comparison is judged against this looser bound
ORACLE_TOL_LOW_DEGREE = 1e-2


@dataclass
class SuiteResult:
    name: str
    worst: float
    tolerance: float
    samples: int = 0
    message: str = ""
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.worst) and self.worst <= self.tolerance) and not self.message

    def to_dict(self):
        return {
            "name": self.name,
            "worst": self.worst if np.isfinite(self.worst) else None,
            "tolerance": self.tolerance,
            "samples": self.samples,
            "passed": self.passed,
            "message": self.message,
            "details": self.details,
        }


def _failed(name, tol, exc):
    return SuiteResult(name, float("inf"), tol, message=f"{type(exc).__name__}: {exc}")


def random_feasible_field(P, rng, degree=4, scale=1e-3, basis=None) -> PotentialField:
    """``u_G`` plus a small random smooth correction."""
    basis = basis or GalerkinBasis(P, degree)
    return PotentialField(P, BasisExpansion(basis, scale * rng.standard_normal(len(basis))))


def ibp_suite(P, H: DeformationHessian, k, n_funcs=5, seed=0, boundary_scale=1.0, degree=4) -> SuiteResult:
    """``int Tr(T D^2 v) = int v T^{ab}_{,ab} + int_dP v dsigma`` at u = u_G."""
    rng = np.random.default_rng(seed)
    exact = H.is_zero
    tol = IBP_TOL_EXACT if exact else IBP_TOL_FD
    u = PotentialField(P)
    worst = 0.0
    try:
        for _ in range(n_funcs):
            v = random_polynomial(P.dim, degree, rng)
            lhs, interior, bnd = ibp_terms(
                u, H, k, v, mode="exact" if exact else "fd", boundary_scale=boundary_scale
            )
            err = abs(lhs - interior - bnd) / max(1.0, abs(lhs), abs(bnd))
            worst = max(worst, err)
    except ToricError as exc:
        return _failed("integration_by_parts", tol, exc)
    return SuiteResult("integration_by_parts", worst, tol, n_funcs, details={"mode": "exact" if exact else "fd"})


def gradient_suite(P, H, k, A, n_states=5, seed=0, step=1e-4) -> SuiteResult:
    """Central difference of the energy against ``-r(w)``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    try:
        for _ in range(n_states):
            u = random_feasible_field(P, rng)
            w = random_polynomial(P.dim, 4, rng)
            fd, minus_r, gap = energy_gradient_check(u, H, k, A, w, step=step)
            worst = max(worst, gap / max(1.0, abs(fd)))
    except ToricError as exc:
        return _failed("energy_gradient", GRADIENT_TOL, exc)
    return SuiteResult("energy_gradient", worst, GRADIENT_TOL, n_states)


def convexity_suite(P, H, k, A, n_paths=5, seed=0, step=1e-3) -> SuiteResult:
    """Second differences of the energy along random linear paths (worst = -min)."""
    rng = np.random.default_rng(seed)
    lowest = np.inf
    try:
        for _ in range(n_paths):
            u = random_feasible_field(P, rng)
            w = random_polynomial(P.dim, 4, rng, scale=0.1)

            def at(s):
                return PotentialField(P, _shift(u.correction, w, s))

            e = [energy(at(s), H, k, A, u) for s in (-step, 0.0, step)]
            lowest = min(lowest, e[0] - 2 * e[1] + e[2])
    except ToricError as exc:
        return _failed("convexity", CONVEXITY_TOL, exc)
    return SuiteResult("convexity", float(-lowest), CONVEXITY_TOL, n_paths, details={"min_second_difference": float(lowest)})


class _shift:
    def __init__(self, base, w, s):
        self.base, self.w, self.s = base, w, s

    def values(self, x):
        return np.real(self.base.values(x)) + self.s * np.real(self.w.values(x))

    def hessians(self, x):
        return np.real(self.base.hessians(x)) + self.s * np.real(self.w.hessians(x))


def jacobian_suite(P, H, k, A, degree=4, seed=0, scale=1e-3) -> SuiteResult:
    """Relative asymmetry of the finite-difference Jacobian of the residual."""
    rng = np.random.default_rng(seed)
    try:
        D = Discretization(GalerkinBasis(P, degree), H, k, A)
        c = scale * rng.standard_normal(D.size)
        J = D.jacobian_fd(c, rel_step=1e-6)
        asym = float(np.linalg.norm(J - J.T) / np.linalg.norm(J))
        mineig = float(np.linalg.eigvalsh(0.5 * (J + J.T))[0])
    except ToricError as exc:
        return _failed("jacobian_symmetry", JACOBIAN_TOL, exc)
    return SuiteResult(
        "jacobian_symmetry", asym, JACOBIAN_TOL, D.size, details={"min_eig_symmetrized": mineig}
    )


def oracle_tolerance(degree: int) -> float:
    return ORACLE_TOL if degree >= 8 else ORACLE_TOL_LOW_DEGREE


def oracle_comparison(P, H, k, A, degree=8, mesh=200, **solve_kw):
    """Galerkin ``u''`` against the 1D oracle; returns (y, oracle, galerkin, report)."""
    y, g = oracle_1d(P, H, k, A, mesh=mesh)
    basis = GalerkinBasis(P, degree)
    rep = solve(P, H, k, A, basis=basis, **solve_kw)
    gal = solution_field(basis, rep).hessian(y[:, None])[:, 0, 0]
    return y, g, gal, rep


def oracle_suite(P, H, k, A, degree=8, mesh=200, **solve_kw) -> SuiteResult:
    tol = oracle_tolerance(degree)
    if P.dim != 1:
        return SuiteResult("oracle_comparison", 0.0, tol, 0, details={"skipped": "polytope is not an interval"})
    try:
        y, g, gal, rep = oracle_comparison(P, H, k, A, degree, mesh, **solve_kw)
    except ToricError as exc:
        return _failed("oracle_comparison", tol, exc)
    err = float(np.max(np.abs(gal - g)))
    return SuiteResult("oracle_comparison", err, tol, len(y), details={"degree": degree, "newton_iterations": rep.iterations})


def run_suites(P, H, k, A, degree=8, seed=0, boundary_scale=1.0, oracle_mesh=200, **solve_kw):
    return [
        ibp_suite(P, H, k, seed=seed, boundary_scale=boundary_scale),
        gradient_suite(P, H, k, A, seed=seed),
        convexity_suite(P, H, k, A, seed=seed),
        jacobian_suite(P, H, k, A, seed=seed),
        oracle_suite(P, H, k, A, degree=degree, mesh=oracle_mesh, **solve_kw),
    ]
