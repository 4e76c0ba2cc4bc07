"""Convex minimization of the discrete energy and the continuity method.

At continuity parameter t the deformation term of the energy carries weight t,
so t = 0 is Abreu's equation and t = 1 the full deformed equation.  Each stage
is solved by Newton's method with the exact energy Hessian and an Armijo
line search that never leaves the feasible set
``{D^2 u > 0, lambda_max(N) < lambda_sup - margin}``.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg

from .basis import GalerkinBasis
from .errors import DomainExceeded, FutakiObstruction, LineSearchFailure, NotConvex, NotSolvable
from .operator import DeformationHessian, Discretization, PotentialField
from .oracle import oracle_1d  # noqa: F401  (re-exported)
from .spectral import SpectralFunction
from .stability import affine_pairings

log = logging.getLogger(__name__)

DEFAULT_SCHEDULE = (0.0, 0.25, 0.5, 0.75, 1.0)
SUCCESS = "SUCCESS"
NOT_SOLVABLE = "NOT_SOLVABLE"


@dataclass
class SolveReport:
    coefficients: list
    gradient_norms: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    min_eig_G: float = float("nan")
    lambda_max: float = float("nan")
    min_eig_T: float = float("nan")
    iterations: int = 0
    continuity_steps: list = field(default_factory=list)
    status: str = SUCCESS
    residual_norm: float = float("nan")
    message: str = ""
    degree: int = 0
    basis_size: int = 0

    def to_dict(self):
        return asdict(self)


class _NoConvergence(Exception):
    pass


def line_search(c, direction, energy_fn, feasible_fn, slope, e0=None, alpha=1e-4, max_halvings=60):
    """Backtracking Armijo search (factor 1/2) restricted to feasible points.

    ``slope`` is the directional derivative of the energy (negative for a
    descent direction).  A zero direction returns step 0.
    """
    direction = np.asarray(direction, dtype=float)
    if not np.any(direction):
        return 0.0
    if slope >= 0:
        raise LineSearchFailure("not a descent direction")
    e0 = energy_fn(c) if e0 is None else e0
    # slack for rounding in the energy near the minimum
    slack = 1e-13 * (1.0 + abs(e0))
    step = 1.0
    for _ in range(max_halvings):
        trial = c + step * direction
        if feasible_fn(trial):
            e = energy_fn(trial)
            if e <= e0 + alpha * step * slope + slack:
                return step
        step *= 0.5
    raise LineSearchFailure("no acceptable step")


def _newton(D: Discretization, c, t, tol, max_iter, report: SolveReport):
    ok, tb = D.is_feasible(c, t)
    if not ok:
        D.tensors(c, t)  # raises the specific error
        raise LineSearchFailure("starting point on the feasibility boundary")
    for _ in range(max_iter):
        E = D.energy(c, t, tb)
        r = D.residual(c, t, tb)
        gnorm = float(np.max(np.abs(r)))
        report.energies.append(E)
        report.gradient_norms.append(gnorm)
        if gnorm <= tol * (1.0 + abs(E)):
            return c, tb
        K = D.energy_hessian(c, t)
        try:
            d = scipy.linalg.cho_solve(scipy.linalg.cho_factor(K), r)
        except np.linalg.LinAlgError:
            shift = 1e-10 * np.trace(K) / len(K)
            d = np.linalg.solve(K + shift * np.eye(len(K)), r)
        slope = -float(r @ d)
        if slope >= 0:
            raise _NoConvergence("Hessian not positive definite")

        def feasible(x):
            return D.is_feasible(x, t)[0]

        step = line_search(c, d, lambda x: D.energy(x, t), feasible, slope, e0=E)
        c = c + step * d
        report.iterations += 1
        tb = D.tensors(c, t)
    raise _NoConvergence(f"no convergence in {max_iter} Newton steps")


def check_futaki(P, A, tol=1e-8):
    pair = affine_pairings(P, A)
    if np.max(np.abs(pair)) > tol:
        raise FutakiObstruction(
            f"L_A does not vanish on affine functions: {np.round(pair, 12).tolist()}", pair
        )
    return pair


def solve(
    P,
    H: DeformationHessian,
    k: SpectralFunction,
    A,
    basis: GalerkinBasis | None = None,
    degree: int = 8,
    tol: float = 1e-9,
    t_schedule=DEFAULT_SCHEDULE,
    init=None,
    quad_order=None,
    max_newton: int = 50,
    min_dt: float = 1.0 / 256,
    backend=None,
    discretization: Discretization | None = None,
) -> SolveReport:
    """Minimize the energy along the continuity path; return a SolveReport.

    Raises FutakiObstruction, NotConvex (infeasible ``init``) or NotSolvable.
    """
    check_futaki(P, A)
    basis = basis or GalerkinBasis(P, degree)
    D = discretization or Discretization(basis, H, k, A, quad_order, backend=backend)
    c = np.zeros(len(basis)) if init is None else np.array(init, dtype=float)
    minG = np.min(_min_eig(D.hessian_field(c)))
    if not minG > 0:
        raise NotConvex(f"initial potential not convex (min eigenvalue {minG:.3g})")
    report = SolveReport(coefficients=[], degree=basis.degree, basis_size=len(basis))

    targets = sorted(set(float(t) for t in t_schedule))
    if targets[0] != 0.0:
        targets.insert(0, 0.0)
    if targets[-1] != 1.0:
        targets.append(1.0)
    t_prev = None
    i = 0
    tb = None
    while i < len(targets):
        t = targets[i]
        try:
            c_new, tb = _newton(D, c, t, tol, max_newton, report)
        except (LineSearchFailure, _NoConvergence, DomainExceeded, NotConvex) as exc:
            log.info("continuity stage t=%.6g failed: %s", t, exc)
            if t_prev is None or t - t_prev <= min_dt:
                report.status = NOT_SOLVABLE
                report.message = f"stalled at t={t:.6g}: {exc}"
                report.coefficients = c.tolist()
                try:
                    _fill_margins(report, D, c, t_prev or 0.0)
                except (DomainExceeded, NotConvex):
                    pass
                raise NotSolvable(report.message, report) from exc
            targets.insert(i, 0.5 * (t_prev + t))
            continue
        c, t_prev = c_new, t
        report.continuity_steps.append(t)
        log.debug("t=%.6g solved, |r|=%.3e", t, report.gradient_norms[-1])
        i += 1

    report.coefficients = c.tolist()
    report.residual_norm = float(np.max(np.abs(D.residual(c, 1.0, tb))))
    _fill_margins(report, D, c, 1.0)
    return report


def _min_eig(G):
    return np.linalg.eigvalsh(G)[..., 0]


def _fill_margins(report, D, c, t):
    m = D.margins(c, t)
    report.min_eig_G = m["min_eig_G"]
    report.lambda_max = m["lambda_max"]
    report.min_eig_T = m["min_eig_T"]


def solution_field(basis: GalerkinBasis, report: SolveReport) -> PotentialField:
    return PotentialField.from_coefficients(basis, report.coefficients)


def uniqueness_check(P, H, k, A, inits, basis=None, degree=6, **kwargs) -> float:
    """Largest pairwise distance between solutions started from ``inits``."""
    if len(inits) < 2:
        raise ValueError("need at least two initializations")
    basis = basis or GalerkinBasis(P, degree)
    D = Discretization(basis, H, k, A, kwargs.pop("quad_order", None))
    sols = [np.array(solve(P, H, k, A, basis=basis, init=c0, discretization=D, **kwargs).coefficients) for c0 in inits]
    return max(float(np.max(np.abs(a - b))) for i, a in enumerate(sols) for b in sols[i + 1 :])
