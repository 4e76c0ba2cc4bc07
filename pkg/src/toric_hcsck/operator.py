"""The deformed Abreu operator.

Pointwise, with G = D^2 u and H = D^2 h,

    M = G^{-1/2} H G^{-1/2},   N = M^* M   (similar to  G^{-1} Hbar G^{-1} H),
    T = G^{-1/2} (1 + 2 f'(N) N) G^{-1/2},

and the equation is ``-T^{ab}_{,ab} = A``.  Its weak form against a test
function phi is

    r(phi) = int_P Tr(T D^2 phi) dmu - int_dP phi dsigma + int_P A phi dmu,

which is minus the first variation of

    HK(u) = int_dP u dsigma - int_P A u dmu - int_P log det D^2 u dmu + int_P f dmu.

H never depends on u: moving u at fixed h is the horizontal transport of the
deformation, so nothing here mutates H.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels, spectral
from .basis import BasisExpansion, GalerkinBasis, Polynomial
from .errors import DomainExceeded, NotConvex, StencilLeavesPolytope
from .polytope import (
    DelzantPolytope,
    GuilleminPotential,
    boundary_quadrature,
    interior_quadrature,
)
from .spectral import SpectralFunction

# feasibility margin on the eigenvalues of N used by the line search
DOMAIN_MARGIN = 1e-6


def affine_eval(A, x) -> np.ndarray:
    """Affine function with coefficients ``(a0, a1, ..., an)`` at points (m, n)."""
    A = np.asarray(A, dtype=float)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return A[0] + x @ A[1:]


class DeformationHessian:
    """Complex symmetric matrix field ``H(x) = D^2 h(x)`` (or a constant matrix)."""

    def __init__(self, dim, constant=None, potential: Polynomial | None = None):
        self.dim = dim
        self.potential = potential
        if constant is not None:
            constant = np.asarray(constant, dtype=complex).reshape(dim, dim)
            if not np.array_equal(constant, constant.T):
                raise ValueError("H must be symmetric")
        self.constant = constant

    @classmethod
    def zero(cls, dim):
        return cls(dim, constant=np.zeros((dim, dim)))

    @classmethod
    def from_potential(cls, h: Polynomial):
        return cls(h.dim, potential=h)

    @property
    def is_zero(self):
        if self.constant is not None:
            return not np.any(self.constant)
        return not np.any(self.potential.coeffs)

    def at(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.constant is not None:
            return np.broadcast_to(self.constant, (len(x), self.dim, self.dim)).copy()
        out = np.asarray(self.potential.hessians(x), dtype=complex)
        # symmetric exactly, whatever the rounding in the two mixed derivatives
        return 0.5 * (out + np.swapaxes(out, -1, -2))

    def scaled(self, s):
        if self.constant is not None:
            return DeformationHessian(self.dim, constant=s * self.constant)
        return DeformationHessian(self.dim, potential=self.potential * s)


class PotentialField:
    """Symplectic potential ``u = u_G + v`` with v smooth up to the boundary."""

    def __init__(self, P: DelzantPolytope, correction=None):
        self.P = P
        self.guillemin = GuilleminPotential(P)
        self.correction = correction

    @classmethod
    def from_coefficients(cls, basis: GalerkinBasis, coeffs):
        return cls(basis.P, BasisExpansion(basis, coeffs))

    def value(self, x):
        out = self.guillemin.value(x)
        if self.correction is not None:
            out = out + np.real(self.correction.values(x))
        return out

    def correction_values(self, x):
        if self.correction is None:
            return np.zeros(len(np.atleast_2d(x)))
        return np.real(self.correction.values(x))

    def hessian(self, x):
        out = self.guillemin.hessian(x)
        if self.correction is not None:
            out = out + np.real(self.correction.hessians(x))
        return out


class TensorBatch(NamedTuple):
    T: np.ndarray
    lam: np.ndarray
    fval: np.ndarray
    logdet: np.ndarray
    minT: np.ndarray
    minG: np.ndarray


def min_eig_sym(G):
    if G.shape[-1] == 1:
        return G[..., 0, 0]
    a, b, d = G[..., 0, 0], G[..., 0, 1], G[..., 1, 1]
    return 0.5 * (a + d) - np.sqrt(0.25 * (a - d) ** 2 + b * b)


def evaluate(G, Hn, k: SpectralFunction, scale=1.0, backend=None) -> TensorBatch:
    """Tensor field at nodes with convexity and domain checks."""
    minG = min_eig_sym(G)
    if np.any(~(minG > 0)):
        raise NotConvex(f"D^2 u not positive definite (min eigenvalue {float(np.min(minG)):.3g})")
    T, lam, fval, logdet, minT = kernels.tensor_field(G, Hn, k, scale, backend)
    if scale > 0:
        k.check_domain(lam)
    return TensorBatch(T, lam, fval, logdet, minT, minG)


@dataclass
class TensorSample:
    x: np.ndarray
    G: np.ndarray
    G_inv_sqrt: np.ndarray
    M: np.ndarray
    N: np.ndarray
    eig: spectral.HermitianEig
    T: np.ndarray
    lam_max: float


def tensor_sample(u: PotentialField, H: DeformationHessian, k: SpectralFunction, x, scale=1.0):
    """All pointwise tensors at one interior point, computed the readable way."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    G = u.hessian(x)[0]
    g, V = np.linalg.eigh(G)
    if g[0] <= 0:
        raise NotConvex("D^2 u not positive definite")
    R = (V / np.sqrt(g)) @ V.T
    Hx = H.at(x)[0]
    M = R @ Hx @ R
    N = M.conj().T @ M
    eig = spectral.hermitian_eig(N)
    lam = np.maximum(eig.eigenvalues, 0.0)
    if scale > 0:
        k.check_domain(lam)
    F = (eig.vectors * (scale * k.phi(lam))) @ eig.vectors.conj().T
    T = R @ (np.eye(len(g)) + 2.0 * F) @ R
    return TensorSample(x[0], G, R, M, N, eig, 0.5 * (T + T.conj().T), float(lam[-1]))


def alpha_bar_alpha(G, H):
    """The non-normal product ``G^{-1} Hbar G^{-1} H``."""
    Gi = np.linalg.inv(G)
    return Gi @ np.conj(H) @ Gi @ H


# ------------------------------------------------------------- discretization


def _pack_sym(X):
    """(..., n, n) -> (..., q) with components (11,) or (11, 22, 12)."""
    if X.shape[-1] == 1:
        return X[..., 0, :1]
    return np.stack([X[..., 0, 0], X[..., 1, 1], X[..., 0, 1]], axis=-1)


def trace_weights(n):
    return np.array([1.0]) if n == 1 else np.array([1.0, 1.0, 2.0])


class Discretization:
    """Quadrature-level data for a fixed (P, basis, H, k, A).

    Coefficient vectors ``c`` parametrize ``u = u_G + sum_j c_j phi_j``; every
    quantity is affine or smooth in c, so the energy is convex in c.
    """

    def __init__(
        self,
        basis: GalerkinBasis,
        H: DeformationHessian,
        k: SpectralFunction,
        A,
        quad_order=None,
        boundary_scale=1.0,
        backend=None,
    ):
        P = basis.P
        self.P, self.basis, self.H, self.k = P, basis, H, k
        self.A = np.asarray(A, dtype=float)
        self.backend = backend
        order = quad_order or 2 * basis.degree + 4
        self.order = order
        self.qi = interior_quadrature(P, order)
        self.qb = boundary_quadrature(P, order, boundary_scale)
        self.w = self.qi.weights
        self.G0 = GuilleminPotential(P).hessian(self.qi.points)
        self.Dphi = basis.hessians(self.qi.points)
        self.Phi = np.swapaxes(_pack_sym(self.Dphi), 1, 2)  # (m, q, J)
        self.trw = trace_weights(P.dim)
        self.vals = basis.values(self.qi.points)
        self.bvals = basis.values(self.qb.points)
        self.Hn = H.at(self.qi.points)
        self.An = affine_eval(self.A, self.qi.points)
        self.boundary_load = self.qb.weights @ self.bvals
        self.area_load = (self.w * self.An) @ self.vals
        self.load = self.boundary_load - self.area_load
        self._ref = {}

    @property
    def size(self):
        return len(self.basis)

    def hessian_field(self, c):
        return self.G0 + np.einsum("mjab,j->mab", self.Dphi, c)

    def tensors(self, c, scale=1.0) -> TensorBatch:
        return evaluate(self.hessian_field(c), self.Hn, self.k, scale, self.backend)

    def residual(self, c, scale=1.0, tb: TensorBatch | None = None):
        tb = tb or self.tensors(c, scale)
        Tp = _pack_sym(tb.T.real) * self.trw
        return np.einsum("m,mq,mqj->j", self.w, Tp, self.Phi) - self.load

    def _reference(self, scale):
        if scale not in self._ref:
            tb = evaluate(self.G0, self.Hn, self.k, scale, self.backend)
            self._ref[scale] = (tb.logdet, tb.fval)
        return self._ref[scale]

    def energy(self, c, scale=1.0, tb: TensorBatch | None = None):
        """HK(u_c) - HK(u_G); the log-det enters only as a bounded difference."""
        tb = tb or self.tensors(c, scale)
        logdet0, f0 = self._reference(scale)
        return float(
            np.dot(c, self.load)
            - self.w @ (tb.logdet - logdet0)
            + self.w @ (np.nan_to_num(tb.fval) - np.nan_to_num(f0))
        )

    def energy_hessian(self, c, scale=1.0):
        """Exact Hessian of the discrete energy (= -dr/dc), symmetrized."""
        G = self.hessian_field(c)
        C = kernels.tensor_tangent(G, self.Hn, self.k, scale, self.backend)
        # K_ij = -sum_{m,q,p} w_m trw_q C_mqp Phi_mpi Phi_mqj, as one GEMM
        X = (C @ self.Phi) * (self.w[:, None, None] * self.trw[None, :, None])
        J = self.Phi.shape[-1]
        K = -X.reshape(-1, J).T @ self.Phi.reshape(-1, J)
        return 0.5 * (K + K.T)

    def jacobian_fd(self, c, scale=1.0, rel_step=1e-5):
        """``-dr/dc`` by central differences of the residual, not symmetrized."""
        c = np.asarray(c, dtype=float)
        J = np.empty((self.size, self.size))
        for i in range(self.size):
            h = rel_step * (1.0 + abs(c[i]))
            e = np.zeros_like(c)
            e[i] = h
            J[:, i] = -(self.residual(c + e, scale) - self.residual(c - e, scale)) / (2 * h)
        return J

    def margins(self, c, scale=1.0):
        """Feasibility margins; raises NotConvex / DomainExceeded when violated."""
        tb = self.tensors(c, scale)
        return {
            "min_eig_G": float(np.min(tb.minG)),
            "lambda_max": float(np.max(tb.lam)) if tb.lam.size else 0.0,
            "min_eig_T": float(np.min(tb.minT)),
        }

    def is_feasible(self, c, scale=1.0):
        try:
            tb = self.tensors(c, scale)
        except (NotConvex, DomainExceeded):
            return False, None
        if scale > 0 and np.isfinite(self.k.lambda_sup):
            if np.max(tb.lam) >= self.k.lambda_sup - DOMAIN_MARGIN:
                return False, None
        if not np.all(np.isfinite(tb.T)):
            return False, None
        return True, tb


# ----------------------------------------------------- generic operations


def _test_values_hessians(testfns, x):
    V = np.real(testfns.values(x))
    Hs = np.real(testfns.hessians(x))
    if V.ndim == 1:
        V, Hs = V[:, None], Hs[:, None]
    return V, Hs


def weak_residual(u: PotentialField, H, k, A, testfns, order=12, scale=1.0, boundary_scale=1.0):
    """``r_j = int Tr(T D^2 phi_j) - int_dP phi_j + int A phi_j`` for any test set."""
    qi = interior_quadrature(u.P, order)
    qb = boundary_quadrature(u.P, order, boundary_scale)
    tb = evaluate(u.hessian(qi.points), H.at(qi.points), k, scale)
    V, Hs = _test_values_hessians(testfns, qi.points)
    Vb, _ = _test_values_hessians(testfns, qb.points)
    stiff = np.einsum("m,mab,mjab->j", qi.weights, tb.T.real, Hs)
    return stiff - qb.weights @ Vb + (qi.weights * affine_eval(A, qi.points)) @ V


def energy(u: PotentialField, H, k, A, u_ref: PotentialField | None = None, order=12, scale=1.0):
    """``HK(u) - HK(u_ref)`` (u_ref defaults to the Guillemin potential)."""
    u_ref = u_ref or PotentialField(u.P)
    qi = interior_quadrature(u.P, order)
    qb = boundary_quadrature(u.P, order)
    dv_b = u.correction_values(qb.points) - u_ref.correction_values(qb.points)
    dv_i = u.correction_values(qi.points) - u_ref.correction_values(qi.points)
    Hn = H.at(qi.points)
    tb = evaluate(u.hessian(qi.points), Hn, k, scale)
    tr = evaluate(u_ref.hessian(qi.points), Hn, k, scale)
    w = qi.weights
    return float(
        qb.weights @ dv_b
        - w @ (affine_eval(A, qi.points) * dv_i)
        - w @ (tb.logdet - tr.logdet)
        + w @ (tb.fval - tr.fval)
    )


def energy_gradient_check(u: PotentialField, H, k, A, w, step=1e-4, order=12, scale=1.0):
    """Compare the central difference of HK along w with ``-r(w)``.

    ``w`` must provide ``values`` and ``hessians``.  Returns
    ``(fd_derivative, -r(w), discrepancy)``.
    """

    def shifted(s):
        corr = _Sum(u.correction, w, s)
        return PotentialField(u.P, corr)

    ep = energy(shifted(step), H, k, A, u, order, scale)
    em = energy(shifted(-step), H, k, A, u, order, scale)
    fd = (ep - em) / (2 * step)
    r = float(weak_residual(u, H, k, A, _Single(w), order, scale)[0])
    return fd, -r, abs(fd + r)


class _Sum:
    def __init__(self, base, w, s):
        self.base, self.w, self.s = base, w, s

    def values(self, x):
        out = self.s * np.real(self.w.values(x))
        return out if self.base is None else out + np.real(self.base.values(x))

    def hessians(self, x):
        out = self.s * np.real(self.w.hessians(x))
        return out if self.base is None else out + np.real(self.base.hessians(x))


class _Single:
    def __init__(self, w):
        self.w = w

    def values(self, x):
        return np.real(self.w.values(x))[:, None]

    def hessians(self, x):
        return np.real(self.w.hessians(x))[:, None]


def _t_field(u, H, k, pts, scale):
    tb = evaluate(u.hessian(pts), H.at(pts), k, scale)
    return tb.T.real


def divergence_fd(u: PotentialField, H, k, x, fd_step=None, scale=1.0):
    """``T^{ab}_{,ab}`` at points x by fourth-order central differences.

    Default step ``min(1e-3, dist(x, dP)/4)`` per point.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    P = u.P
    n = P.dim
    dist = P.distance_to_boundary(x)
    h = np.minimum(1e-3, dist / 4.0) if fd_step is None else np.full(len(x), float(fd_step))
    if n == 1:
        offs = np.array([[-2.0], [-1.0], [0.0], [1.0], [2.0]])
    else:
        offs = np.array(
            [[i, 0.0] for i in (-2, -1, 0, 1, 2)]
            + [[0.0, j] for j in (-2, -1, 1, 2)]
            + [[s * a, t * a] for a in (1, 2) for s in (-1, 1) for t in (-1, 1)]
        )
    pts = x[:, None, :] + h[:, None, None] * offs[None, :, :]
    flat = pts.reshape(-1, n)
    if np.any(P.ell(flat) <= 0):
        raise StencilLeavesPolytope("finite-difference stencil leaves the polytope")
    T = _t_field(u, H, k, flat, scale).reshape(len(x), len(offs), n, n)
    c5 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
    h2 = h * h
    if n == 1:
        return np.einsum("s,ms->m", c5, T[:, :, 0, 0]) / h2
    txx = np.einsum("s,ms->m", c5, T[:, 0:5, 0, 0]) / h2
    yy = T[:, [5, 6, 2, 7, 8], 1, 1]
    tyy = np.einsum("s,ms->m", c5, yy) / h2
    # mixed derivative: Richardson combination of two cross stencils
    off = T[:, 9:, 0, 1]  # order: a=1: (-,-),(-,+),(+,-),(+,+); a=2: same
    cross1 = off[:, 0] - off[:, 1] - off[:, 2] + off[:, 3]
    cross2 = off[:, 4] - off[:, 5] - off[:, 6] + off[:, 7]
    txy = (16.0 * cross1 - cross2) / (48.0 * h2)
    return txx + tyy + 2.0 * txy


def strong_residual_at(u: PotentialField, H, k, A, x, fd_step=None, scale=1.0):
    """``-T^{ab}_{,ab}(x) - A(x)``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return -divergence_fd(u, H, k, x, fd_step, scale) - affine_eval(A, x)


def ibp_terms(u: PotentialField, H, k, v, order=14, mode="fd", scale=1.0, boundary_scale=1.0):
    """Terms of the integration-by-parts identity for a test function v.

    Returns ``(lhs, interior, boundary)`` with
    lhs = int Tr(T D^2 v), interior = int v T^{ab}_{,ab}, boundary = int_dP v.
    ``mode='exact'`` uses the closed-form divergence (H = 0, u = u_G only).
    """
    qi = interior_quadrature(u.P, order)
    qb = boundary_quadrature(u.P, order, boundary_scale)
    pts = qi.points
    T = _t_field(u, H, k, pts, scale)
    lhs = float(np.einsum("m,mab,mab->", qi.weights, T, np.real(v.hessians(pts))))
    if mode == "exact":
        if u.correction is not None or not H.is_zero:
            raise ValueError("exact divergence only available for u_G with H = 0")
        div = -u.guillemin.abreu_scalar(pts)
    else:
        div = divergence_fd(u, H, k, pts, scale=scale)
    interior = float(qi.weights @ (np.real(v.values(pts)) * div))
    boundary = float(qb.weights @ np.real(v.values(qb.points)))
    return lhs, interior, boundary
