"""Polynomials on the polytope: monomial polynomials and the Galerkin basis."""

from __future__ import annotations

from itertools import product

import numpy as np
from numpy.polynomial import legendre as L

from .polytope import DelzantPolytope, interior_quadrature


class Polynomial:
    """``sum_k coeffs[k] * x^exps[k]`` (real or complex coefficients)."""

    def __init__(self, exps, coeffs):
        self.exps = np.atleast_2d(np.asarray(exps, dtype=int))
        self.coeffs = np.asarray(coeffs)
        if self.coeffs.ndim != 1 or len(self.coeffs) != len(self.exps):
            raise ValueError("one coefficient per exponent required")

    @property
    def dim(self):
        return self.exps.shape[1]

    @property
    def degree(self):
        return int(self.exps.sum(axis=1).max()) if len(self.exps) else 0

    @classmethod
    def from_dict(cls, terms: dict, dim: int):
        if not terms:
            return cls(np.zeros((1, dim), dtype=int), np.zeros(1))
        exps = list(terms.keys())
        return cls(exps, np.array([terms[e] for e in exps]))

    def __call__(self, x):
        return self.values(x)

    def values(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        mono = np.prod(x[:, None, :] ** self.exps[None, :, :], axis=-1)
        return mono @ self.coeffs

    def deriv(self, axis: int) -> "Polynomial":
        e = self.exps.copy()
        c = self.coeffs * e[:, axis]
        e[:, axis] = np.maximum(e[:, axis] - 1, 0)
        keep = c != 0
        if not np.any(keep):
            return Polynomial(np.zeros((1, self.dim), dtype=int), np.zeros(1, dtype=self.coeffs.dtype))
        return Polynomial(e[keep], c[keep])

    def gradients(self, x):
        return np.stack([self.deriv(a).values(x) for a in range(self.dim)], axis=-1)

    def hessians(self, x):
        n = self.dim
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros((len(x), n, n), dtype=np.result_type(self.coeffs, float))
        for a in range(n):
            da = self.deriv(a)
            for b in range(a, n):
                out[:, a, b] = out[:, b, a] = da.deriv(b).values(x)
        return out

    def __add__(self, other):
        return Polynomial(np.vstack([self.exps, other.exps]), np.concatenate([self.coeffs, other.coeffs]))

    def __mul__(self, s):
        return Polynomial(self.exps, self.coeffs * s)

    __rmul__ = __mul__


def random_polynomial(dim, degree, rng, scale=1.0):
    exps = [e for e in product(range(degree + 1), repeat=dim) if sum(e) <= degree]
    return Polynomial(exps, scale * rng.standard_normal(len(exps)))


def _multi_indices(dim, degree):
    idx = [e for e in product(range(degree + 1), repeat=dim) if sum(e) <= degree]
    return sorted(idx, key=lambda e: (sum(e), tuple(-v for v in e)))


class GalerkinBasis:
    """L2(dmu)-orthonormal polynomials of degree <= d with the affine span removed.

    Built from Legendre products on the bounding box, orthonormalized by two
    passes of weighted QR against a quadrature of order ``2 d + 2``.
    """

    def __init__(self, P: DelzantPolytope, degree: int):
        if degree < 2:
            raise ValueError("basis degree must be >= 2")
        self.P = P
        self.degree = degree
        self.dim = P.dim
        lo, hi = P.bounding_box
        self._lo, self._scale = lo, 2.0 / (hi - lo)
        self.indices = np.array(_multi_indices(P.dim, degree))
        q = interior_quadrature(P, 2 * degree + 2)
        V = self._raw(q.points, 0)
        sw = np.sqrt(q.weights)[:, None]
        C = np.eye(len(self.indices))
        for _ in range(2):
            _, R = np.linalg.qr(sw * (V @ C))
            C = C @ np.linalg.inv(R)
        self._all = C
        self.coef = C[:, P.dim + 1 :]
        self._gram_quad = q

    def __len__(self):
        return self.coef.shape[1]

    def _leg(self, t, d, order):
        # values of P_0..P_d (or their derivatives) at t, shape (m, d+1)
        out = np.empty((len(t), d + 1))
        for j in range(d + 1):
            c = np.zeros(j + 1)
            c[j] = 1.0
            if order:
                c = L.legder(c, order)
            out[:, j] = L.legval(t, c)
        return out

    def _raw(self, x, deriv):
        """Raw Legendre products; deriv is 0 (values) or a tuple of axes."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        t = (x - self._lo) * self._scale - 1.0
        counts = [0] * self.dim
        for a in deriv or ():
            counts[a] += 1
        out = np.ones((len(x), len(self.indices)))
        for a in range(self.dim):
            tab = self._leg(t[:, a], self.degree, counts[a]) * self._scale[a] ** counts[a]
            out *= tab[:, self.indices[:, a]]
        return out

    def values(self, x):
        return self._raw(x, 0) @ self.coef

    def gradients(self, x):
        return np.stack([self._raw(x, (a,)) @ self.coef for a in range(self.dim)], axis=-1)

    def hessians(self, x):
        """Shape (m, J, n, n)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n = self.dim
        out = np.empty((len(x), len(self), n, n))
        for a in range(n):
            for b in range(a, n):
                out[:, :, a, b] = out[:, :, b, a] = self._raw(x, (a, b)) @ self.coef
        return out

    def gram(self):
        q = self._gram_quad
        V = self.values(q.points)
        return V.T @ (q.weights[:, None] * V)

    def affine_projection(self):
        """Inner products of each basis function with 1, x^1, ..., x^n."""
        q = self._gram_quad
        aff = np.hstack([np.ones((len(q.weights), 1)), q.points])
        return aff.T @ (q.weights[:, None] * self.values(q.points))


class BasisExpansion:
    """Correction ``v = sum_j c_j phi_j``."""

    def __init__(self, basis: GalerkinBasis, coeffs):
        self.basis = basis
        self.coeffs = np.asarray(coeffs, dtype=float)

    def values(self, x):
        return self.basis.values(x) @ self.coeffs

    def gradients(self, x):
        return np.einsum("mja,j->ma", self.basis.gradients(x), self.coeffs)

    def hessians(self, x):
        return np.einsum("mjab,j->mab", self.basis.hessians(x), self.coeffs)


class FunctionSet:
    """A list of polynomials used as test functions (same interface as the basis)."""

    def __init__(self, polys):
        self.polys = list(polys)

    def __len__(self):
        return len(self.polys)

    def values(self, x):
        return np.stack([np.real_if_close(p.values(x)) for p in self.polys], axis=-1)

    def hessians(self, x):
        return np.stack([np.real(p.hessians(x)) for p in self.polys], axis=1)
