"""Delzant polytopes in dimension 1 and 2, their measures and quadrature rules.

A polytope is given by facets ``l_i(x) = <nu_i, x> - c_i >= 0`` with primitive
inward integer normals.  The boundary measure on the facet ``{l_i = 0}`` is the
Euclidean length divided by ``|nu_i|``, i.e. the measure with
``dsigma ^ dl_i = +-dmu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import (
    BoundaryEvaluation,
    NonPrimitiveNormal,
    NotBounded,
    NotDelzant,
    PolytopeError,
    RedundantFacet,
)

_VERTEX_TOL = 1e-10


@dataclass(frozen=True)
class Facet:
    normal: tuple[int, ...]
    offset: Fraction

    def __post_init__(self):
        object.__setattr__(self, "normal", tuple(int(v) for v in self.normal))
        object.__setattr__(self, "offset", _as_fraction(self.offset))

    @property
    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.normal))


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**9)
    return Fraction(value)


@dataclass(frozen=True, eq=False)
class DelzantPolytope:
    """Validated Delzant polytope.  Build with :func:`polygon_from_facets`."""

    dim: int
    facets: tuple[Facet, ...]
    vertices: np.ndarray
    # for each facet, the indices (into ``vertices``) of its two endpoints;
    # in dimension 1 a facet is a single vertex
    facet_vertices: tuple[tuple[int, ...], ...] = field(repr=False)

    @cached_property
    def normals(self) -> np.ndarray:
        return np.array([f.normal for f in self.facets], dtype=float)

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.array([float(f.offset) for f in self.facets])

    def ell(self, x) -> np.ndarray:
        """Affine facet functions at points ``x`` of shape (m, n); returns (m, r)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return x @ self.normals.T - self.offsets

    def contains(self, x, margin: float = 0.0) -> np.ndarray:
        return np.all(self.ell(x) > margin, axis=-1)

    def distance_to_boundary(self, x) -> np.ndarray:
        return np.min(self.ell(x) / np.linalg.norm(self.normals, axis=1), axis=-1)

    @cached_property
    def volume(self) -> float:
        if self.dim == 1:
            return float(self.vertices[1, 0] - self.vertices[0, 0])
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @cached_property
    def facet_measures(self) -> np.ndarray:
        """sigma of each facet."""
        if self.dim == 1:
            return np.ones(len(self.facets))
        out = []
        for f, (i, j) in zip(self.facets, self.facet_vertices):
            out.append(np.linalg.norm(self.vertices[j] - self.vertices[i]) / f.norm)
        return np.array(out)

    @cached_property
    def boundary_measure(self) -> float:
        return float(np.sum(self.facet_measures))

    @cached_property
    def barycenter(self) -> np.ndarray:
        """Mean of the vertices (an interior point, used as the fan centre)."""
        return self.vertices.mean(axis=0)

    @cached_property
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def __repr__(self):
        facets = ", ".join(f"({list(f.normal)}, {f.offset})" for f in self.facets)
        return f"DelzantPolytope(dim={self.dim}, facets=[{facets}])"


def polygon_from_facets(facets: Sequence) -> DelzantPolytope:
    """Validate facet data and enumerate vertices.

    ``facets`` is a sequence of :class:`Facet` or ``(normal, offset)`` pairs.
    Raises NotBounded, NotDelzant, NonPrimitiveNormal or RedundantFacet.
    """
    facets = tuple(f if isinstance(f, Facet) else Facet(tuple(f[0]), f[1]) for f in facets)
    if not facets:
        raise NotBounded("no facets given")
    dim = len(facets[0].normal)
    if dim not in (1, 2) or any(len(f.normal) != dim for f in facets):
        raise PolytopeError("only dimensions 1 and 2 are supported, with consistent normals")
    for f in facets:
        if math.gcd(*f.normal) != 1:
            raise NonPrimitiveNormal(f"normal {f.normal} is not primitive")
    if dim == 1:
        return _interval(facets)
    return _polygon(facets)


def _interval(facets):
    if len(facets) < 2:
        raise NotBounded("an interval needs two facets")
    lower = [f for f in facets if f.normal[0] == 1]
    upper = [f for f in facets if f.normal[0] == -1]
    if not lower or not upper:
        raise NotBounded("interval is unbounded")
    if len(lower) > 1 or len(upper) > 1:
        raise RedundantFacet("interval has redundant facets")
    a = float(lower[0].offset)
    b = -float(upper[0].offset)
    if not b > a:
        raise NotBounded("interval has empty interior")
    ordered = (lower[0], upper[0])
    return DelzantPolytope(1, ordered, np.array([[a], [b]]), ((0,), (1,)))


def _polygon(facets):
    if len(facets) < 3:
        raise NotBounded("a polygon needs at least three facets")
    normals = np.array([f.normal for f in facets], dtype=float)
    angles = np.sort(np.arctan2(normals[:, 1], normals[:, 0]))
    gaps = np.diff(np.concatenate([angles, [angles[0] + 2 * np.pi]]))
    if np.max(gaps) >= np.pi - 1e-12:
        raise NotBounded("facet normals do not positively span the plane")
    offsets = np.array([float(f.offset) for f in facets])

    points = []
    for i in range(len(facets)):
        for j in range(i + 1, len(facets)):
            m = normals[[i, j]]
            if abs(np.linalg.det(m)) < 1e-14:
                continue
            p = np.linalg.solve(m, offsets[[i, j]])
            if np.all(normals @ p - offsets >= -_VERTEX_TOL):
                if not any(np.linalg.norm(p - q) < 1e-9 for q in points):
                    points.append(p)
    if len(points) < 3:
        raise NotBounded("polygon has empty interior")
    pts = np.array(points)
    centre = pts.mean(axis=0)
    order = np.argsort(np.arctan2(pts[:, 1] - centre[1], pts[:, 0] - centre[0]))
    pts = pts[order]
    active = np.abs(pts @ normals.T - offsets) < 1e-9

    facet_vertices = []
    for i, f in enumerate(facets):
        on = np.flatnonzero(active[:, i])
        if len(on) < 2:
            raise RedundantFacet(f"facet {f.normal}, {f.offset} does not support an edge")
        # consecutive in boundary order; orient so the interior is on the left
        a, b = int(on[0]), int(on[1])
        if (b - a) % len(pts) != 1:
            a, b = b, a
        facet_vertices.append((a, b))
    for k in range(len(pts)):
        idx = np.flatnonzero(active[k])
        if len(idx) != 2:
            raise NotDelzant(f"vertex {pts[k]} is not simple")
        det = normals[idx[0], 0] * normals[idx[1], 1] - normals[idx[0], 1] * normals[idx[1], 0]
        if abs(abs(det) - 1.0) > 1e-12:
            raise NotDelzant(f"vertex {pts[k]} has normal determinant {det:g}")
    return DelzantPolytope(2, facets, pts, tuple(facet_vertices))


def interval(a=0, b=1) -> DelzantPolytope:
    return polygon_from_facets([((1,), a), ((-1,), -Fraction(b))])


def unit_square() -> DelzantPolytope:
    return polygon_from_facets([((1, 0), 0), ((0, 1), 0), ((-1, 0), -1), ((0, -1), -1)])


def standard_simplex() -> DelzantPolytope:
    return polygon_from_facets([((1, 0), 0), ((0, 1), 0), ((-1, -1), -1)])


PRESETS = {"interval": interval, "square": unit_square, "simplex": standard_simplex}


def transform_polytope(P: DelzantPolytope, g, t) -> DelzantPolytope:
    """Image of P under ``x -> g x + t`` with g in GL(n, Z)."""
    g = np.asarray(g, dtype=int).reshape(P.dim, P.dim)
    if abs(round(np.linalg.det(g))) != 1:
        raise PolytopeError("g must be unimodular")
    ginv_t = np.round(np.linalg.inv(g).T).astype(int)
    t = [_as_fraction(s) for s in np.atleast_1d(t)]
    new = []
    for f in P.facets:
        nu = tuple(int(v) for v in ginv_t @ np.array(f.normal))
        shift = sum(Fraction(nu[i]) * t[i] for i in range(P.dim))
        new.append(Facet(nu, f.offset + shift))
    return polygon_from_facets(new)


# ---------------------------------------------------------------- quadrature

INTERIOR = "interior"
BOUNDARY = "boundary"


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    measure_tag: str
    order: int
    # facet index of each node (boundary rules only)
    facet_index: np.ndarray | None = None

    def integrate(self, values) -> float | np.ndarray:
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))

    def __len__(self):
        return len(self.weights)


def _gauss01(m):
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


def interior_quadrature(P: DelzantPolytope, order: int) -> QuadratureRule:
    """Rule exact for polynomials of total degree ``order`` on P.

    In dimension 2 the polygon is fanned from its barycentre and each triangle
    gets a collapsed (Duffy) tensor Gauss rule, so no node lies on an edge.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if P.dim == 1:
        s, w = _gauss01(order // 2 + 1)
        a, b = P.vertices[0, 0], P.vertices[1, 0]
        return QuadratureRule(((a + (b - a) * s))[:, None], (b - a) * w, INTERIOR, order)

    m = (order + 3) // 2
    s, ws = _gauss01(m)
    S, Tt = np.meshgrid(s, s, indexing="ij")
    S, Tt = S.ravel(), Tt.ravel()
    W = np.outer(ws, ws).ravel()
    c = P.barycenter
    pts, wts = [], []
    nv = len(P.vertices)
    for i in range(nv):
        v1, v2 = P.vertices[i], P.vertices[(i + 1) % nv]
        e1, e2 = v1 - c, v2 - v1
        jac = abs(e1[0] * e2[1] - e1[1] * e2[0])
        pts.append(c + S[:, None] * e1 + (S * Tt)[:, None] * e2)
        wts.append(W * S * jac)
    return QuadratureRule(np.vstack(pts), np.concatenate(wts), INTERIOR, order)


def boundary_quadrature(P: DelzantPolytope, order: int, measure_scale: float = 1.0) -> QuadratureRule:
    """Gauss rule for the boundary measure; ``measure_scale`` is a fault-injection hook."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if P.dim == 1:
        w = np.ones(2) * measure_scale
        return QuadratureRule(P.vertices.copy(), w, BOUNDARY, order, np.array([0, 1]))
    s, ws = _gauss01(order // 2 + 1)
    pts, wts, idx = [], [], []
    for k, (f, (i, j)) in enumerate(zip(P.facets, P.facet_vertices)):
        a, b = P.vertices[i], P.vertices[j]
        pts.append(a + s[:, None] * (b - a))
        wts.append(ws * P.facet_measures[k])
        idx.append(np.full(len(s), k))
    return QuadratureRule(
        np.vstack(pts), np.concatenate(wts) * measure_scale, BOUNDARY, order, np.concatenate(idx)
    )


# ---------------------------------------------------------------- Guillemin


class GuilleminPotential:
    """Canonical potential ``u_G = sum_i l_i log l_i`` and its derivatives."""

    def __init__(self, P: DelzantPolytope):
        self.P = P

    def _ell(self, x):
        ell = self.P.ell(x)
        if np.any(ell <= 0):
            raise BoundaryEvaluation("Guillemin potential evaluated on or outside the boundary")
        return ell

    def value(self, x) -> np.ndarray:
        ell = self._ell(x)
        return np.sum(ell * np.log(ell), axis=1)

    def gradient(self, x) -> np.ndarray:
        ell = self._ell(x)
        return (np.log(ell) + 1.0) @ self.P.normals

    def hessian(self, x) -> np.ndarray:
        """``sum_i nu_i nu_i^T / l_i``, shape (m, n, n)."""
        ell = self._ell(x)
        nn = np.einsum("ia,ib->iab", self.P.normals, self.P.normals)
        return np.einsum("mi,iab->mab", 1.0 / ell, nn)

    def abreu_scalar(self, x) -> np.ndarray:
        """Exact ``-(G^{-1})^{ab}_{,ab}`` from the closed-form third and fourth derivatives."""
        ell = self._ell(x)
        nu = self.P.normals
        nn = np.einsum("ia,ib->iab", nu, nu)
        G = np.einsum("mi,iab->mab", 1.0 / ell, nn)
        K = np.linalg.inv(G)
        dG = -np.einsum("mi,ic,iab->mcab", ell**-2, nu, nn)
        ddG = 2.0 * np.einsum("mi,ic,id,iab->mcdab", ell**-3, nu, nu, nn)
        KdG = np.einsum("mab,mcbd->mcad", K, dG)  # K dG_c
        # d_d d_c K = K dG_d K dG_c K + K dG_c K dG_d K - K ddG_cd K
        t1 = np.einsum("mdab,mcbe,mef->mdcaf", KdG, KdG, K)
        t3 = np.einsum("mab,mcdbe,mef->mcdaf", K, ddG, K)
        dd = t1 + np.swapaxes(t1, 1, 2) - t3
        # sum over a=c, b=d of d_b d_a K^{ab}: component [m, d, c, a, f] with c=a, d=f
        total = np.einsum("mbaab->m", dd)
        return -total
