"""Extremal affine function, the Donaldson-Futaki functional and a uniform scan.

    L_A(v) = int_dP v dsigma - int_P A v dmu

The scan probes single-crease functions ``v = max(0, <a, x> - b)`` and reports
``min L_A(v) / int_dP v dsigma``.  This ratio is an estimate, not a
certificate, of the uniform stability threshold.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import SingularGram
from .polytope import DelzantPolytope, boundary_quadrature, interior_quadrature


def _affine_basis_values(x):
    x = np.atleast_2d(x)
    return np.hstack([np.ones((len(x), 1)), x])


def extremal_affine(P: DelzantPolytope) -> np.ndarray:
    """Coefficients ``(a0, a1, ..., an)`` of the extremal affine function."""
    qi = interior_quadrature(P, 2)
    qb = boundary_quadrature(P, 2)
    Vi = _affine_basis_values(qi.points)
    Vb = _affine_basis_values(qb.points)
    gram = Vi.T @ (qi.weights[:, None] * Vi)
    rhs = qb.weights @ Vb
    if np.linalg.cond(gram) > 1e12:
        raise SingularGram("affine Gram matrix is singular")
    A = np.linalg.solve(gram, rhs)
    if np.max(np.abs(gram @ A - rhs)) > 1e-10 * max(1.0, np.max(np.abs(rhs))):
        raise SingularGram("affine Gram system solved inaccurately")
    return A


def affine_pairings(P: DelzantPolytope, A) -> np.ndarray:
    """``L_A`` on 1, x^1, ..., x^n."""
    A = np.asarray(A, dtype=float)
    qi = interior_quadrature(P, 2)
    qb = boundary_quadrature(P, 2)
    Ai = A[0] + qi.points @ A[1:]
    return qb.weights @ _affine_basis_values(qb.points) - (qi.weights * Ai) @ _affine_basis_values(qi.points)


@dataclass(frozen=True)
class CreaseFunction:
    """``v(x) = max(0, <a, x> - b)``."""

    a: tuple
    b: float

    def values(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.maximum(0.0, x @ np.asarray(self.a, dtype=float) - self.b)

    __call__ = values


# exact for quadratics on a triangle: edge midpoints
_TRI_BARY = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])


def _clip(poly, a, b):
    """Convex polygon (k, 2) intersected with ``<a, x> >= b``."""
    out = []
    s = poly @ a - b
    k = len(poly)
    for i in range(k):
        p, q = poly[i], poly[(i + 1) % k]
        sp, sq = s[i], s[(i + 1) % k]
        if sp >= 0:
            out.append(p)
        if (sp >= 0) != (sq >= 0):
            out.append(p + (q - p) * (sp / (sp - sq)))
    return np.array(out)


def _crease_integrals(P: DelzantPolytope, A, v: CreaseFunction):
    """Exact ``(int_dP v dsigma, int_P A v dmu)`` by splitting P along the crease."""
    a = np.asarray(v.a, dtype=float)
    A = np.asarray(A, dtype=float)

    def Av(x):
        return (A[0] + x @ A[1:]) * (x @ a - v.b)

    bnd = float(np.sum(v.values(P.vertices))) if P.dim == 1 else 0.0
    if P.dim == 1:
        lo, hi = P.vertices[0, 0], P.vertices[1, 0]
        cut = v.b / a[0]
        lo, hi = (max(lo, cut), hi) if a[0] > 0 else (lo, min(hi, cut))
        if hi <= lo:
            return bnd, 0.0
        g = 0.5 / np.sqrt(3.0)
        pts = np.array([[0.5 * (lo + hi) - g * (hi - lo)], [0.5 * (lo + hi) + g * (hi - lo)]])
        return bnd, float(0.5 * (hi - lo) * np.sum(Av(pts)))

    for k, (i, j) in enumerate(P.facet_vertices):
        seg = _clip_segment(P.vertices[i], P.vertices[j], a, v.b)
        if seg is None:
            continue
        p, q = seg
        frac = np.linalg.norm(q - p) / np.linalg.norm(P.vertices[j] - P.vertices[i])
        mid = 0.5 * (p + q)
        bnd += P.facet_measures[k] * frac * (mid @ a - v.b)
    piece = _clip(P.vertices, a, v.b)
    area = 0.0
    if len(piece) >= 3:
        c = piece[0]
        for i in range(1, len(piece) - 1):
            tri = np.array([c, piece[i], piece[i + 1]])
            e1, e2 = tri[1] - tri[0], tri[2] - tri[0]
            jac = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
            area += jac * np.mean(Av(_TRI_BARY @ tri))
    return float(bnd), float(area)


def _clip_segment(p, q, a, b):
    sp, sq = p @ a - b, q @ a - b
    if sp < 0 and sq < 0:
        return None
    if sp >= 0 and sq >= 0:
        return p, q
    x = p + (q - p) * (sp / (sp - sq))
    return (p, x) if sp >= 0 else (x, q)


def futaki_pairing(P: DelzantPolytope, A, v, order: int = 24) -> float:
    """``L_A(v)``; exact for crease functions, quadrature of ``order`` otherwise."""
    if isinstance(v, CreaseFunction):
        bnd, area = _crease_integrals(P, A, v)
        return bnd - area
    A = np.asarray(A, dtype=float)
    qi = interior_quadrature(P, order)
    qb = boundary_quadrature(P, order)
    fv = v.values if hasattr(v, "values") else v
    Ai = A[0] + qi.points @ A[1:]
    return float(qb.weights @ np.real(fv(qb.points)) - qi.weights @ (Ai * np.real(fv(qi.points))))


@dataclass
class StabilityReport:
    A: list
    values: list = field(repr=False)
    ratios: list = field(repr=False)
    lambda_hat: float = float("nan")
    worst_probe: CreaseFunction | None = None
    affine_pairings: list = field(default_factory=list)

    def to_dict(self):
        return {
            "A": list(self.A),
            "lambda_hat": self.lambda_hat,
            "n_probes": len(self.values),
            "n_negative": int(sum(1 for x in self.values if x < 0)),
            "min_L": float(min(self.values)) if self.values else None,
            "worst_probe": None
            if self.worst_probe is None
            else {"a": list(self.worst_probe.a), "b": self.worst_probe.b},
            "affine_pairings": list(self.affine_pairings),
        }


def transform_probe(v: CreaseFunction, g, t) -> CreaseFunction:
    """The crease function ``v(g^{-1}(x - t))`` on the image of P under ``x -> g x + t``."""
    g = np.atleast_2d(np.asarray(g, dtype=float))
    a2 = np.linalg.solve(g.T, np.asarray(v.a, dtype=float))
    b2 = v.b + float(a2 @ np.atleast_1d(np.asarray(t, dtype=float)))
    return CreaseFunction(tuple(float(x) for x in a2), float(b2))


def sample_probes(P: DelzantPolytope, n_probes: int, seed: int = 0, margin: float = 1e-6):
    """Random crease functions whose crease meets the interior of P."""
    rng = np.random.default_rng(seed)
    probes = []
    for _ in range(n_probes):
        if P.dim == 1:
            a = np.array([1.0 if rng.random() < 0.5 else -1.0])
        else:
            th = rng.uniform(0.0, 2.0 * np.pi)
            a = np.array([np.cos(th), np.sin(th)])
        s = P.vertices @ a
        u = min(max(rng.random(), margin), 1.0 - margin)
        probes.append(CreaseFunction(tuple(float(x) for x in a), float(s.min() + u * (s.max() - s.min()))))
    return probes


def uniform_scan(P: DelzantPolytope, A=None, n_probes: int = 1000, seed: int = 0, probes=None, threads: int = 1):
    """Estimate ``min_v L_A(v) / int_dP v dsigma`` over crease probes."""
    A = extremal_affine(P) if A is None else np.asarray(A, dtype=float)
    probes = sample_probes(P, n_probes, seed) if probes is None else list(probes)

    def one(v):
        bnd, area = _crease_integrals(P, A, v)
        return bnd - area, bnd

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            res = list(pool.map(one, probes))
    else:
        res = [one(v) for v in probes]
    values = [r[0] for r in res]
    ratios = [r[0] / r[1] if r[1] > 0 else -np.inf for r in res]
    i = int(np.argmin(ratios))
    return StabilityReport(
        A=[float(x) for x in A],
        values=values,
        ratios=ratios,
        lambda_hat=float(ratios[i]),
        worst_probe=probes[i],
        affine_pairings=[float(x) for x in affine_pairings(P, A)],
    )
