"""Independent solution of the one-dimensional deformed equation.

In dimension one the equation reads ``-(T)'' = A`` with

    T = (1 + 2 k'(lambda) lambda) / u'',   lambda = |h''|^2 / (u'')^2.

T vanishes at both endpoints (Guillemin), so T = q where q'' = -A, q = 0 at
the endpoints; q is obtained by quadrature and u'' pointwise by bracketed
root finding, since ``g -> (1 + 2 k'(lambda) lambda) / g`` is strictly
decreasing for convex non-decreasing k.
"""

import warnings

import numpy as np
from scipy import integrate, optimize

from .errors import DomainExceeded, RootBracketFailure


def _q_profile(a, b, A, y):
    """``q(y) = -int_a^y (y - s) A(s) ds + c (y - a)`` with q(b) = 0."""
    A = np.asarray(A, dtype=float)

    def Afun(s):
        return A[0] + A[1] * s

    def Q(x):
        # the requested accuracy is at the rounding level; quad's warning about it is noise
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            return integrate.quad(lambda s: (x - s) * Afun(s), a, x, epsabs=1e-15, epsrel=1e-14)[0]

    slope = Q(b) / (b - a)
    return np.array([-Q(x) + slope * (x - a) for x in y])


def oracle_1d(P, H, k, A, mesh=200, points=None, scale=1.0):
    """``(y, u''(y))`` on interior mesh points of the interval P.

    ``H`` is a one-dimensional DeformationHessian; ``mesh`` is the number of
    uniform subintervals (the endpoints are excluded) unless ``points`` is given.
    """
    a, b = float(P.vertices[0, 0]), float(P.vertices[1, 0])
    if points is None:
        y = a + (b - a) * np.arange(1, mesh) / mesh
    else:
        y = np.asarray(points, dtype=float).ravel()
    q = _q_profile(a, b, A, y)
    hv = np.abs(H.at(y[:, None])[:, 0, 0])
    lim = k.domain_limit
    out = np.empty_like(y)
    for i, (qi, h) in enumerate(zip(q, hv)):
        if not qi > 0:
            raise RootBracketFailure(f"q({y[i]:.4g}) = {qi:.3g} is not positive")

        def F(g):
            lam = (h / g) ** 2
            return (1.0 + 2.0 * scale * lam * k.dk(lam)) / g - qi

        if h == 0.0:
            out[i] = 1.0 / qi
            continue
        if np.isfinite(lim):
            lo = h / np.sqrt(lim)
            if F(lo) <= 0:
                raise DomainExceeded(f"no solution with lambda < {k.lambda_sup} at y={y[i]:.4g}")
        else:
            lo = min(1.0 / qi, h) * 0.5
            while F(lo) <= 0:
                lo *= 0.5
                if lo < 1e-300:
                    raise RootBracketFailure("cannot bracket from below")
        hi = max(2.0 / qi, 2.0 * lo)
        while F(hi) >= 0:
            hi *= 2.0
            if hi > 1e300:
                raise RootBracketFailure("cannot bracket from above")
        out[i] = optimize.brentq(F, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return y, out
