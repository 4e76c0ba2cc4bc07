"""Pure-numpy pointwise tensor kernels (fallback for the compiled extension).

For stacks of Hessians G (m, n, n) and deformation Hessians H (m, n, n):

    R = G^{-1/2},  M = R H R,  N = M^* M,
    T = R (1 + 2 s phi(N)) R,  phi(l) = l k'(l),

with s the continuity weight.  ``tensor_tangent`` returns the exact derivative
of Re T with respect to G, packed in the symmetric coordinates
(11,) for n = 1 and (11, 22, 12) for n = 2.
"""

import numpy as np

from . import spectral


def _sym_basis(n):
    if n == 1:
        return np.ones((1, 1, 1))
    E = np.zeros((3, 2, 2))
    E[0, 0, 0] = 1.0
    E[1, 1, 1] = 1.0
    E[2, 0, 1] = E[2, 1, 0] = 1.0
    return E


def _pack(X):
    if X.shape[-1] == 1:
        return X[..., 0, :1]
    return np.stack([X[..., 0, 0], X[..., 1, 1], X[..., 0, 1]], axis=-1)


def _inv_sqrt(G):
    g, V = np.linalg.eigh(G)
    return g, V, (V * g[..., None, :] ** -0.5) @ np.swapaxes(V, -1, -2)


def _ct(X):
    return np.conj(np.swapaxes(X, -1, -2))


def tensor_field(G, H, k, scale=1.0):
    """Return (T, lam, fval, logdet, minT)."""
    G = np.asarray(G, dtype=float)
    H = np.asarray(H, dtype=complex)
    n = G.shape[-1]
    g, V, R = _inv_sqrt(G)
    M = R @ H @ R
    N = _ct(M) @ M
    N = 0.5 * (N + _ct(N))
    lam, U = np.linalg.eigh(N)
    lam = np.maximum(lam, 0.0)
    if scale == 0:
        # weight zero: no deformation, even where k is undefined
        phi = np.zeros_like(lam)
        fval = np.zeros(lam.shape[:-1])
    else:
        with np.errstate(invalid="ignore"):
            phi = scale * k.phi(lam)
            fval = scale * np.sum(k.k(lam), axis=-1)
    Phi = (U * phi[..., None, :]) @ _ct(U)
    T = R @ (np.eye(n) + 2.0 * Phi) @ R
    T = 0.5 * (T + _ct(T))
    logdet = np.sum(np.log(g), axis=-1)
    minT = np.linalg.eigvalsh(T)[..., 0]
    return T, lam, fval, logdet, minT


def tensor_tangent(G, H, k, scale=1.0):
    """Derivative of Re T in G, shape (m, q, q): [node, T-component, G-direction]."""
    G = np.asarray(G, dtype=float)
    H = np.asarray(H, dtype=complex)
    n = G.shape[-1]
    g, V, R = _inv_sqrt(G)
    M = R @ H @ R
    N = _ct(M) @ M
    N = 0.5 * (N + _ct(N))
    lam, U = np.linalg.eigh(N)
    lam = np.maximum(lam, 0.0)
    if scale == 0:
        phi = np.zeros_like(lam)
        gam_phi = np.zeros(lam.shape + lam.shape[-1:])
    else:
        with np.errstate(invalid="ignore"):
            phi = scale * k.phi(lam)
            gam_phi = spectral.divided_differences(
                lam, lambda x: scale * k.phi(x), lambda x: scale * k.dphi(x)
            )
    Phi = (U * phi[..., None, :]) @ _ct(U)
    Ipp = np.eye(n) + 2.0 * Phi
    gam_r = spectral.divided_differences(g, lambda x: x**-0.5, lambda x: -0.5 * x**-1.5)
    Vt = np.swapaxes(V, -1, -2)
    out = []
    for W in _sym_basis(n):
        dR = V @ (gam_r * (Vt @ W @ V)) @ Vt
        dM = dR @ H @ R + R @ H @ dR
        dN = _ct(dM) @ M + _ct(M) @ dM
        dPhi = U @ (gam_phi * (_ct(U) @ dN @ U)) @ _ct(U)
        dT = dR @ Ipp @ R + 2.0 * R @ dPhi @ R + R @ Ipp @ dR
        out.append(_pack(dT.real))
    return np.stack(out, axis=-1)
