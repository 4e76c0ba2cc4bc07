# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pointwise tensor kernels for n = 1 and n = 2.

Same outputs as ``_tensor_py`` but with closed-form 2x2 eigendecompositions
and no per-node Python overhead.  k is selected by its integer kind:
0 linear, 1 quadratic, 2 hyperkahler, 3 polynomial (coefficients in params).
"""

import numpy as np

from libc.math cimport atan2, cos, hypot, log, sin, sqrt, fabs, NAN

cdef double GAP = 1e-8


cdef inline void kfun(int kind, const double[::1] p, double x, double* k0, double* k1, double* k2) noexcept nogil:
    cdef double s, a, b, c
    cdef Py_ssize_t i, m
    if kind == 0:
        k0[0] = x
        k1[0] = 1.0
        k2[0] = 0.0
    elif kind == 1:
        k0[0] = 0.5 * x * x
        k1[0] = x
        k2[0] = 1.0
    elif kind == 2:
        if x > 1.0:
            k0[0] = NAN
            k1[0] = NAN
            k2[0] = NAN
            return
        s = sqrt(1.0 - x)
        k0[0] = 1.0 - s + log(0.5 * (1.0 + s))
        k1[0] = 0.5 / (1.0 + s)
        k2[0] = 0.25 / (s * (1.0 + s) * (1.0 + s))
    else:
        m = p.shape[0]
        a = 0.0
        b = 0.0
        c = 0.0
        for i in range(m - 1, -1, -1):
            c = c * x + 2.0 * b
            b = b * x + a
            a = a * x + p[i]
        k0[0] = a
        k1[0] = b
        k2[0] = c


cdef inline void phi_fun(int kind, const double[::1] p, double s, double x, double* f, double* df) noexcept nogil:
    """s * x k'(x) and its derivative."""
    cdef double k0, k1, k2
    if s == 0.0:
        f[0] = 0.0
        df[0] = 0.0
        return
    kfun(kind, p, x, &k0, &k1, &k2)
    f[0] = s * x * k1
    df[0] = s * (k1 + x * k2)


cdef inline void sym_eig2(double a, double b, double d, double* w, double* V) noexcept nogil:
    """Ascending eigenvalues and column eigenvectors (row-major V) of [[a, b], [b, d]]."""
    cdef double m = 0.5 * (a + d)
    cdef double r = hypot(0.5 * (a - d), b)
    cdef double t = 0.5 * atan2(2.0 * b, a - d)
    cdef double c = cos(t)
    cdef double sn = sin(t)
    w[0] = m - r
    w[1] = m + r
    V[0] = -sn
    V[1] = c
    V[2] = c
    V[3] = sn


cdef inline void herm_eig2(double p, double complex q, double r, double* w, double complex* U) noexcept nogil:
    """Eigen-decomposition of [[p, q], [conj q, r]]: U = diag(1, e^{-i theta}) V."""
    cdef double aq = hypot(q.real, q.imag)
    cdef double th = atan2(q.imag, q.real)
    cdef double V[4]
    cdef double complex ph = cos(th) - 1j * sin(th)
    sym_eig2(p, aq, r, w, V)
    U[0] = V[0]
    U[1] = V[1]
    U[2] = ph * V[2]
    U[3] = ph * V[3]


cdef inline void mm(const double complex* A, const double complex* B, double complex* C) noexcept nogil:
    cdef double complex c0 = A[0] * B[0] + A[1] * B[2]
    cdef double complex c1 = A[0] * B[1] + A[1] * B[3]
    cdef double complex c2 = A[2] * B[0] + A[3] * B[2]
    cdef double complex c3 = A[2] * B[1] + A[3] * B[3]
    C[0] = c0
    C[1] = c1
    C[2] = c2
    C[3] = c3


cdef inline void ct(const double complex* A, double complex* C) noexcept nogil:
    cdef double complex a1 = A[1]
    C[0] = A[0].conjugate()
    C[1] = A[2].conjugate()
    C[2] = a1.conjugate()
    C[3] = A[3].conjugate()


cdef inline void mm3(const double complex* A, const double complex* B, const double complex* C, double complex* out) noexcept nogil:
    cdef double complex tmp[4]
    mm(A, B, tmp)
    mm(tmp, C, out)


cdef inline void spectral_apply(const double complex* U, const double* f, double complex* out) noexcept nogil:
    """U diag(f) U^*."""
    cdef double complex Uh[4]
    cdef double complex D[4]
    ct(U, Uh)
    D[0] = U[0] * f[0]
    D[1] = U[1] * f[1]
    D[2] = U[2] * f[0]
    D[3] = U[3] * f[1]
    mm(D, Uh, out)


cdef inline void schur_conj(const double complex* U, const double* gam, const double complex* E, double complex* out) noexcept nogil:
    """U (gam o (U^* E U)) U^*."""
    cdef double complex Uh[4]
    cdef double complex Ep[4]
    ct(U, Uh)
    mm3(Uh, E, U, Ep)
    Ep[0] = Ep[0] * gam[0]
    Ep[1] = Ep[1] * gam[1]
    Ep[2] = Ep[2] * gam[2]
    Ep[3] = Ep[3] * gam[3]
    mm3(U, Ep, Uh, out)


cdef inline double min_eig_herm2(const double complex* T) noexcept nogil:
    cdef double a = T[0].real
    cdef double d = T[3].real
    return 0.5 * (a + d) - hypot(0.5 * (a - d), hypot(T[1].real, T[1].imag))


cdef inline void _core2(double g00, double g01, double g11, double complex h00, double complex h01, double complex h11,
                        int kind, const double[::1] p, double s,
                        double* gw, double complex* V, double complex* R, double complex* H,
                        double complex* M, double* lam, double complex* U, double* phi, double* dphi,
                        double complex* Ipp, double complex* T, double* fval) noexcept nogil:
    cdef double Vr[4]
    cdef double f[2]
    cdef double complex Mh[4]
    cdef double complex N[4]
    cdef double complex Phi[4]
    cdef double k0, k1, k2
    cdef int a
    sym_eig2(g00, g01, g11, gw, Vr)
    for a in range(4):
        V[a] = Vr[a]
    f[0] = gw[0] ** -0.5
    f[1] = gw[1] ** -0.5
    spectral_apply(V, f, R)
    H[0] = h00
    H[1] = h01
    H[2] = h01
    H[3] = h11
    mm3(R, H, R, M)
    ct(M, Mh)
    mm(Mh, M, N)
    herm_eig2(N[0].real, 0.5 * (N[1] + N[2].conjugate()), N[3].real, lam, U)
    fval[0] = 0.0
    for a in range(2):
        if lam[a] < 0.0:
            lam[a] = 0.0
        phi_fun(kind, p, s, lam[a], &phi[a], &dphi[a])
        if s != 0.0:
            kfun(kind, p, lam[a], &k0, &k1, &k2)
            fval[0] += s * k0
    spectral_apply(U, phi, Phi)
    Ipp[0] = 1.0 + 2.0 * Phi[0]
    Ipp[1] = 2.0 * Phi[1]
    Ipp[2] = 2.0 * Phi[2]
    Ipp[3] = 1.0 + 2.0 * Phi[3]
    mm3(R, Ipp, R, T)
    T[0] = T[0].real
    T[3] = T[3].real
    T[1] = 0.5 * (T[1] + T[2].conjugate())
    T[2] = T[1].conjugate()


cdef inline void divdiff2(const double* x, const double* fx, const double* dfx, double mid01, double* gam) noexcept nogil:
    cdef double diff = x[0] - x[1]
    cdef double sc = fabs(x[0]) + fabs(x[1])
    if sc < 1.0:
        sc = 1.0
    gam[0] = dfx[0]
    gam[3] = dfx[1]
    if fabs(diff) < GAP * sc:
        gam[1] = mid01
    else:
        gam[1] = (fx[0] - fx[1]) / diff
    gam[2] = gam[1]


def tensor_field(const double[:, :, ::1] G, const double complex[:, :, ::1] H, int kind, const double[::1] params, double scale):
    """Return (T, lam, fval, logdet, minT) as in the numpy fallback."""
    cdef Py_ssize_t m = G.shape[0]
    cdef Py_ssize_t n = G.shape[1]
    if n not in (1, 2):
        raise ValueError("compiled kernel supports n = 1, 2")
    T_out = np.empty((m, n, n), dtype=np.complex128)
    lam_out = np.empty((m, n))
    fval_out = np.empty(m)
    logdet_out = np.empty(m)
    minT_out = np.empty(m)
    cdef double complex[:, :, ::1] To = T_out
    cdef double[:, ::1] lo = lam_out
    cdef double[::1] fo = fval_out
    cdef double[::1] ldo = logdet_out
    cdef double[::1] mto = minT_out
    cdef Py_ssize_t i
    cdef double g, hh, lm, ph, dph, k0, k1, k2, fv
    cdef double gw[2]
    cdef double lam[2]
    cdef double phi[2]
    cdef double dphi[2]
    cdef double complex V[4]
    cdef double complex R[4]
    cdef double complex Hm[4]
    cdef double complex M[4]
    cdef double complex U[4]
    cdef double complex Ipp[4]
    cdef double complex T[4]
    with nogil:
        if n == 1:
            for i in range(m):
                g = G[i, 0, 0]
                hh = H[i, 0, 0].real * H[i, 0, 0].real + H[i, 0, 0].imag * H[i, 0, 0].imag
                lm = hh / (g * g)
                phi_fun(kind, params, scale, lm, &ph, &dph)
                fo[i] = 0.0
                if scale != 0.0:
                    kfun(kind, params, lm, &k0, &k1, &k2)
                    fo[i] = scale * k0
                To[i, 0, 0] = (1.0 + 2.0 * ph) / g
                lo[i, 0] = lm
                ldo[i] = log(g)
                mto[i] = (1.0 + 2.0 * ph) / g
        else:
            for i in range(m):
                _core2(G[i, 0, 0], 0.5 * (G[i, 0, 1] + G[i, 1, 0]), G[i, 1, 1],
                       H[i, 0, 0], 0.5 * (H[i, 0, 1] + H[i, 1, 0]), H[i, 1, 1],
                       kind, params, scale, gw, V, R, Hm, M, lam, U, phi, dphi, Ipp, T, &fv)
                To[i, 0, 0] = T[0]
                To[i, 0, 1] = T[1]
                To[i, 1, 0] = T[2]
                To[i, 1, 1] = T[3]
                lo[i, 0] = lam[0]
                lo[i, 1] = lam[1]
                fo[i] = fv
                ldo[i] = log(gw[0]) + log(gw[1])
                mto[i] = min_eig_herm2(T)
    return T_out, lam_out, fval_out, logdet_out, minT_out


def tensor_tangent(const double[:, :, ::1] G, const double complex[:, :, ::1] H, int kind, const double[::1] params, double scale):
    """Derivative of Re T in G, shape (m, q, q): [node, T-component, G-direction]."""
    cdef Py_ssize_t m = G.shape[0]
    cdef Py_ssize_t n = G.shape[1]
    if n not in (1, 2):
        raise ValueError("compiled kernel supports n = 1, 2")
    cdef Py_ssize_t q = 1 if n == 1 else 3
    out = np.empty((m, q, q))
    cdef double[:, :, ::1] o = out
    cdef Py_ssize_t i, w, a
    cdef double g, hh, lm, ph, dph
    cdef double gw[2]
    cdef double lam[2]
    cdef double phi[2]
    cdef double dphi[2]
    cdef double rg[2]
    cdef double drg[2]
    cdef double gam_r[4]
    cdef double gam_p[4]
    cdef double mid, pm, dpm, fv
    cdef double complex V[4]
    cdef double complex R[4]
    cdef double complex Hm[4]
    cdef double complex M[4]
    cdef double complex Mh[4]
    cdef double complex U[4]
    cdef double complex Ipp[4]
    cdef double complex T[4]
    cdef double complex W[4]
    cdef double complex dR[4]
    cdef double complex dM[4]
    cdef double complex dMh[4]
    cdef double complex dN[4]
    cdef double complex dPhi[4]
    cdef double complex t1[4]
    cdef double complex t2[4]
    cdef double complex t3[4]
    with nogil:
        if n == 1:
            for i in range(m):
                g = G[i, 0, 0]
                hh = H[i, 0, 0].real * H[i, 0, 0].real + H[i, 0, 0].imag * H[i, 0, 0].imag
                lm = hh / (g * g)
                phi_fun(kind, params, scale, lm, &ph, &dph)
                # lambda = |h|^2 / g^2, d lambda / dg = -2 lambda / g
                o[i, 0, 0] = -(1.0 + 2.0 * ph) / (g * g) - 4.0 * dph * lm / (g * g)
        else:
            for i in range(m):
                _core2(G[i, 0, 0], 0.5 * (G[i, 0, 1] + G[i, 1, 0]), G[i, 1, 1],
                       H[i, 0, 0], 0.5 * (H[i, 0, 1] + H[i, 1, 0]), H[i, 1, 1],
                       kind, params, scale, gw, V, R, Hm, M, lam, U, phi, dphi, Ipp, T, &fv)
                for a in range(2):
                    rg[a] = gw[a] ** -0.5
                    drg[a] = -0.5 * gw[a] ** -1.5
                divdiff2(gw, rg, drg, -0.5 * (0.5 * (gw[0] + gw[1])) ** -1.5, gam_r)
                phi_fun(kind, params, scale, 0.5 * (lam[0] + lam[1]), &pm, &dpm)
                divdiff2(lam, phi, dphi, dpm, gam_p)
                ct(M, Mh)
                for w in range(3):
                    W[0] = 1.0 if w == 0 else 0.0
                    W[3] = 1.0 if w == 1 else 0.0
                    W[1] = 1.0 if w == 2 else 0.0
                    W[2] = W[1]
                    schur_conj(V, gam_r, W, dR)
                    mm3(dR, Hm, R, t1)
                    mm3(R, Hm, dR, t2)
                    for a in range(4):
                        dM[a] = t1[a] + t2[a]
                    ct(dM, dMh)
                    mm(dMh, M, t1)
                    mm(Mh, dM, t2)
                    for a in range(4):
                        dN[a] = t1[a] + t2[a]
                    schur_conj(U, gam_p, dN, dPhi)
                    mm3(dR, Ipp, R, t1)
                    mm3(R, dPhi, R, t2)
                    mm3(R, Ipp, dR, t3)
                    o[i, 0, w] = t1[0].real + 2.0 * t2[0].real + t3[0].real
                    o[i, 1, w] = t1[3].real + 2.0 * t2[3].real + t3[3].real
                    o[i, 2, w] = t1[1].real + 2.0 * t2[1].real + t3[1].real
    return out
