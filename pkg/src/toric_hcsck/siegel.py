"""Compatible complex structures and the Siegel upper half space.

Conventions: ``Omega0 = [[0, I], [-I, 0]]``, base structure ``J0 = -Omega0``.
A compatible structure J satisfies ``J^2 = -I``, ``J^T Omega0 J = Omega0`` and
``Omega0 J > 0``; ``psi`` sends it to ``(Omega0 J)^{-1/2} . iI`` in the Siegel
half space, where Sp(2n) acts by ``Z -> (AZ + B)(CZ + D)^{-1}``.

On the Siegel side the potential is ``f(Z, S) = sum_a k(lambda_a)`` with
lambda the eigenvalues of ``Y^{-1/2} S Y^{-1} conj(S) Y^{-1/2}``, ``Y = Im Z``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateSpectrum,
    NotBaseTangent,
    NotCompatible,
    NotTangent,
    SingularDenominator,
    SqrtNotSymplectic,
)
from .spectral import BUILTINS, DEGENERACY_GAP, SpectralFunction, builtin_spectral, divided_differences

MAX_N = 4
TOL_STRUCT = 1e-10
TOL_SQRT = 1e-8


def omega0(n: int) -> np.ndarray:
    z, i = np.zeros((n, n)), np.eye(n)
    return np.block([[z, i], [-i, z]])


def base_structure(n: int) -> np.ndarray:
    return -omega0(n)


def _n_of(M) -> int:
    m = np.shape(M)[0]
    if m % 2 or m // 2 > MAX_N:
        raise ValueError(f"expected a 2n x 2n matrix with n <= {MAX_N}, got {np.shape(M)}")
    return m // 2


def _blocks(g):
    n = _n_of(g)
    return g[:n, :n], g[:n, n:], g[n:, :n], g[n:, n:]


def _sym(M):
    return 0.5 * (M + M.T)


def symplectic_defect(g) -> float:
    W = omega0(_n_of(g))
    return float(np.max(np.abs(g.T @ W @ g - W)))


def random_symmetric(n, rng, complex_=False):
    M = rng.standard_normal((n, n))
    if complex_:
        M = M + 1j * rng.standard_normal((n, n))
    return 0.5 * (M + M.T)


def random_symplectic(n: int, seed=None, scale: float = 1.0) -> np.ndarray:
    """``exp(Omega0 S0)`` for a random symmetric S0 with spectral norm ``scale``."""
    if n < 1 or n > MAX_N:
        raise ValueError(f"n must be in 1..{MAX_N}")
    if scale > 2:
        raise ValueError("scale must be <= 2")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    S0 = random_symmetric(2 * n, rng)
    nrm = np.linalg.norm(S0, 2)
    S0 = S0 * (scale / nrm) if nrm > 0 else S0 * 0.0
    return scipy.linalg.expm(omega0(n) @ S0)


# ---------------------------------------------------------------------------
# compatible structures and the identification with the half space


def check_compatible(J, tol: float = TOL_STRUCT) -> None:
    J = np.asarray(J, dtype=float)
    n = _n_of(J)
    W = omega0(n)
    I2 = np.eye(2 * n)
    if np.max(np.abs(J @ J + I2)) > tol:
        raise NotCompatible("J^2 != -I")
    if np.max(np.abs(J.T @ W @ J - W)) > tol:
        raise NotCompatible("J does not preserve Omega0")
    P = W @ J
    if np.max(np.abs(P - P.T)) > tol * max(1.0, np.max(np.abs(P))):
        raise NotCompatible("Omega0 J is not symmetric")
    if np.linalg.eigvalsh(_sym(P))[0] <= 0:
        raise NotCompatible("Omega0 J is not positive definite")


def conjugate_structure(g, J=None) -> np.ndarray:
    """``g J g^{-1}`` (J defaults to the base structure)."""
    J = base_structure(_n_of(g)) if J is None else J
    return g @ J @ np.linalg.inv(g)


def check_siegel(Z, tol: float = 1e-10) -> None:
    Z = np.asarray(Z)
    if np.max(np.abs(Z - Z.T)) > tol * max(1.0, np.max(np.abs(Z))):
        raise ValueError("Z is not symmetric")
    if np.linalg.eigvalsh(_sym(Z.imag))[0] <= 0:
        raise ValueError("Im Z is not positive definite")


def moebius(g, Z) -> np.ndarray:
    """``(AZ + B)(CZ + D)^{-1}``."""
    A, B, C, D = _blocks(np.asarray(g, dtype=float))
    Z = np.asarray(Z, dtype=complex)
    den = C @ Z + D
    if np.linalg.cond(den) > 1e12:
        raise SingularDenominator("CZ + D is singular")
    W = np.linalg.solve(den.T, (A @ Z + B).T).T
    return 0.5 * (W + W.T)


def psi(J) -> np.ndarray:
    """Siegel point of a compatible structure: ``(Omega0 J)^{-1/2} . iI``."""
    J = np.asarray(J, dtype=float)
    check_compatible(J)
    n = _n_of(J)
    w, V = np.linalg.eigh(_sym(omega0(n) @ J))
    R = (V / np.sqrt(w)) @ V.T
    if symplectic_defect(R) > TOL_SQRT:
        raise SqrtNotSymplectic(f"square root defect {symplectic_defect(R):.3g}")
    return moebius(R, 1j * np.eye(n))


# ---------------------------------------------------------------------------
# tangent vectors


def check_tangent(J, A, tol: float = TOL_STRUCT) -> None:
    W = omega0(_n_of(J))
    s = max(1.0, np.max(np.abs(A)))
    if np.max(np.abs(A @ J + J @ A)) > tol * s:
        raise NotTangent("AJ + JA != 0")
    if np.max(np.abs(A.T @ W @ J + J.T @ W @ A)) > tol * s:
        raise NotTangent("A^T Omega0 J + J^T Omega0 A != 0")


def base_tangent(X, Y) -> np.ndarray:
    """``[[X, Y], [Y, -X]]`` for symmetric X, Y."""
    X, Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    return np.block([[X, Y], [Y, -X]])


def split_base_tangent(A, tol: float = TOL_STRUCT):
    """Recover (X, Y) from a tangent at the base structure."""
    A = np.asarray(A, dtype=float)
    n = _n_of(A)
    X, Y, Y2, mX = A[:n, :n], A[:n, n:], A[n:, :n], A[n:, n:]
    s = max(1.0, np.max(np.abs(A)))
    if (
        np.max(np.abs(Y - Y2)) > tol * s
        or np.max(np.abs(X + mX)) > tol * s
        or np.max(np.abs(X - X.T)) > tol * s
        or np.max(np.abs(Y - Y.T)) > tol * s
    ):
        raise NotBaseTangent("not of the form [[X, Y], [Y, -X]] with X, Y symmetric")
    return X, Y


def tangent_push(g, J, A) -> tuple[np.ndarray, np.ndarray]:
    """Push a tangent A at J to ``g A g^{-1}`` at ``g J g^{-1}``."""
    check_tangent(J, A)
    gi = np.linalg.inv(g)
    J2, A2 = g @ J @ gi, g @ A @ gi
    check_tangent(J2, A2, tol=1e-8)
    return J2, A2


def eig_correspondence(A):
    """Sorted spectra of A^2 (2n values) and of ``(X + iY)(X - iY)`` (n values)."""
    X, Y = split_base_tangent(A)
    A = np.asarray(A, dtype=float)
    big = np.sort(np.linalg.eigvals(A @ A).real)
    W = (X + 1j * Y) @ (X - 1j * Y)
    small = np.sort(np.linalg.eigvalsh(0.5 * (W + W.conj().T)))
    return big, small


def complex_structure_map(J, A, Jdot, Adot):
    """``(Jdot, Adot) -> (J Jdot, J Adot + A Jdot)`` on tangents to the tangent bundle."""
    return J @ Jdot, J @ Adot + A @ Jdot


def random_base_tangent(n, rng, scale=1.0):
    return base_tangent(scale * random_symmetric(n, rng), scale * random_symmetric(n, rng))


# ---------------------------------------------------------------------------
# the potential on the half space and its second variation


def siegel_matrix(Z, S) -> np.ndarray:
    """``Y^{-1/2} S Y^{-1} conj(S) Y^{-1/2}`` (Hermitian, positive semidefinite)."""
    Y = _sym(np.asarray(Z).imag)
    w, V = np.linalg.eigh(Y)
    Pm = (V / np.sqrt(w)) @ V.T
    B = Pm @ np.asarray(S) @ Pm
    M = B @ B.conj().T
    return 0.5 * (M + M.conj().T)


def potential_value(Z, S, k: SpectralFunction) -> float:
    lam = np.linalg.eigvalsh(siegel_matrix(Z, S))
    k.check_domain(lam)
    return float(np.sum(k.k(lam)))


def _variation_terms(S, dZ, dS):
    """Coefficients (A0, A1, A2) of ``A(iI + t dZ, S + t dS)`` up to t^2.

    With ``B = P S P``, ``P = (I + t Ydot)^{-1/2}`` and ``A = B B^*``.
    """
    Yd = _sym(np.asarray(dZ).imag)
    n = len(Yd)
    P0, P1, P2 = np.eye(n), -0.5 * Yd, 0.375 * Yd @ Yd
    S, dS = np.asarray(S, dtype=complex), np.asarray(dS, dtype=complex)
    B0 = S
    B1 = P1 @ S + dS + S @ P1
    B2 = P2 @ S + P1 @ dS + P1 @ S @ P1 + dS @ P1 + S @ P2
    h = lambda M: M.conj().T  # noqa: E731
    A0 = B0 @ h(B0)
    A1 = B1 @ h(B0) + B0 @ h(B1)
    A2 = B2 @ h(B0) + B1 @ h(B1) + B0 @ h(B2)
    return A0, A1, A2


def vvf_second_derivative(S, v, k: SpectralFunction, strict: bool = False) -> float:
    """Second derivative of ``t -> f(iI + t dZ, S + t dS)`` at t = 0.

    ``v = (dZ, dS)``.  The first-order variation enters through the
    Daleckii-Krein divided differences of k'; the second-order variation A2 of
    the matrix contributes ``2 tr(k'(A0) A2)``.  With ``strict`` a repeated
    eigenvalue raises DegenerateSpectrum instead of using the confluent limit.
    """
    dZ, dS = v
    A0, A1, A2 = _variation_terms(S, dZ, dS)
    lam, U = np.linalg.eigh(0.5 * (A0 + A0.conj().T))
    k.check_domain(lam)
    if strict and len(lam) > 1:
        gaps = np.diff(lam)
        if np.min(gaps) < DEGENERACY_GAP * max(1.0, 2 * np.max(np.abs(lam))):
            raise DegenerateSpectrum("repeated eigenvalue in the Siegel matrix")
    B1 = U.conj().T @ A1 @ U
    C2 = U.conj().T @ A2 @ U
    gamma = divided_differences(lam, k.dk, k.d2k)
    val = np.sum(gamma * np.abs(B1) ** 2) + 2.0 * np.sum(k.dk(lam) * C2.diagonal().real)
    return float(val)


def vvf_first_order(S, v, k: SpectralFunction) -> float:
    """Only the first-variation part ``sum_ab Gamma_ab |B'_ab|^2`` (always >= 0 for convex k).

    The matrix is quadratic in S, so its second-order variation never vanishes
    for ``dS != 0`` and this is not the second derivative.  For ``dZ = 0``
    the missing term ``2 tr(k'(A0) dS dS^*)`` is nonnegative, so this is a lower
    bound there.
    """
    dZ, dS = v
    A0, A1, _ = _variation_terms(S, dZ, dS)
    lam, U = np.linalg.eigh(0.5 * (A0 + A0.conj().T))
    k.check_domain(lam)
    B1 = U.conj().T @ A1 @ U
    return float(np.sum(divided_differences(lam, k.dk, k.d2k) * np.abs(B1) ** 2))


def vvf_fd(S, v, k: SpectralFunction, step: float = 1e-3) -> float:
    """Richardson-extrapolated central second difference (independent oracle)."""
    dZ, dS = v
    n = np.shape(S)[0]
    Z0 = 1j * np.eye(n)

    def f(t):
        return potential_value(Z0 + t * np.asarray(dZ), np.asarray(S) + t * np.asarray(dS), k)

    f0 = f(0.0)

    def d2(h):
        return (f(h) - 2.0 * f0 + f(-h)) / (h * h)

    return (4.0 * d2(0.5 * step) - d2(step)) / 3.0


def ddc_positivity(S, v, k: SpectralFunction, strict: bool = False) -> float:
    """``v(v f) + Jv(Jv f)`` with ``J(dZ, dS) = (i dZ, i dS)``."""
    dZ, dS = (np.asarray(x, dtype=complex) for x in v)
    return vvf_second_derivative(S, (dZ, dS), k, strict) + vvf_second_derivative(S, (1j * dZ, 1j * dS), k, strict)


def hyperkahler_growth(radii=(0.5, 0.9, 0.99, 0.999, 0.9999), n: int = 2, seed: int = 0):
    """ddc values along ``S = r S1`` with the top eigenvalue ``r^2`` tending to 1."""
    rng = np.random.default_rng(seed)
    k = builtin_spectral("hyperkahler")
    S1 = np.diag(np.linspace(1.0, 0.5, n)).astype(complex)
    v = (random_symmetric(n, rng, True), random_symmetric(n, rng, True))
    return [ddc_positivity(r * S1, v, k) for r in radii]


# ---------------------------------------------------------------------------
# randomized battery


@dataclass
class CheckResult:
    name: str
    worst: float
    tolerance: float
    trials: int

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.worst) and self.worst <= self.tolerance)

    def to_dict(self):
        return {"name": self.name, "worst": self.worst, "tolerance": self.tolerance, "trials": self.trials, "passed": self.passed}


def random_siegel_tangent(n, rng, lam_max=0.8):
    """(S, v) with the top eigenvalue of ``S conj(S)`` equal to ``lam_max``."""
    S = random_symmetric(n, rng, True)
    top = np.linalg.eigvalsh(S @ S.conj()).max()
    S = S * np.sqrt(lam_max * rng.uniform(0.2, 1.0) / top)
    v = (random_symmetric(n, rng, True), random_symmetric(n, rng, True))
    return S, v


def _trial(seed_seq, n):
    rng = np.random.default_rng(seed_seq)
    out = {}
    g1 = random_symplectic(n, rng, rng.uniform(0.1, 1.0))
    g2 = random_symplectic(n, rng, rng.uniform(0.1, 1.0))
    h = random_symplectic(n, rng, rng.uniform(0.1, 1.0))
    Z = moebius(h, 1j * np.eye(n))
    # equivariance of psi
    J = conjugate_structure(h)
    out["psi_equivariance"] = float(np.max(np.abs(psi(conjugate_structure(g1, J)) - moebius(g1, psi(J)))))
    # group law and preservation of the half space
    out["moebius_group_law"] = float(np.max(np.abs(moebius(g1, moebius(g2, Z)) - moebius(g1 @ g2, Z))))
    W = moebius(g1, Z)
    out["halfspace_preserved"] = -float(np.linalg.eigvalsh(_sym(W.imag))[0])
    # eigenvalue correspondence at the base point
    A = random_base_tangent(n, rng)
    big, small = eig_correspondence(A)
    out["eig_correspondence"] = float(np.max(np.abs(big - np.repeat(small, 2))))
    # complex structure squares to -1 at a pushed point
    J2, A2 = tangent_push(g1, base_structure(n), A)
    _, Jd = tangent_push(g1, base_structure(n), random_base_tangent(n, rng))
    Ad = rng.standard_normal((2 * n, 2 * n))
    a, b = complex_structure_map(J2, A2, *complex_structure_map(J2, A2, Jd, Ad))
    out["complex_structure_square"] = float(max(np.max(np.abs(a + Jd)), np.max(np.abs(b + Ad))) / max(1.0, np.max(np.abs(Ad))))
    # second variation against finite differences and positivity
    S, v = random_siegel_tangent(n, rng)
    vvf, ddc = {}, {}
    for name in BUILTINS:
        k = builtin_spectral(name)
        an = vvf_second_derivative(S, v, k)
        fd = vvf_fd(S, v, k)
        vvf[name] = abs(an - fd) / max(1.0, abs(fd))
        ddc[name] = -ddc_positivity(S, v, k)
    out["vvf_vs_fd"] = max(vvf.values())
    out["ddc_positivity"] = max(ddc.values())
    return out


_TOLERANCES = {
    "psi_equivariance": 1e-8,
    "moebius_group_law": 1e-9,
    "halfspace_preserved": 0.0,
    "eig_correspondence": 1e-8,
    "complex_structure_square": 1e-10,
    "vvf_vs_fd": 1e-5,
    "ddc_positivity": 1e-8,
}


def run_battery(n: int = 2, trials: int = 1000, seed: int = 0, threads: int = 1) -> list[CheckResult]:
    """Randomized invariant checks; each trial has its own spawned seed.

    For ``halfspace_preserved`` the recorded value is minus the smallest
    eigenvalue of Im Z, so it must be negative.
    """
    seeds = np.random.SeedSequence(seed).spawn(trials)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda s: _trial(s, n), seeds))
    else:
        results = [_trial(s, n) for s in seeds]
    out = []
    for name, tol in _TOLERANCES.items():
        worst = max(r[name] for r in results)
        out.append(CheckResult(name, float(worst), tol, trials))
    return out


__all__ = [
    "omega0",
    "base_structure",
    "random_symplectic",
    "check_compatible",
    "conjugate_structure",
    "moebius",
    "psi",
    "check_tangent",
    "base_tangent",
    "split_base_tangent",
    "tangent_push",
    "eig_correspondence",
    "complex_structure_map",
    "siegel_matrix",
    "potential_value",
    "vvf_second_derivative",
    "vvf_first_order",
    "vvf_fd",
    "ddc_positivity",
    "hyperkahler_growth",
    "run_battery",
    "CheckResult",
]
