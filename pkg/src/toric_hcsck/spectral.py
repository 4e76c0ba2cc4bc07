"""Spectral functions ``f(N) = sum_a k(lambda_a)`` of Hermitian matrices.

Everything here works on one matrix or on a stack of matrices (leading axes).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainExceeded, UnknownSpectralFunction

# |l_a - l_b| below this (relative) gap counts as a repeated eigenvalue
DEGENERACY_GAP = 1e-8
# hyperkahler k is rejected for eigenvalues >= 1 - HK_GUARD
HK_GUARD = 1e-9

KIND_LINEAR = 0
KIND_QUADRATIC = 1
KIND_HYPERKAHLER = 2
KIND_POLYNOMIAL = 3


@dataclass(frozen=True)
class SpectralFunction:
    """A convex non-decreasing scalar function k with two derivatives.

    ``kind`` and ``params`` let the compiled kernels evaluate k without calling
    back into Python.
    """

    name: str
    k: Callable = field(repr=False)
    dk: Callable = field(repr=False)
    d2k: Callable = field(repr=False)
    lambda_sup: float = np.inf
    kind: int = KIND_POLYNOMIAL
    params: tuple = ()

    @property
    def domain_limit(self) -> float:
        """Largest admissible eigenvalue (exclusive)."""
        if np.isfinite(self.lambda_sup):
            return self.lambda_sup - HK_GUARD
        return np.inf

    def check_domain(self, lam) -> None:
        lam = np.asarray(lam)
        if lam.size and np.max(lam) >= self.domain_limit:
            raise DomainExceeded(
                f"eigenvalue {float(np.max(lam)):.6g} outside the domain of k={self.name} "
                f"(lambda < {self.lambda_sup})"
            )

    def phi(self, lam):
        """``lambda k'(lambda)``, the function entering the deformed tensor."""
        return lam * self.dk(lam)

    def dphi(self, lam):
        return self.dk(lam) + lam * self.d2k(lam)


def _hk(lam):
    s = np.sqrt(1.0 - lam)
    return 1.0 - s + np.log((1.0 + s) / 2.0)


def _hk_d1(lam):
    return 0.5 / (1.0 + np.sqrt(1.0 - lam))


def _hk_d2(lam):
    s = np.sqrt(1.0 - lam)
    return 0.25 / (s * (1.0 + s) ** 2)


def polynomial_spectral(coeffs: Sequence[float], name: str = "polynomial") -> SpectralFunction:
    """``k(l) = sum_i coeffs[i] l^i`` with exact derivatives."""
    p = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
    dp, d2p = p.deriv(1), p.deriv(2)
    return SpectralFunction(
        name,
        lambda x: p(np.asarray(x, dtype=float)),
        lambda x: dp(np.asarray(x, dtype=float)),
        lambda x: d2p(np.asarray(x, dtype=float)),
        np.inf,
        KIND_POLYNOMIAL,
        tuple(float(c) for c in p.coef),
    )


def builtin_spectral(name: str) -> SpectralFunction:
    if name == "linear":
        return SpectralFunction(
            "linear",
            lambda x: np.asarray(x, dtype=float),
            lambda x: np.ones_like(np.asarray(x, dtype=float)),
            lambda x: np.zeros_like(np.asarray(x, dtype=float)),
            np.inf,
            KIND_LINEAR,
        )
    if name == "quadratic":
        return SpectralFunction(
            "quadratic",
            lambda x: 0.5 * np.asarray(x, dtype=float) ** 2,
            lambda x: np.asarray(x, dtype=float),
            lambda x: np.ones_like(np.asarray(x, dtype=float)),
            np.inf,
            KIND_QUADRATIC,
        )
    if name == "hyperkahler":
        return SpectralFunction("hyperkahler", _hk, _hk_d1, _hk_d2, 1.0, KIND_HYPERKAHLER)
    raise UnknownSpectralFunction(name)


BUILTINS = ("linear", "quadratic", "hyperkahler")


def check_convex_nondecreasing(k: SpectralFunction, n_grid: int = 1000) -> bool:
    top = k.domain_limit if np.isfinite(k.domain_limit) else 10.0
    grid = np.linspace(0.0, top, n_grid, endpoint=not np.isfinite(k.lambda_sup))
    return bool(np.all(k.dk(grid) >= 0) and np.all(k.d2k(grid) >= 0))


def eval_f(eigs, k: SpectralFunction) -> float:
    eigs = np.asarray(eigs, dtype=float)
    k.check_domain(eigs)
    return float(np.sum(k.k(eigs)))


@dataclass(frozen=True)
class HermitianEig:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    vectors: np.ndarray


def hermitian_eig(N) -> HermitianEig:
    N = np.asarray(N)
    N = 0.5 * (N + np.conj(np.swapaxes(N, -1, -2)))
    lam, U = np.linalg.eigh(N)
    return HermitianEig(N, lam, U)


def _conj_t(U):
    return np.conj(np.swapaxes(U, -1, -2))


def apply_spectral(N, h: Callable) -> np.ndarray:
    """``U diag(h(lambda)) U^*``."""
    e = hermitian_eig(N)
    return (e.vectors * h(e.eigenvalues)[..., None, :]) @ _conj_t(e.vectors)


def matrix_gradient(N, k: SpectralFunction) -> np.ndarray:
    """``f'(N) = U diag(k'(lambda_a)) U^*``."""
    e = hermitian_eig(N)
    k.check_domain(e.eigenvalues)
    return (e.vectors * k.dk(e.eigenvalues)[..., None, :]) @ _conj_t(e.vectors)


def divided_differences(lam, h: Callable, dh: Callable) -> np.ndarray:
    """First divided differences ``Gamma_ab`` of h on the eigenvalues ``lam`` (..., n).

    Pairs closer than the degeneracy gap use ``dh`` at the midpoint.
    """
    la = lam[..., :, None]
    lb = lam[..., None, :]
    diff = la - lb
    scale = np.maximum(1.0, np.abs(la) + np.abs(lb))
    close = np.abs(diff) < DEGENERACY_GAP * scale
    safe = np.where(close, 1.0, diff)
    hl = h(lam)
    gamma = (hl[..., :, None] - hl[..., None, :]) / safe
    mid = dh(0.5 * (la + lb) + np.zeros_like(diff))
    return np.where(close, mid, gamma)


def loewner_derivative(N, E, h: Callable, dh: Callable) -> np.ndarray:
    """Directional derivative ``d/dt h(N + tE)`` at t = 0 (Daleckii-Krein)."""
    e = hermitian_eig(N)
    U = e.vectors
    gamma = divided_differences(e.eigenvalues, h, dh)
    Ep = _conj_t(U) @ np.asarray(E) @ U
    return U @ (gamma * Ep) @ _conj_t(U)
