import os
import subprocess
import sys

import numpy as np
import pytest

from toric_hcsck import kernels
from toric_hcsck._tensor_py import tensor_field as py_tensor_field
from toric_hcsck.spectral import builtin_spectral, polynomial_spectral

needs_ext = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernel not built")

KS = [builtin_spectral(n) for n in ("linear", "quadratic", "hyperkahler")] + [polynomial_spectral([0, 1, 0.5, 0.2])]


def batch(n, m, rng, hscale=0.1):
    X = rng.standard_normal((m, n, n))
    G = X @ np.swapaxes(X, 1, 2) + np.eye(n)
    H = rng.standard_normal((m, n, n)) + 1j * rng.standard_normal((m, n, n))
    return G, hscale * (H + np.swapaxes(H, 1, 2))


def test_identity_without_deformation():
    T, lam, fval, logdet, minT = py_tensor_field(np.eye(2)[None], np.zeros((1, 2, 2), complex), KS[2], 1.0)
    np.testing.assert_allclose(T[0], np.eye(2), atol=1e-15)
    assert lam.max() == 0.0 and fval[0] == 0.0 and logdet[0] == pytest.approx(0.0)


@pytest.mark.parametrize("k", KS, ids=lambda k: k.name)
def test_diagonal_real_deformation(k):
    h = np.array([0.3, 0.6])
    T = py_tensor_field(np.eye(2)[None], np.diag(h).astype(complex)[None], k, 1.0)[0][0]
    expect = 1.0 + 2.0 * k.dk(h**2) * h**2
    np.testing.assert_allclose(T, np.diag(expect), atol=1e-14)


def test_zero_weight_ignores_domain():
    # weight zero means no deformation even where k is undefined
    G = np.eye(1)[None]
    H = np.array([[[3.0 + 0j]]])
    T, lam, fval, _, _ = py_tensor_field(G, H, KS[2], 0.0)
    assert T[0, 0, 0] == pytest.approx(1.0) and fval[0] == 0.0
    assert lam[0, 0] == pytest.approx(9.0)


@needs_ext
@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("k", KS, ids=lambda k: k.name)
@pytest.mark.parametrize("scale", [0.0, 0.3, 1.0])
def test_backends_agree_field(n, k, scale, rng):
    G, H = batch(n, 500, rng)
    a = kernels.tensor_field(G, H, k, scale, backend="python")
    b = kernels.tensor_field(G, H, k, scale, backend="cython")
    for x, y in zip(a, b):
        np.testing.assert_allclose(y, x, rtol=1e-11, atol=1e-12)


@needs_ext
@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("k", KS, ids=lambda k: k.name)
def test_backends_agree_tangent(n, k, rng):
    G, H = batch(n, 500, rng)
    a = kernels.tensor_tangent(G, H, k, 0.7, backend="python")
    b = kernels.tensor_tangent(G, H, k, 0.7, backend="cython")
    np.testing.assert_allclose(b, a, rtol=1e-10, atol=1e-11)


@pytest.mark.parametrize("backend", ["python"] + (["cython"] if kernels.BACKEND == "cython" else []))
@pytest.mark.parametrize("n", [1, 2])
def test_tangent_is_derivative_of_tensor(backend, n, rng):
    k = builtin_spectral("hyperkahler")
    G, H = batch(n, 20, rng, 0.05)
    C = kernels.tensor_tangent(G, H, k, 1.0, backend=backend)
    idx = [(0, 0)] if n == 1 else [(0, 0), (1, 1), (0, 1)]
    h = 1e-6
    for p, (a, b) in enumerate(idx):
        E = np.zeros((n, n))
        E[a, b] = E[b, a] = 1.0
        Tp = kernels.tensor_field(G + h * E, H, k, 1.0, backend=backend)[0].real
        Tm = kernels.tensor_field(G - h * E, H, k, 1.0, backend=backend)[0].real
        dT = (Tp - Tm) / (2 * h)
        packed = dT[:, 0, :1] if n == 1 else np.stack([dT[:, 0, 0], dT[:, 1, 1], dT[:, 0, 1]], axis=-1)
        np.testing.assert_allclose(C[:, :, p], packed, rtol=1e-6, atol=1e-7)


def test_pure_python_fallback_selected_by_env():
    env = dict(os.environ, TORIC_HCSCK_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", "import toric_hcsck; print(toric_hcsck.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
