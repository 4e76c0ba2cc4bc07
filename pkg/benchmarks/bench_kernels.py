"""Compiled vs numpy tensor kernels, and a full solve with each backend.

    python benchmarks/bench_kernels.py [--nodes 20000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from toric_hcsck import kernels
from toric_hcsck.basis import Polynomial
from toric_hcsck.operator import DeformationHessian, Discretization
from toric_hcsck.basis import GalerkinBasis
from toric_hcsck.polytope import PRESETS
from toric_hcsck.solver import solve
from toric_hcsck.spectral import builtin_spectral
from toric_hcsck.stability import extremal_affine


def random_batch(n, m, rng):
    X = rng.standard_normal((m, n, n))
    G = X @ np.swapaxes(X, 1, 2) + 0.5 * np.eye(n)
    H = rng.standard_normal((m, n, n)) + 1j * rng.standard_normal((m, n, n))
    H = 0.05 * (H + np.swapaxes(H, 1, 2))
    return G, H


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nodes", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.BACKEND != "cython":
        print("compiled kernel not built; only the numpy backend is available")
        return
    rng = np.random.default_rng(0)
    k = builtin_spectral("hyperkahler")
    print(f"{'kernel':<16}{'n':>3}{'nodes':>8}{'numpy [ms]':>13}{'cython [ms]':>13}{'speedup':>9}")
    for n in (1, 2):
        G, H = random_batch(n, args.nodes, rng)
        for name, fn in (("tensor_field", kernels.tensor_field), ("tensor_tangent", kernels.tensor_tangent)):
            tp = best_of(lambda: fn(G, H, k, 1.0, backend="python"), args.repeat)
            tc = best_of(lambda: fn(G, H, k, 1.0, backend="cython"), args.repeat)
            print(f"{name:<16}{n:>3}{args.nodes:>8}{1e3 * tp:>13.2f}{1e3 * tc:>13.2f}{tp / tc:>9.1f}")

    print()
    print(f"{'full solve':<28}{'numpy [s]':>11}{'cython [s]':>12}{'speedup':>9}")
    cases = [
        ("interval", DeformationHessian(1, constant=[[0.1]]), 10),
        ("square", DeformationHessian.from_potential(Polynomial([[2, 0], [0, 2], [1, 1]], np.array([0.1, 0.1, 0.05j]))), 8),
        ("simplex", DeformationHessian.from_potential(Polynomial([[2, 0], [0, 2]], np.array([0.1, 0.05]))), 8),
    ]
    for name, H, degree in cases:
        P = PRESETS[name]()
        A = extremal_affine(P)
        basis = GalerkinBasis(P, degree)
        res = {}
        for backend in ("python", "cython"):
            D = Discretization(basis, H, k, A, backend=backend)
            res[backend] = best_of(lambda: solve(P, H, k, A, basis=basis, discretization=D), 3)
        label = f"{name} (d={degree})"
        print(f"{label:<28}{res['python']:>11.3f}{res['cython']:>12.3f}{res['python'] / res['cython']:>9.1f}")


if __name__ == "__main__":
    main()
