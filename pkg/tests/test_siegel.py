import numpy as np
import pytest

from toric_hcsck import siegel as sg
from toric_hcsck.errors import DegenerateSpectrum, NotBaseTangent, NotCompatible, NotTangent, SingularDenominator
from toric_hcsck.spectral import builtin_spectral

KS = [builtin_spectral(n) for n in ("linear", "quadratic", "hyperkahler")]


def test_random_symplectic_scale_zero_is_identity():
    np.testing.assert_array_equal(sg.random_symplectic(2, 0, scale=0.0), np.eye(4))


def test_sp2_has_unit_determinant():
    for seed in range(10):
        assert np.linalg.det(sg.random_symplectic(1, seed)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_random_symplectic_defect(n):
    for seed in range(10):
        g = sg.random_symplectic(n, seed, scale=2.0)
        W = sg.omega0(n)
        assert np.max(np.abs(g.T @ W @ g - W)) <= 1e-10


def test_psi_base_point():
    np.testing.assert_allclose(sg.psi(sg.base_structure(3)), 1j * np.eye(3), atol=1e-15)


def test_psi_diagonal_example():
    g = np.diag([2.0, 0.5])
    J = sg.conjugate_structure(g)
    np.testing.assert_allclose(J, [[0, -4], [0.25, 0]], atol=1e-15)
    assert sg.psi(J)[0, 0] == pytest.approx(4j, abs=1e-14)


def test_psi_equivariance(rng):
    for _ in range(50):
        g = sg.random_symplectic(2, rng)
        assert np.max(np.abs(sg.psi(sg.conjugate_structure(g)) - sg.moebius(g, 1j * np.eye(2)))) <= 1e-8


def test_moebius_examples():
    Z = np.array([[1 + 2j, 0.3], [0.3, 0.5 + 1j]])
    np.testing.assert_allclose(sg.moebius(np.eye(4), Z), Z)
    assert sg.moebius(np.diag([2.0, 0.5]), np.array([[1j]]))[0, 0] == pytest.approx(4j)


def test_moebius_group_law(rng):
    Z = sg.moebius(sg.random_symplectic(3, rng), 1j * np.eye(3))
    for _ in range(50):
        g1, g2 = sg.random_symplectic(3, rng), sg.random_symplectic(3, rng)
        W = sg.moebius(g1, sg.moebius(g2, Z))
        assert np.max(np.abs(W - sg.moebius(g1 @ g2, Z))) <= 1e-9
        sg.check_siegel(W)


def test_moebius_singular_denominator():
    g = np.array([[0.0, -1.0], [1.0, 0.0]])  # Z -> -1/Z
    with pytest.raises(SingularDenominator):
        sg.moebius(g, np.zeros((1, 1)))


def test_incompatible_structure():
    with pytest.raises(NotCompatible):
        sg.psi(np.array([[0.0, 1.0], [-1.0, 0.0]]))  # J squares to -1 but with the wrong orientation


def test_tangent_push_identity(rng):
    A = sg.random_base_tangent(2, rng)
    J2, A2 = sg.tangent_push(np.eye(4), sg.base_structure(2), A)
    np.testing.assert_array_equal(A2, A)


def test_tangent_push_relations_and_spectrum(rng):
    for _ in range(20):
        A = sg.random_base_tangent(2, rng)
        g = sg.random_symplectic(2, rng)
        J2, A2 = sg.tangent_push(g, sg.base_structure(2), A)
        assert np.max(np.abs(A2 @ J2 + J2 @ A2)) <= 1e-10 * max(1.0, np.abs(A2).max())
        np.testing.assert_allclose(np.sort(np.linalg.eigvals(A2 @ A2).real), np.sort(np.linalg.eigvals(A @ A).real), atol=1e-8)


def test_non_tangent_rejected():
    with pytest.raises(NotTangent):
        sg.check_tangent(sg.base_structure(1), np.eye(2))
    with pytest.raises(NotBaseTangent):
        sg.split_base_tangent(np.arange(16.0).reshape(4, 4))


def test_eig_correspondence_diagonal():
    x = np.array([0.5, -1.5])
    big, small = sg.eig_correspondence(sg.base_tangent(np.diag(x), np.zeros((2, 2))))
    np.testing.assert_allclose(small, np.sort(x**2), atol=1e-14)
    np.testing.assert_allclose(big, np.repeat(np.sort(x**2), 2), atol=1e-14)
    big, small = sg.eig_correspondence(sg.base_tangent(np.zeros((2, 2)), np.diag(x)))
    np.testing.assert_allclose(small, np.sort(x**2), atol=1e-14)


def test_eig_correspondence_random(rng):
    for _ in range(50):
        big, small = sg.eig_correspondence(sg.random_base_tangent(2, rng))
        assert np.max(np.abs(big - np.repeat(small, 2))) <= 1e-8


def test_complex_structure_squares_to_minus_one(rng):
    J = sg.base_structure(2)
    A = sg.random_base_tangent(2, rng)
    Jd = sg.random_base_tangent(2, rng)
    Ad = rng.standard_normal((4, 4))
    a, b = sg.complex_structure_map(J, A, *sg.complex_structure_map(J, A, Jd, Ad))
    np.testing.assert_allclose(a, -Jd, atol=1e-12)
    np.testing.assert_allclose(b, -Ad, atol=1e-12)


# ------------------------------------------------------------------ potential


def test_siegel_matrix_at_base_point():
    S = np.array([[0.3, 0.1j], [0.1j, 0.2]])
    np.testing.assert_allclose(sg.siegel_matrix(1j * np.eye(2), S), S @ S.conj(), atol=1e-15)


def test_vvf_trivial_direction():
    v = (np.array([[1j, 0.2], [0.2, 0.5j]]), np.zeros((2, 2)))
    assert sg.vvf_second_derivative(np.zeros((2, 2)), v, KS[1]) == 0.0


@pytest.mark.parametrize("k", KS, ids=lambda k: k.name)
def test_vvf_matches_fd(k, rng):
    for _ in range(30):
        S, v = sg.random_siegel_tangent(2, rng)
        an = sg.vvf_second_derivative(S, v, k)
        fd = sg.vvf_fd(S, v, k)
        assert abs(an - fd) <= 1e-5 * max(1.0, abs(fd))


@pytest.mark.parametrize("k", KS, ids=lambda k: k.name)
def test_vvf_nonnegative_along_fibre(k, rng):
    for _ in range(200):
        S, (_, dS) = sg.random_siegel_tangent(3, rng)
        v = (np.zeros_like(dS), dS)
        val = sg.vvf_second_derivative(S, v, k)
        assert val >= -1e-8
        assert val >= sg.vvf_first_order(S, v, k) - 1e-12


def test_first_order_part_misses_curvature():
    # at S = 0 only the second-order variation of the matrix contributes
    k = KS[2]
    dS = np.array([[0.4, 0.1j], [0.1j, -0.3]])
    v = (np.zeros((2, 2)), dS)
    assert sg.vvf_first_order(np.zeros((2, 2)), v, k) == 0.0
    full = sg.vvf_second_derivative(np.zeros((2, 2)), v, k)
    assert full == pytest.approx(2 * 0.25 * np.trace(dS @ dS.conj().T).real)
    assert full == pytest.approx(sg.vvf_fd(np.zeros((2, 2)), v, k), rel=1e-6)


def test_vvf_alone_can_be_negative_off_the_fibre():
    # n = 1, linear k: f(t) = ((1/2 + t) / (1 + t))^2 has f''(0) = -1/2,
    # while the rotated direction gives f(t) = 1/4 + t^2, so dd^c = 3/2
    k = KS[0]
    S = np.array([[0.5 + 0j]])
    v = (np.array([[1j]]), np.array([[1.0 + 0j]]))
    assert sg.vvf_second_derivative(S, v, k) == pytest.approx(-0.5, abs=1e-14)
    assert sg.vvf_fd(S, v, k) == pytest.approx(-0.5, abs=1e-7)
    assert sg.ddc_positivity(S, v, k) == pytest.approx(1.5, abs=1e-14)


def test_ddc_zero_direction():
    z = np.zeros((2, 2), complex)
    S = np.array([[0.3, 0.1], [0.1, 0.2]], complex)
    assert sg.ddc_positivity(S, (z, z), KS[1]) == 0.0


@pytest.mark.parametrize("k", KS, ids=lambda k: k.name)
def test_ddc_positive(k, rng):
    for _ in range(200):
        S, v = sg.random_siegel_tangent(2, rng)
        assert sg.ddc_positivity(S, v, k) > 0


def test_hyperkahler_growth_monotone():
    g = sg.hyperkahler_growth()
    assert np.all(np.diff(g) > 0)
    assert g[-1] > 10 * g[0]


def test_strict_mode_flags_repeated_eigenvalues():
    S = 0.5 * np.eye(2, dtype=complex)
    v = (np.zeros((2, 2)), np.array([[0.1, 0.2], [0.2, 0.3]], complex))
    with pytest.raises(DegenerateSpectrum):
        sg.vvf_second_derivative(S, v, KS[2], strict=True)
    # the confluent limit is still finite and matches differences
    assert sg.vvf_second_derivative(S, v, KS[2]) == pytest.approx(sg.vvf_fd(S, v, KS[2]), rel=1e-6)


# ------------------------------------------------------------------ battery


@pytest.mark.parametrize("n", [1, 3])
def test_battery_small(n):
    res = sg.run_battery(n, trials=50, seed=1)
    assert all(r.passed for r in res), [r.to_dict() for r in res if not r.passed]


def test_battery_threads_deterministic():
    a = sg.run_battery(2, trials=40, seed=7)
    b = sg.run_battery(2, trials=40, seed=7, threads=4)
    assert [r.worst for r in a] == [r.worst for r in b]
