import numpy as np
import pytest

from mweyl.hamiltonians import (
    J, p_matrix, p_matrices, mat2_violation, validate_mat2, eigen_decompose, StepPhi, PwlPhi, SmoothPhi,
    ConstantSegment, PhiSegment, SingularTail, ContinuedTail, Hamiltonian, cumulative_integral,
    cumulative_integrals, dyadic_cells, dyadic_average, dyadic_averages, weakstar_test_family, weakstar_terms,
    weakstar_dist, weakstar_reach
)
from mweyl.phi_construction import build_step_phi

def identity_angle(end: float = 1.0, points: int = 11) -> SmoothPhi:
    grid = np.linspace(0.0, end, points)
    derivatives = np.column_stack((grid, np.ones_like(grid), np.zeros_like(grid), np.zeros_like(grid)))
    return SmoothPhi(grid, derivatives)

ROTATING_INTEGRAL = np.array([
    [0.5 + np.sin(2) / 4, np.sin(1)**2 / 2],
    [np.sin(1)**2 / 2, 0.5 - np.sin(2) / 4]
])

@pytest.mark.parametrize("theta, expected", [
    (0.0, [[1, 0], [0, 0]]),
    (np.pi / 2, [[0, 0], [0, 1]]),
    (np.pi / 4, [[0.5, 0.5], [0.5, 0.5]]),
])
def test_p_matrix_oracles(theta, expected):
    np.testing.assert_allclose(p_matrix(theta), expected, atol=1e-15)

def test_p_matrix_is_pi_periodic_projection():
    for theta in np.linspace(0, np.pi, 7):
        P = p_matrix(theta)
        assert np.trace(P) == pytest.approx(1.0)
        assert np.linalg.det(P) == pytest.approx(0.0, abs=1e-15)
        for k in range(-2, 3):
            np.testing.assert_allclose(p_matrix(theta + k * np.pi), P, atol=1e-15)
    np.testing.assert_allclose(p_matrices([0.3, 1.2]), [p_matrix(0.3), p_matrix(1.2)])

def test_validate_mat2():
    assert mat2_violation(0.5 * np.eye(2)) == 0
    with pytest.raises(ValueError):
        validate_mat2([[1.0, 0.2], [0.0, 0.0]])
    with pytest.raises(ValueError):
        validate_mat2([[1.5, 0.0], [0.0, -0.5]])
    with pytest.raises(ValueError):
        validate_mat2(np.eye(2))
    validate_mat2(2 * np.eye(2), trace_normed=False)

@pytest.mark.parametrize("M, lam, phi", [
    (p_matrix(np.pi / 4), 1.0, np.pi / 4),
    (0.5 * np.eye(2), 0.5, 0.0),
    (np.array([[0.75, 0.25], [0.25, 0.25]]), (1 + 1 / np.sqrt(2)) / 2, np.pi / 8),
])
def test_eigen_decompose_oracles(M, lam, phi):
    got_lam, got_phi = eigen_decompose(M)
    assert got_lam == pytest.approx(lam, abs=1e-12)
    assert got_phi == pytest.approx(phi, abs=1e-12)
    reconstruction = got_lam * p_matrix(got_phi) + (1 - got_lam) * p_matrix(got_phi + np.pi / 2)
    np.testing.assert_allclose(reconstruction, M, atol=1e-12)

def test_angle_type_validation():
    with pytest.raises(ValueError):
        StepPhi(np.array([0.0, 1.0, 2.0]), np.array([1.0, 0.5]))
    with pytest.raises(ValueError):
        PwlPhi(np.array([0.0, 1.0]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        SmoothPhi(np.array([0.0, 1.0]), np.array([[0, 1, 0, 0], [1, -1, 0, 0]]))

def test_smooth_phi_hermite_interpolation_is_exact_for_cubics():
    grid = np.linspace(0, 2, 5)
    f = lambda t: t + 0.1 * t**3
    derivatives = np.column_stack((f(grid), 1 + 0.3 * grid**2, 0.6 * grid, 0.6 * np.ones_like(grid)))
    phi = SmoothPhi(grid, derivatives)
    t = np.linspace(0, 2, 17)
    np.testing.assert_allclose(phi(t), f(t), atol=1e-12)
    np.testing.assert_allclose(phi.derivative(t, 3), 0.6, atol=1e-10)

def test_hamiltonian_segments_must_be_contiguous():
    with pytest.raises(ValueError):
        Hamiltonian([ConstantSegment(0.0, 1.0, p_matrix(0)), ConstantSegment(1.5, 2.0, p_matrix(1))])
    with pytest.raises(ValueError):
        Hamiltonian([], ContinuedTail())
    with pytest.raises(ValueError):
        ConstantSegment(0.0, 1.0, np.eye(2))

def test_constant_rank_one_becomes_singular_tail():
    H = Hamiltonian.constant(p_matrix(np.pi / 3))
    assert not H.segments
    assert H.tail.theta == pytest.approx(np.pi / 3)
    np.testing.assert_allclose(H.evaluate([0.0, 5.0]), [p_matrix(np.pi / 3)] * 2, atol=1e-12)

def test_evaluate_and_domain():
    H = Hamiltonian.from_phi(identity_angle())
    assert H.domain_end == 1.0
    np.testing.assert_allclose(H.evaluate([0.25]), [p_matrix(0.25)], atol=1e-12)
    with pytest.raises(ValueError):
        H.evaluate([2.0])
    tailed = Hamiltonian.from_phi(identity_angle(), tail=SingularTail(2.0))
    np.testing.assert_allclose(tailed.evaluate([3.0]), [p_matrix(2.0)], atol=1e-15)

def test_quarter_turn():
    H = Hamiltonian([ConstantSegment(0.0, 1.0, p_matrix(0.4))], SingularTail(1.0))
    turned = H.quarter_turn()
    np.testing.assert_allclose(turned.evaluate([0.5]), [J @ p_matrix(0.4) @ J.T], atol=1e-15)
    assert turned.tail.theta == pytest.approx(1.0 + np.pi / 2)

def test_spliced():
    target = Hamiltonian.constant(0.5 * np.eye(2))
    prefix = Hamiltonian.constant(p_matrix(0.0))
    spliced = target.spliced(prefix, 2.0)
    np.testing.assert_allclose(spliced.evaluate([1.0, 3.0]), [p_matrix(0.0), 0.5 * np.eye(2)], atol=1e-15)

@pytest.mark.parametrize("H, x, expected", [
    (Hamiltonian.constant(p_matrix(0)), 2.0, [[2, 0], [0, 0]]),
    (Hamiltonian.constant(0.5 * np.eye(2)), 1.0, [[0.5, 0], [0, 0.5]]),
    (Hamiltonian.from_phi(identity_angle()), 1.0, ROTATING_INTEGRAL),
])
def test_cumulative_integral_oracles(H, x, expected):
    integral = cumulative_integral(H, x)
    np.testing.assert_allclose(integral, expected, atol=1e-10)
    assert np.trace(integral) == pytest.approx(x, abs=1e-12)

def test_cumulative_integrals_match_pointwise():
    H = Hamiltonian([ConstantSegment(0.0, 0.5, p_matrix(0.3)), ConstantSegment(0.5, 1.0, 0.5 * np.eye(2))])
    xs = np.array([0.1, 0.5, 0.7, 3.0])
    np.testing.assert_allclose(cumulative_integrals(H, xs), [cumulative_integral(H, x) for x in xs], atol=1e-13)
    with pytest.raises(ValueError):
        cumulative_integral(H, -1.0)

def test_dyadic_average_oracles():
    np.testing.assert_allclose(dyadic_average(Hamiltonian.constant(p_matrix(np.pi / 4)), 3, 5), p_matrix(np.pi / 4), atol=1e-14)
    split = Hamiltonian([ConstantSegment(0.0, 0.5, p_matrix(0)), ConstantSegment(0.5, 1.0, p_matrix(np.pi / 2))])
    np.testing.assert_allclose(dyadic_average(split, 0, 0), 0.5 * np.eye(2), atol=1e-14)
    np.testing.assert_allclose(dyadic_average(Hamiltonian.from_phi(identity_angle()), 0, 0), ROTATING_INTEGRAL, atol=1e-10)

def test_dyadic_cells_allow_partial_last_cell():
    np.testing.assert_allclose(dyadic_cells(1, 1.25), [0, 0.5, 1.0, 1.25])
    edges, averages = dyadic_averages(Hamiltonian.constant(0.5 * np.eye(2)), 1, 1.25)
    assert averages.shape == (3, 2, 2)
    with pytest.raises(ValueError):
        dyadic_cells(-1, 1.0)

def test_dyadic_average_outside_domain():
    with pytest.raises(ValueError):
        dyadic_average(Hamiltonian.from_phi(identity_angle()), 0, 3)

def test_weakstar_family():
    family = weakstar_test_family()
    assert len(family) == 32
    assert family[:3] == [(1 / 3, "e1"), (1 / 3, "e2"), (1 / 3, "diagonal")]

def test_weakstar_reach():
    assert weakstar_reach() == pytest.approx(4.0)
    assert weakstar_reach(96) == pytest.approx(11.0)
    P0, P1 = p_matrix(0), p_matrix(np.pi / 2)
    near = Hamiltonian([ConstantSegment(0.0, 5.0, P0)])
    far = Hamiltonian([ConstantSegment(0.0, 4.0, P0), ConstantSegment(4.0, 5.0, P1)])
    assert weakstar_dist(near, far) == 0
    assert weakstar_dist(near, far, terms=96) > 0

def test_weakstar_dist_basics():
    P0 = Hamiltonian.constant(p_matrix(0))
    P1 = Hamiltonian.constant(p_matrix(np.pi / 2))
    assert weakstar_dist(P0, P0) == 0
    assert 0 < weakstar_dist(P0, P1) <= 1
    assert weakstar_terms(P0, P1)[0] > 0

def test_weakstar_converges_along_dyadic_steps():
    H = Hamiltonian.constant(0.5 * np.eye(2))
    distances = [weakstar_dist(Hamiltonian.from_step(build_step_phi(H, n, 5.0)), H) for n in range(1, 6)]
    assert np.all(np.diff(distances) < 0)

def test_operator_norm_bound():
    H = Hamiltonian([ConstantSegment(0.0, 0.5, p_matrix(np.pi / 4)), ConstantSegment(0.5, 1.0, 0.5 * np.eye(2))])
    H_n = Hamiltonian.from_step(build_step_phi(H, 3, 2.0))
    x = np.linspace(0, 1.99, 1000)
    difference = H_n.evaluate(x) - H.evaluate(x)
    assert np.max(np.linalg.norm(difference, ord=2, axis=(1, 2))) <= 2 + 1e-12
    assert mat2_violation(H_n.evaluate(x)) <= 1e-12
