import numpy as np
import pytest

from mweyl.sphere_points import SpherePoint, chordal_dist, default_grid
from mweyl.hamiltonians import (
    Hamiltonian, ConstantSegment, SmoothPhi, SingularTail, StepPhi, J, p_matrix
)
from mweyl.canonical_system_solving import (
    NonconvergenceError, exp_traceless, ordered_product, transfer_matrix, weyl_disk, weyl_m, m_function,
    negative_reciprocal_residual, solve_canonical, h_norm, integral_equation_residual, weyl_identity_residual
)

TWO_SEGMENT = Hamiltonian([ConstantSegment(0.0, 0.5, p_matrix(np.pi / 4)), ConstantSegment(0.5, 1.0, 0.5 * np.eye(2))])
MASS_AT_INFINITY = Hamiltonian([ConstantSegment(0.0, 1.0, p_matrix(0.0))], SingularTail(np.pi / 2))

def wavy_angle(end: float = 2.0) -> SmoothPhi:
    # φ(t) = t + 0.3 sin t
    grid = np.linspace(0.0, end, 41)
    derivatives = np.column_stack((
        grid + 0.3 * np.sin(grid), 1 + 0.3 * np.cos(grid), -0.3 * np.sin(grid), -0.3 * np.cos(grid)
    ))
    evaluator = lambda t, order: [
        t + 0.3 * np.sin(t), 1 + 0.3 * np.cos(t), -0.3 * np.sin(t), -0.3 * np.cos(t)
    ][order]
    return SmoothPhi(grid, derivatives, evaluator)

def test_exp_traceless_matches_rotation():
    theta = 0.7
    np.testing.assert_allclose(
        exp_traceless(np.array([[0.0, theta], [-theta, 0.0]])),
        [[np.cos(theta), np.sin(theta)], [-np.sin(theta), np.cos(theta)]],
        atol=1e-15
    )
    np.testing.assert_allclose(exp_traceless(np.array([[0.0, 2.0], [0.0, 0.0]])), [[1, 2], [0, 1]], atol=1e-15)

def test_ordered_product_order():
    A = np.array([[1.0, 1.0], [0.0, 1.0]])
    B = np.array([[1.0, 0.0], [1.0, 1.0]])
    C = np.array([[2.0, 0.0], [0.0, 0.5]])
    np.testing.assert_allclose(ordered_product(np.stack([A, B, C])), C @ B @ A)

def test_transfer_at_zero_is_identity():
    np.testing.assert_allclose(transfer_matrix(TWO_SEGMENT, 0.0, 3.0, 0j).matrix, np.eye(2))

def test_transfer_of_projection():
    z, L = 1 + 2j, 1.5
    T = transfer_matrix(Hamiltonian.constant(p_matrix(0.0)), 0.0, L, z)
    np.testing.assert_allclose(T.matrix, [[1, 0], [-z * L, 1]], atol=1e-14)

def test_transfer_of_half_identity():
    z, L = 0.5 + 1j, 2.0
    T = transfer_matrix(Hamiltonian.constant(0.5 * np.eye(2)), 0.0, L, z)
    c, s = np.cos(z * L / 2), np.sin(z * L / 2)
    np.testing.assert_allclose(T.matrix, [[c, s], [-s, c]], atol=1e-13)

@pytest.mark.parametrize("H", [TWO_SEGMENT, Hamiltonian.from_phi(wavy_angle())])
def test_transfer_composition(H):
    z = -1 + 0.5j
    whole = transfer_matrix(H, 0.0, 2.0, z).matrix
    parts = (transfer_matrix(H, 0.7, 2.0, z) @ transfer_matrix(H, 0.0, 0.7, z)).matrix
    np.testing.assert_allclose(parts, whole, atol=1e-9)
    assert transfer_matrix(H, 0.0, 2.0, z).determinant() == pytest.approx(1.0, abs=1e-10)

def test_transfer_determinant_on_random_steps():
    rng = np.random.default_rng(3)
    for _ in range(200):
        values = np.sort(rng.uniform(0, 2 * np.pi, 4))
        breaks = np.concatenate(([0.0], np.sort(rng.uniform(0.1, 3.0, 3)), [3.5]))
        H = Hamiltonian.from_step(StepPhi(breaks, values))
        z = complex(rng.uniform(-3, 3), rng.uniform(0.1, 3))
        assert abs(transfer_matrix(H, 0.0, 3.5, z).determinant() - 1) <= 1e-10

def test_transfer_outside_domain():
    H = Hamiltonian.from_phi(wavy_angle())
    with pytest.raises(ValueError):
        transfer_matrix(H, 0.0, 3.0, 1j)
    with pytest.raises(ValueError):
        transfer_matrix(H, 1.0, 0.5, 1j)

@pytest.mark.parametrize("L", [0.5, 1.0, 4.0])
def test_weyl_disk_of_vertical_projection_is_circle(L):
    disk = weyl_disk(Hamiltonian.constant(p_matrix(np.pi / 2)), L, 1j)
    for tau in (-3.0, -0.2, 0.0, 1.0, 7.5):
        w = disk.boundary_map.apply(SpherePoint(tau)).to_complex()
        assert abs(w - 0.5j / L) == pytest.approx(0.5 / L, abs=1e-12)

def test_weyl_disk_of_horizontal_projection_shrinks_to_infinity():
    H = Hamiltonian.constant(p_matrix(0.0))
    disks = [weyl_disk(H, L, 1j) for L in (1, 10, 100)]
    for L, disk in zip((1, 10, 100), disks):
        w = disk.boundary_map.apply(SpherePoint(2.0)).to_complex()
        assert w == pytest.approx(2.0 + 1j * L)
    diameters = [disk.chordal_diameter for disk in disks]
    assert np.all(np.diff(diameters) < 0)

def test_weyl_disks_are_nested():
    H = Hamiltonian.constant(0.5 * np.eye(2))
    diameters = [weyl_disk(H, L, 1j).chordal_diameter for L in (1, 2, 4, 8)]
    assert np.all(np.diff(diameters) < 0)

def test_weyl_disk_preconditions():
    with pytest.raises(ValueError):
        weyl_disk(TWO_SEGMENT, 0.0, 1j)
    with pytest.raises(ValueError):
        weyl_disk(TWO_SEGMENT, 1.0, 1 + 0j)

@pytest.mark.parametrize("theta", [np.pi / 6, np.pi / 4, np.pi / 2, 2.5])
def test_m_of_constant_angle(theta):
    for z in default_grid():
        assert chordal_dist(m_function(Hamiltonian.constant(p_matrix(theta)), complex(z)), SpherePoint(-1 / np.tan(theta))) <= 1e-12

def test_m_of_h_infinity():
    assert m_function(Hamiltonian.constant(p_matrix(0.0)), 1j).is_infinite()

def test_m_of_mass_at_infinity():
    for z in default_grid():
        assert chordal_dist(m_function(MASS_AT_INFINITY, complex(z)), SpherePoint(z)) <= 1e-12

def test_m_of_half_identity_is_i():
    # J u' = (z/2) u has the decaying solution (1, i) when Im z > 0
    for z in default_grid():
        assert chordal_dist(m_function(Hamiltonian.constant(0.5 * np.eye(2)), complex(z)), SpherePoint(1j)) <= 1e-12

def test_m_is_herglotz():
    for H in (TWO_SEGMENT, MASS_AT_INFINITY):
        for z in default_grid():
            m = m_function(H, complex(z))
            assert m.is_infinite() or m.to_complex().imag >= -1e-8

def test_m_ladder_on_phi_patch_does_not_converge():
    with pytest.raises(NonconvergenceError):
        weyl_m(Hamiltonian.from_phi(wavy_angle()), 1j, tol=1e-6)

def test_m_rejects_real_z():
    with pytest.raises(ValueError):
        m_function(TWO_SEGMENT, 1 + 0j)
    with pytest.raises(ValueError):
        m_function(TWO_SEGMENT, 1j, tol=0)

def test_negative_reciprocal_consistency():
    near_infinity = Hamiltonian.constant(p_matrix(0.01))
    assert negative_reciprocal_residual(near_infinity, 1j) <= 2e-6
    assert negative_reciprocal_residual(TWO_SEGMENT, 1 + 1j) <= 2e-6

def test_solution_satisfies_integral_equation():
    H = Hamiltonian.from_phi(wavy_angle(), tail=SingularTail(1.0))
    u = solve_canonical(H, 0.5 + 1j, [1.0, 0.0], np.linspace(0, 3, 13))
    assert integral_equation_residual(H, u) <= 1e-7

def test_solution_grid_validation():
    with pytest.raises(ValueError):
        solve_canonical(TWO_SEGMENT, 1j, [1.0, 0.0], [1.0, 0.5])

def test_h_norm_oracles():
    theta = 0.8
    u = solve_canonical(Hamiltonian.constant(p_matrix(theta)), 1 + 1j, [-np.sin(theta), np.cos(theta)], [0.0, 3.0])
    assert h_norm(Hamiltonian.constant(p_matrix(theta)), u) == pytest.approx(0.0, abs=1e-14)
    vertical = Hamiltonian.constant(p_matrix(np.pi / 2))
    assert h_norm(vertical, solve_canonical(vertical, 1j, [1.0, 0.0], [0.0, 2.0])) == pytest.approx(0.0, abs=1e-14)
    half = Hamiltonian.constant(0.5 * np.eye(2))
    assert h_norm(half, solve_canonical(half, 0j, [1.0, 0.0], [0.0, 2.0])) == pytest.approx(1.0)

def test_h_norm_interval_must_start_at_sample():
    u = solve_canonical(TWO_SEGMENT, 1j, [1.0, 0.0], [0.0, 1.0, 2.0])
    assert h_norm(TWO_SEGMENT, u, (1.0, 2.0)) > 0
    with pytest.raises(ValueError):
        h_norm(TWO_SEGMENT, u, (0.5, 2.0))

def test_h_norm_matches_boundary_flux():
    # d/dx (u*Ju) = 2i Im z u*Hu, so the H-norm over [0, L] is fixed by the transfer matrix alone
    H = Hamiltonian.from_phi(wavy_angle(), tail=SingularTail(1.0))
    z = 0.5 + 1j
    u0 = np.array([1.0, 0.3 + 0.2j])
    uL = transfer_matrix(H, 0.0, 2.0, z).matrix @ u0
    flux = lambda u: u.conj() @ J @ u
    expected = ((flux(uL) - flux(u0)) / (2j * z.imag)).real
    assert h_norm(H, solve_canonical(H, z, u0, [0.0, 2.0])) == pytest.approx(expected, rel=1e-8)

@pytest.mark.parametrize("H", [
    TWO_SEGMENT, MASS_AT_INFINITY, Hamiltonian.constant(0.5 * np.eye(2)),
    Hamiltonian.from_phi(wavy_angle(), tail=SingularTail(1.0))
])
def test_weyl_identity(H):
    for z in default_grid():
        assert weyl_identity_residual(H, complex(z)) <= 1e-6
