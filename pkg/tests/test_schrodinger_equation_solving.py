import numpy as np
import pytest

from mweyl.config import REFERENCE_M_TOLERANCE
from mweyl.sphere_points import SpherePoint, chordal_dist, default_grid
from mweyl.canonical_system_solving import NonconvergenceError
from mweyl.schrodinger_equation_solving import (
    Potential, LimitPoint, Regular, BoundaryData, rotate_boundary, solve_schrodinger, wronskian, m_schrodinger,
    weyl_m_schrodinger, free_m, predicted_asymptotics, asymptotic_residual
)

ZERO = Potential.constant(0.0)
SINE = Potential.from_function(np.sin, "sin")

def test_potential_from_samples():
    V = Potential.from_samples([0.0, 1.0, 2.0], [0.0, 1.0, 4.0])
    assert V.sample_end == 2.0
    assert float(V(5.0)) == pytest.approx(4.0)
    assert float(V(1.0)) == pytest.approx(1.0)
    assert Potential.constant(3.0).sample_end == np.inf

@pytest.mark.parametrize("kwargs", [
    {},
    {"grid": [0.0, 1.0], "values": [0.0, 1.0], "function": np.sin},
    {"grid": [0.5, 1.0], "values": [0.0, 1.0]},
    {"grid": [0.0, 1.0, 1.0], "values": [0.0, 1.0, 2.0]},
    {"grid": [0.0, 1.0], "values": [0.0, np.nan]}
])
def test_potential_validation(kwargs):
    with pytest.raises(ValueError):
        Potential(**kwargs)

def test_boundary_data_normalization():
    assert BoundaryData(np.pi + 0.5).alpha == pytest.approx(0.5)
    assert Regular(1.0, -0.25).beta == pytest.approx(np.pi - 0.25)
    assert BoundaryData().endpoint == LimitPoint()
    with pytest.raises(ValueError):
        Regular(0.0)
    with pytest.raises(ValueError):
        BoundaryData(np.inf)

def test_rotation_by_quarter_turn_is_negative_reciprocal():
    m = SpherePoint(0.3 + 2j)
    assert chordal_dist(rotate_boundary(np.pi / 2, m), m.negative_reciprocal()) <= 1e-15
    assert chordal_dist(rotate_boundary(0.0, m), m) <= 1e-15

@pytest.mark.parametrize("V, z, initial, expected", [
    (ZERO, 0j, (0.0, 1.0), lambda x: x),
    (ZERO, 1 + 0j, (0.0, 1.0), np.sin),
    (Potential.constant(1.0), 0j, (1.0, 0.0), np.cosh)
])
def test_closed_form_solutions(V, z, initial, expected):
    x = np.linspace(0.0, 5.0, 11)
    samples = solve_schrodinger(V, z, *initial, x)
    np.testing.assert_allclose(samples[:, 0].real, expected(x), rtol=1e-8, atol=1e-9)

def test_solution_grid_validation():
    with pytest.raises(ValueError):
        solve_schrodinger(ZERO, 1j, 1.0, 0.0, [1.0, 0.5])
    assert solve_schrodinger(ZERO, 1j, 1.0, 0.0, [2.0]).shape == (1, 2)

def test_wronskian_is_conserved():
    x = np.linspace(0.0, 10.0, 101)
    first = solve_schrodinger(SINE, 0.5 + 0.5j, 1.0, 0.0, x)
    second = solve_schrodinger(SINE, 0.5 + 0.5j, 0.0, 1.0, x)
    scale = 1 + np.abs(first[:, 0] * second[:, 1]) + np.abs(first[:, 1] * second[:, 0])
    assert np.max(np.abs(wronskian(first, second) - 1) / scale) <= 1e-8

def test_free_m_function():
    for z in default_grid():
        m = m_schrodinger(ZERO, BoundaryData(0.0), complex(z), REFERENCE_M_TOLERANCE)
        assert chordal_dist(m, SpherePoint(1j * np.sqrt(z))) <= 1e-6

def test_free_m_function_at_neumann_angle():
    for z in default_grid():
        m = m_schrodinger(ZERO, BoundaryData(np.pi / 2), complex(z), REFERENCE_M_TOLERANCE)
        assert chordal_dist(m, SpherePoint(1j / np.sqrt(z))) <= 1e-6
        assert chordal_dist(free_m(np.pi / 2, z), SpherePoint(1j / np.sqrt(z))) <= 1e-14

def test_regular_endpoint_matches_closed_form():
    b = 2.0
    for z in (1j, -1 + 0.5j, 2 + 2j):
        value = weyl_m_schrodinger(ZERO, BoundaryData(0.0, Regular(b)), z)
        k = np.sqrt(z)
        assert value.length == b
        assert chordal_dist(value.point, SpherePoint(-k / np.tan(k * b))) <= 1e-8

@pytest.mark.parametrize("V", [ZERO, Potential.constant(-1.0), SINE])
def test_rotation_law(V):
    for z in (1j, -2 + 0.5j, 1 + 2j):
        base = m_schrodinger(V, BoundaryData(0.0), z)
        for alpha in (np.pi / 6, np.pi / 3, np.pi / 2):
            rotated = m_schrodinger(V, BoundaryData(alpha), z)
            assert chordal_dist(rotated, rotate_boundary(alpha, base)) <= 1e-9

def test_m_is_herglotz():
    for z in default_grid():
        m = m_schrodinger(SINE, BoundaryData(np.pi / 3), complex(z))
        assert m.is_infinite() or m.to_complex().imag >= -1e-8

def test_cutoff_cap_raises_nonconvergence():
    with pytest.raises(NonconvergenceError):
        m_schrodinger(ZERO, BoundaryData(0.0), 1j, max_cutoff=2.0)

def test_m_preconditions():
    with pytest.raises(ValueError):
        m_schrodinger(ZERO, BoundaryData(0.0), 1 + 0j)
    with pytest.raises(ValueError):
        m_schrodinger(ZERO, BoundaryData(0.0), 1j, tol=-1.0)

def test_predicted_asymptotics():
    z = 3 + 4j
    assert predicted_asymptotics(0.0, z) == pytest.approx(1j * np.sqrt(z))
    assert predicted_asymptotics(np.pi / 2, z) == pytest.approx(1j / np.sqrt(z))
    assert predicted_asymptotics(np.pi, z) == pytest.approx(1j * np.sqrt(z))

@pytest.mark.parametrize("alpha", [0.0, np.pi / 2])
def test_free_asymptotics_are_exact(alpha):
    for row in asymptotic_residual(ZERO, alpha, (1e2, 1e3, 1e4), REFERENCE_M_TOLERANCE):
        assert row.residual <= 1e-5 * abs(row.predicted)

def test_asymptotic_residual_decreases_for_bounded_potential():
    rows = asymptotic_residual(Potential.from_function(np.cos, "cos"), 0.0, (1e2, 1e3, 1e4), REFERENCE_M_TOLERANCE)
    residuals = [row.residual for row in rows]
    assert np.all(np.diff(residuals) < 0)

def test_asymptotic_heights_validation():
    with pytest.raises(ValueError):
        asymptotic_residual(ZERO, 0.0, (1e3, 1e2))
    with pytest.raises(ValueError):
        asymptotic_residual(ZERO, 0.0, ())
