import numpy as np
import pytest
from scipy.integrate import quad

from mweyl.sphere_points import SpherePoint, chordal_dist, grid_dist, default_grid
from mweyl.herglotz_functions import (
    DensityPart, HerglotzSpec, FREE_CONSTANT, eval_herglotz, herglotz_function, free_density,
    free_spectral_measure, truncate_measure, schrodinger_normalized_constant, fit_constant,
    measure_test_functions, measure_weak_dist
)

@pytest.mark.parametrize("spec, z, expected", [
    (HerglotzSpec(A=2.0), 1j, 2.0),
    (HerglotzSpec(atoms=((0.0, 1.0),)), 1j, 1j),
    (HerglotzSpec(mass_at_inf=1.0), 1 + 2j, 1 + 2j),
])
def test_eval_herglotz_oracles(spec, z, expected):
    assert eval_herglotz(spec, z) == pytest.approx(expected, abs=1e-14)

def test_eval_herglotz_rejects_lower_half_plane():
    with pytest.raises(ValueError):
        eval_herglotz(HerglotzSpec(A=1.0), 1.0 + 0j)

def test_spec_validation():
    with pytest.raises(ValueError):
        HerglotzSpec(atoms=((0.0, -1.0),))
    with pytest.raises(ValueError):
        HerglotzSpec(mass_at_inf=-1.0)
    with pytest.raises(ValueError):
        DensityPart(np.array([0.0, 1.0]), np.array([1.0, -1.0]))
    with pytest.raises(ValueError):
        DensityPart(np.array([1.0, 0.0]), np.array([1.0, 1.0]))

def test_herglotz_values_in_closed_upper_half_plane():
    spec = HerglotzSpec(
        A=-0.3,
        atoms=((-1.0, 0.5), (2.5, 1.5)),
        density=(DensityPart(np.linspace(-2, 2, 101), np.exp(-np.linspace(-2, 2, 101)**2)),),
        mass_at_inf=0.2
    )
    for z in default_grid():
        assert eval_herglotz(spec, complex(z)).imag >= -1e-12

def test_free_density():
    assert free_density(1.0) == pytest.approx(1 / (2 * np.pi))
    assert free_density(1e-12) < 1e-6
    assert free_density(-1.0) == 0

def test_free_measure_reconstructs_root():
    spec = free_spectral_measure()
    assert not spec.atoms and spec.mass_at_inf == 0
    target = lambda z: 1j * np.sqrt(z)
    A = fit_constant(spec, target, default_grid())
    assert A == pytest.approx(FREE_CONSTANT, abs=1e-2)
    F = herglotz_function(HerglotzSpec(A=A, density=spec.density))
    assert grid_dist(F, lambda z: SpherePoint(target(z)), default_grid()) <= 1e-2

def test_truncate_keeps_atom_inside_window():
    truncated = truncate_measure(HerglotzSpec(atoms=((0.0, 1.0),)), 5)
    assert truncated.atoms == ((0.0, 1.0),)
    assert len(truncated.density) == 1
    assert truncated.density[0].grid[0] == pytest.approx(5.0)

def test_truncate_moves_mass_at_infinity_to_n():
    truncated = truncate_measure(HerglotzSpec(mass_at_inf=1.0), 3)
    assert truncated.atoms == ((3.0, 1.0),)
    assert truncated.mass_at_inf == 0

def test_truncate_restricts_density():
    part = DensityPart(np.linspace(-10.05, 10.05, 202), np.ones(202))
    truncated = truncate_measure(HerglotzSpec(density=(part,)), 2)
    inner = truncated.density[0]
    assert inner.grid[0] == pytest.approx(-2) and inner.grid[-1] == pytest.approx(2)
    assert inner.integrate(np.ones_like(inner.grid)) == pytest.approx(4.0)

def test_truncate_rejects_level_zero():
    with pytest.raises(ValueError):
        truncate_measure(HerglotzSpec(), 0)

def test_measure_test_family():
    family = measure_test_functions()
    assert [f.value_at_infinity for f in family[:3]] == [0.0, 0.0, 1.0]
    assert len(family) == 3 + 1 + 2 * 32

def test_measure_weak_dist():
    delta_zero = HerglotzSpec(atoms=((0.0, 1.0),))
    delta_infinity = HerglotzSpec(mass_at_inf=1.0)
    assert measure_weak_dist(delta_zero, delta_zero) == 0
    assert measure_weak_dist(delta_zero, delta_infinity) > 0.1

def test_truncations_of_point_mass_at_infinity_converge():
    spec = HerglotzSpec(mass_at_inf=1.0)
    distances = [measure_weak_dist(truncate_measure(spec, n), spec) for n in (2, 4, 8, 16)]
    assert np.all(np.diff(distances) < 0)

def test_normalized_constant_of_free_measure():
    # Truncating the free measure leaves it unchanged, so the constant is that of i√z
    spec = HerglotzSpec(density=free_spectral_measure().density)
    assert schrodinger_normalized_constant(spec, 4) == pytest.approx(FREE_CONSTANT, abs=1e-4)

def test_normalized_constant_of_point_mass_at_infinity():
    free_moment, _ = quad(lambda t: t * float(free_density(t)), 0, 4, limit=200)
    expected = FREE_CONSTANT + 4 - free_moment
    assert schrodinger_normalized_constant(HerglotzSpec(mass_at_inf=1.0), 4) == pytest.approx(expected, rel=1e-7)
