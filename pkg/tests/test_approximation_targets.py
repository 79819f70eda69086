import numpy as np
import pytest

from mweyl.sphere_points import chordal_dist, default_grid
from mweyl.hamiltonians import Hamiltonian, SingularTail, p_matrix
from mweyl.canonical_system_solving import m_function, weyl_disk
from mweyl.approximation_targets import (
    CATALOG_KEYS, HamiltonianTarget, FreeTarget, ConstantAngleTarget, MassAtInfinityTarget, TwoSegmentTarget,
    resolve_target
)
from mweyl.config import WINDOW_MIN, WINDOW_MAX

SMALL_GRID = [1j, -1 + 0.5j, 2 + 2j]
WINDOWS = [WINDOW_MIN * 2**k for k in range(int(np.log2(WINDOW_MAX / WINDOW_MIN)) + 1)]

@pytest.mark.parametrize("key, parameters, expected", [
    ("constant-angle", {"theta": 0.5}, ConstantAngleTarget),
    ("h-infinity", None, ConstantAngleTarget),
    ("mass-at-infinity", None, MassAtInfinityTarget),
    ("two-segment", {}, TwoSegmentTarget)
])
def test_resolve_target(key, parameters, expected):
    target = resolve_target(key, parameters)
    assert isinstance(target, expected)
    assert target.get_catalog_entry().key == key
    assert key in CATALOG_KEYS

def test_resolve_target_errors():
    with pytest.raises(ValueError):
        resolve_target("constant-angle")
    with pytest.raises(ValueError):
        resolve_target("airy")

def test_constant_angle_target():
    target = ConstantAngleTarget(np.pi + np.pi / 3)
    assert target.theta == pytest.approx(np.pi / 3)
    assert target.get_name() == "constant-angle"
    assert target.get_catalog_entry().parameters == {"theta": target.theta}
    assert target.get_window() == 1.0
    for z in default_grid():
        z = complex(z)
        assert chordal_dist(target.get_reference_m(z), m_function(target.get_hamiltonian(), z)) <= 1e-12

def test_h_infinity_reference_is_infinite():
    target = ConstantAngleTarget(0.0)
    assert target.get_name() == "h-infinity"
    assert target.get_reference_m(1j).is_infinite()

def test_mass_at_infinity_target():
    target = MassAtInfinityTarget()
    assert target.get_window() == 1.0
    assert target.get_hamiltonian().tail == SingularTail(np.pi / 2)
    for z in default_grid():
        z = complex(z)
        assert chordal_dist(target.get_reference_m(z), m_function(target.get_hamiltonian(), z)) <= 1e-12

def test_two_segment_target():
    target = TwoSegmentTarget()
    assert target.get_window(grid=SMALL_GRID) in WINDOWS
    assert target.get_catalog_entry().parameters == {}
    assert not target.get_reference_m(1j).is_infinite()

def test_hamiltonian_target_window():
    singular = HamiltonianTarget(Hamiltonian.constant(p_matrix(0.4)))
    assert singular.get_window() == 1.0
    assert singular.get_catalog_entry().key == "hamiltonian"
    continued = HamiltonianTarget(Hamiltonian.constant(0.5 * np.eye(2)))
    assert continued.get_window(grid=SMALL_GRID) in WINDOWS
    assert "Target 'hamiltonian'" in continued.get_log()

def test_shifted_free_target():
    target = FreeTarget(1.0, cutoff=5.0)
    assert target.get_name() == "shifted-free"
    assert target.get_catalog_entry().parameters == {"c": 1.0}
    assert target.get_window(grid=SMALL_GRID) in WINDOWS
    assert target.get_reference_m(1j).to_complex() == pytest.approx(1j * np.sqrt(1j - 1.0))

def test_free_target_reference_matches_canonical_system():
    target = FreeTarget()
    assert target.get_catalog_entry().key == "free"
    z = 1j
    assert chordal_dist(m_function(target.get_hamiltonian(), z), target.get_reference_m(z)) <= 1e-5

def disk_diameter(H, X):
    return max(weyl_disk(H, X, z).chordal_diameter for z in SMALL_GRID)

@pytest.mark.parametrize("tolerance", [0.25, 2.0**-7])
def test_window_is_the_first_doubling_with_small_disks(tolerance):
    target = TwoSegmentTarget()
    H = target.get_hamiltonian()
    X = target.get_window(tolerance, SMALL_GRID)
    assert X in WINDOWS
    if X < WINDOW_MAX:
        assert disk_diameter(H, X) <= tolerance
    if X > WINDOW_MIN:
        assert disk_diameter(H, X / 2) > tolerance

def test_window_grows_as_the_tolerance_tightens():
    target = TwoSegmentTarget()
    windows = [target.get_window(tolerance, SMALL_GRID) for tolerance in (0.25, 2.0**-5, 2.0**-9)]
    assert windows == sorted(windows)
    assert windows[-1] > windows[0]

def test_window_stays_inside_the_represented_domain():
    target = FreeTarget(cutoff=2.0)
    H = target.get_hamiltonian()
    assert target.get_window(1e-9, SMALL_GRID) == pytest.approx(min(WINDOW_MAX, H.domain_end))

def test_window_tolerance_validation():
    with pytest.raises(ValueError):
        TwoSegmentTarget().get_window(0.0)
