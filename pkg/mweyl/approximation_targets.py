"""
Module containing the approximation target catalog: Hamiltonians with known m functions used by the density pipeline.
"""

from __future__ import annotations
import numpy as np
from numpy.typing import ArrayLike, NDArray

from .config import (
    REFERENCE_M_TOLERANCE, TRANSFORM_DEFAULT_CUTOFF, WINDOW_MIN, WINDOW_MAX, WINDOW_DISK_FACTOR
)
from .interfaces import ApproximationTarget
from .sphere_points import SpherePoint, default_grid, validate_grid
from .hamiltonians import Hamiltonian, ConstantSegment, SingularTail, ContinuedTail, p_matrix
from .canonical_system_solving import m_function, weyl_disk
from .schrodinger_equation_solving import Potential, BoundaryData
from .schrodinger_canonical_transformation import schrodinger_to_canonical

class HamiltonianTarget(ApproximationTarget):
    """
    Target given directly by a Hamiltonian. Its reference m function is computed by the canonical solver.
    """

    def __init__(self, H: Hamiltonian, name: str = "hamiltonian") -> None:
        super().__init__()
        self.H = H
        self.name = name
        self.log(f"Target '{name}': {H}")

    def get_name(self) -> str:
        return self.name

    def get_catalog_entry(self) -> ApproximationTarget.CatalogEntry:
        return ApproximationTarget.CatalogEntry("hamiltonian", {"segments": len(self.H.segments), "end": self.H.end})

    def get_hamiltonian(self) -> Hamiltonian:
        return self.H

    def get_reference_m(self, z: complex) -> SpherePoint:
        return m_function(self.H, z, REFERENCE_M_TOLERANCE)

    def get_window(self, tolerance: float = WINDOW_DISK_FACTOR, grid: ArrayLike | None = None) -> float:
        """
        Returns the start of a singular tail, and 1 for a singular tail from 0. Otherwise X doubles from WINDOW_MIN
        until every Weyl disk of the target at length X on the grid has chordal diameter ≤ `tolerance`,
        stopping at WINDOW_MAX or the end of the represented domain.
        """
        if isinstance(self.H.tail, SingularTail):
            return self.H.end if self.H.end > 0 else 1.0
        if tolerance <= 0:
            raise ValueError(f"Window tolerance must be positive, got {tolerance}")
        grid = default_grid() if grid is None else validate_grid(grid)
        cap = min(WINDOW_MAX, self.H.domain_end)
        X = min(WINDOW_MIN, cap)
        while X < cap and self._disk_diameter(X, grid) > tolerance:
            X = min(2 * X, cap)
        return X

    def _disk_diameter(self, X: float, grid: NDArray) -> float:
        return max(weyl_disk(self.H, X, complex(z)).chordal_diameter for z in grid)

class FreeTarget(HamiltonianTarget):
    """
    V ≡ c on the half line with a Dirichlet condition: m(z) = i√(z - c). The free case is c = 0.
    """

    def __init__(self, shift: float = 0.0, cutoff: float = TRANSFORM_DEFAULT_CUTOFF) -> None:
        self.shift = float(shift)
        H, _ = schrodinger_to_canonical(Potential.constant(self.shift), BoundaryData(0.0), cutoff=cutoff)
        super().__init__(H, "free" if self.shift == 0 else "shifted-free")

    def get_catalog_entry(self) -> ApproximationTarget.CatalogEntry:
        if self.shift == 0:
            return ApproximationTarget.CatalogEntry("free")
        return ApproximationTarget.CatalogEntry("shifted-free", {"c": self.shift})

    def get_reference_m(self, z: complex) -> SpherePoint:
        return SpherePoint(1j * np.sqrt(complex(z) - self.shift))

class ConstantAngleTarget(HamiltonianTarget):
    """
    H ≡ P_θ, a singular interval from 0: m(z) = -cot θ, and m = ∞ for θ = 0.
    """

    def __init__(self, theta: float) -> None:
        self.theta = float(np.mod(theta, np.pi))
        name = "h-infinity" if self.theta == 0 else "constant-angle"
        super().__init__(Hamiltonian.constant(p_matrix(self.theta)), name)

    def get_catalog_entry(self) -> ApproximationTarget.CatalogEntry:
        if self.theta == 0:
            return ApproximationTarget.CatalogEntry("h-infinity")
        return ApproximationTarget.CatalogEntry("constant-angle", {"theta": self.theta})

    def get_reference_m(self, z: complex) -> SpherePoint:
        return SpherePoint(-np.cos(self.theta), np.sin(self.theta))

class MassAtInfinityTarget(HamiltonianTarget):
    """
    P_0 on [0, 1) followed by a singular tail of type π/2: m(z) = z, a point mass at ∞ with no finite measure.
    """

    def __init__(self) -> None:
        H = Hamiltonian([ConstantSegment(0.0, 1.0, p_matrix(0.0))], SingularTail(np.pi / 2))
        super().__init__(H, "mass-at-infinity")

    def get_catalog_entry(self) -> ApproximationTarget.CatalogEntry:
        return ApproximationTarget.CatalogEntry("mass-at-infinity")

    def get_reference_m(self, z: complex) -> SpherePoint:
        return SpherePoint(z)

class TwoSegmentTarget(HamiltonianTarget):
    """
    P_{π/4} on [0, 1/2) followed by I/2 continued to ∞.
    """

    def __init__(self) -> None:
        H = Hamiltonian(
            [ConstantSegment(0.0, 0.5, p_matrix(np.pi / 4)), ConstantSegment(0.5, 1.0, 0.5 * np.eye(2))],
            ContinuedTail()
        )
        super().__init__(H, "two-segment")

    def get_catalog_entry(self) -> ApproximationTarget.CatalogEntry:
        return ApproximationTarget.CatalogEntry("two-segment")

CATALOG_KEYS = ("free", "shifted-free", "constant-angle", "h-infinity", "mass-at-infinity", "two-segment")

def resolve_target(key: str, parameters: dict | None = None) -> HamiltonianTarget:
    """
    Returns the catalog target for a key and its parameters ("c" for shifted-free, "theta" for constant-angle).
    """
    parameters = parameters or {}
    if key == "free":
        return FreeTarget()
    if key == "shifted-free":
        return FreeTarget(float(parameters.get("c", 1.0)))
    if key == "constant-angle":
        if "theta" not in parameters:
            raise ValueError("Catalog target 'constant-angle' needs parameter 'theta'")
        return ConstantAngleTarget(float(parameters["theta"]))
    if key == "h-infinity":
        return ConstantAngleTarget(0.0)
    if key == "mass-at-infinity":
        return MassAtInfinityTarget()
    if key == "two-segment":
        return TwoSegmentTarget()
    raise ValueError(f"Unknown catalog target '{key}', expected one of {', '.join(CATALOG_KEYS)}")
