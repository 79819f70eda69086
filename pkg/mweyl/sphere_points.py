"""
Module containing the `SpherePoint` and `Mobius2` classes for projective arithmetic on the Riemann sphere.
m-function values live here so that ∞ = [1:0] is an ordinary point.
"""

from __future__ import annotations
from collections.abc import Callable, Iterable
import numpy as np
from numpy.typing import NDArray

from .config import MATRIX_TOLERANCE, DEFAULT_GRID_REAL, DEFAULT_GRID_IMAG

class SpherePoint:
    """
    Point [p:q] of the Riemann sphere in homogeneous coordinates.
    Equality is projective, so compare points with `chordal_dist` rather than by coordinates.
    """

    def __init__(self, p: complex, q: complex = 1.0) -> None:
        p, q = complex(p), complex(q)
        if p == 0 and q == 0:
            raise ValueError("Homogeneous coordinates [0:0] do not define a point")
        if not (np.isfinite(p) and np.isfinite(q)):
            raise ValueError(f"Homogeneous coordinates must be finite, got [{p}:{q}]")
        self.p = p
        self.q = q

    def __repr__(self) -> str:
        return f"SpherePoint({self.p}, {self.q})"

    @classmethod
    def from_complex(cls, w: complex) -> SpherePoint:
        if np.isinf(w):
            return cls.infinity()
        return cls(w, 1.0)

    @classmethod
    def infinity(cls) -> SpherePoint:
        return cls(1.0, 0.0)

    def normalized(self) -> tuple[complex, complex]:
        """
        Returns the coordinates scaled to unit Euclidean norm.
        """
        norm = np.hypot(abs(self.p), abs(self.q))
        return self.p / norm, self.q / norm

    def is_infinite(self, tolerance: float = 0.0) -> bool:
        p, q = self.normalized()
        return abs(q) <= tolerance * abs(p)

    def to_complex(self) -> complex:
        """
        Returns p/q, or complex infinity for [p:0].
        """
        if self.q == 0:
            return complex(np.inf, 0.0)
        return self.p / self.q

    def negative_reciprocal(self) -> SpherePoint:
        return SpherePoint(-self.q, self.p)

class Mobius2:
    """
    Nonsingular 2×2 complex matrix acting on the Riemann sphere by [p:q] ↦ [ap + bq : cp + dq].
    """

    def __init__(self, matrix: NDArray, validate: bool = True) -> None:
        """
        Argument `matrix` must be of shape [2][2].
        Transfer matrices (det = 1, possibly huge entries) are checked by their callers and pass `validate=False`.
        """
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.shape != (2, 2):
            raise ValueError(f"Möbius matrix must have shape (2, 2), got {matrix.shape}")
        self.matrix = matrix
        if not validate:
            return
        scale = np.max(np.abs(matrix))
        det = matrix[0, 0] * matrix[1, 1] - matrix[0, 1] * matrix[1, 0]
        if not np.all(np.isfinite(matrix)) or abs(det) <= MATRIX_TOLERANCE * scale**2:
            raise ValueError(f"Möbius matrix is singular (det = {det})")

    def __repr__(self) -> str:
        return f"Mobius2({self.matrix.tolist()})"

    def __matmul__(self, other: Mobius2) -> Mobius2:
        return Mobius2(self.matrix @ other.matrix, validate=False)

    @classmethod
    def from_entries(cls, a: complex, b: complex, c: complex, d: complex) -> Mobius2:
        return cls(np.array([[a, b], [c, d]], dtype=np.complex128))

    @classmethod
    def identity(cls) -> Mobius2:
        return cls(np.eye(2, dtype=np.complex128))

    @property
    def a(self) -> complex:
        return complex(self.matrix[0, 0])

    @property
    def b(self) -> complex:
        return complex(self.matrix[0, 1])

    @property
    def c(self) -> complex:
        return complex(self.matrix[1, 0])

    @property
    def d(self) -> complex:
        return complex(self.matrix[1, 1])

    def determinant(self) -> complex:
        return self.a * self.d - self.b * self.c

    def adjugate(self) -> Mobius2:
        """
        Returns [[d, -b], [-c, a]], which acts on the sphere as the inverse map.
        """
        return Mobius2(np.array([[self.d, -self.b], [-self.c, self.a]]), validate=False)

    def apply(self, w: SpherePoint) -> SpherePoint:
        return mobius_apply(self, w)

def mobius_apply(M: Mobius2, w: SpherePoint) -> SpherePoint:
    p, q = w.normalized()
    return SpherePoint(M.a * p + M.b * q, M.c * p + M.d * q)

def chordal_dist(w1: SpherePoint, w2: SpherePoint) -> float:
    """
    Returns the chordal distance 2|p1 q2 - p2 q1| / (|w1| |w2|), a value in [0, 2].
    """
    p1, q1 = w1.normalized()
    p2, q2 = w2.normalized()
    return float(min(2.0, 2.0 * abs(p1 * q2 - p2 * q1)))

def grid_dist(
    f: Callable[[complex], SpherePoint],
    g: Callable[[complex], SpherePoint],
    grid: Iterable[complex]
) -> float:
    """
    Returns the largest chordal distance between `f` and `g` over the grid.
    """
    grid = validate_grid(grid)
    return max(chordal_dist(f(z), g(z)) for z in grid)

def default_grid() -> NDArray[np.complex128]:
    """
    Returns the 15-point default grid ordered by real part, then imaginary part.
    """
    return np.array([complex(x, y) for x in DEFAULT_GRID_REAL for y in DEFAULT_GRID_IMAG])

def validate_grid(grid: Iterable[complex]) -> NDArray[np.complex128]:
    grid = np.asarray(list(grid), dtype=np.complex128)
    if grid.size == 0:
        raise ValueError("Evaluation grid is empty")
    if np.any(grid.imag <= 0):
        raise ValueError("Evaluation grid must lie in the open upper half plane")
    return grid
