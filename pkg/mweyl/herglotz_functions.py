"""
Module containing the `HerglotzSpec` class, which represents a Herglotz function F(z) = A + ∫ (1+tz)/(t-z) dρ(t)
through its constant and measure, together with evaluation, the free spectral measure and measure truncation.
"""

from __future__ import annotations
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace
import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import simpson, quad

from .config import FREE_MEASURE_T_MIN, FREE_MEASURE_T_MAX, FREE_MEASURE_GRID_POINTS
from .sphere_points import SpherePoint, validate_grid

# Constant A of i√z, whose measure is the free spectral measure
FREE_CONSTANT: float = -1 / np.sqrt(2)

@dataclass(frozen=True, eq=False)
class DensityPart:
    """
    Absolutely continuous part of a measure: density values ρ'(t) ≥ 0 on an increasing grid,
    piecewise-linear between samples.
    """
    grid: NDArray[np.float64]
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise ValueError("Density grid and values must be 1D arrays of equal length ≥ 2")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("Density grid must be strictly increasing")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("Density values must be finite and nonnegative")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def integrate(self, integrand: NDArray) -> complex | float:
        """
        Returns the composite Simpson quadrature of `integrand` (sampled on the grid) against the density.
        """
        return simpson(integrand * self.values, x=self.grid)

    def restricted(self, lo: float, hi: float) -> DensityPart | None:
        """
        Returns the part restricted to (lo, hi), with interpolated boundary nodes, or None if nothing remains.
        """
        inside = (self.grid > lo) & (self.grid < hi)
        grid = self.grid[inside]
        if self.grid[0] < lo < self.grid[-1]:
            grid = np.concatenate(([lo], grid))
        if self.grid[0] < hi < self.grid[-1]:
            grid = np.concatenate((grid, [hi]))
        if grid.size < 2:
            return None
        return DensityPart(grid, np.interp(grid, self.grid, self.values))

@dataclass(frozen=True, eq=False)
class HerglotzSpec:
    """
    Constant A plus a finite positive measure made of atoms, density parts and a point mass at ∞.
    """
    A: float = 0.0
    atoms: tuple[tuple[float, float], ...] = ()
    density: tuple[DensityPart, ...] = ()
    mass_at_inf: float = 0.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.A):
            raise ValueError(f"Constant A must be finite, got {self.A}")
        atoms = tuple((float(t), float(w)) for t, w in self.atoms)
        for t, w in atoms:
            if not np.isfinite(t) or not (w > 0 and np.isfinite(w)):
                raise ValueError(f"Atom ({t}, {w}) must have a finite location and positive finite weight")
        if not (self.mass_at_inf >= 0 and np.isfinite(self.mass_at_inf)):
            raise ValueError(f"Mass at infinity must be finite and nonnegative, got {self.mass_at_inf}")
        object.__setattr__(self, "A", float(self.A))
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "density", tuple(self.density))
        object.__setattr__(self, "mass_at_inf", float(self.mass_at_inf))

    def total_mass(self) -> float:
        atom_mass = sum(w for _, w in self.atoms)
        density_mass = sum(part.integrate(np.ones_like(part.grid)) for part in self.density)
        return float(atom_mass + density_mass + self.mass_at_inf)

    def integrate(self, test_function: Callable[[NDArray], NDArray], value_at_infinity: float = 0.0) -> float:
        """
        Returns ∫ f dρ for a continuous function on the extended real line.
        """
        total = sum(w * float(test_function(np.array([t]))[0]) for t, w in self.atoms)
        total += sum(part.integrate(test_function(part.grid)) for part in self.density)
        return float(total + self.mass_at_inf * value_at_infinity)

def herglotz_kernel(t: ArrayLike, z: complex) -> NDArray[np.complex128]:
    t = np.asarray(t, dtype=np.float64)
    return (1 + t * z) / (t - z)

def eval_herglotz(spec: HerglotzSpec, z: complex) -> complex:
    if z.imag <= 0:
        raise ValueError(f"Herglotz functions are evaluated in the upper half plane, got z = {z}")
    value = spec.A + spec.mass_at_inf * z
    for t, w in spec.atoms:
        value += w * (1 + t * z) / (t - z)
    for part in spec.density:
        value += part.integrate(herglotz_kernel(part.grid, z))
    return complex(value)

def herglotz_function(spec: HerglotzSpec) -> Callable[[complex], SpherePoint]:
    """
    Returns z ↦ F(z) as a sphere-valued function, ready for `grid_dist`.
    """
    return lambda z: SpherePoint.from_complex(eval_herglotz(spec, z))

def free_density(t: ArrayLike) -> NDArray[np.float64]:
    """
    Returns ρ'_free(t) = √t / (π(1+t²)) for t > 0 and 0 otherwise.
    """
    t = np.asarray(t, dtype=np.float64)
    return np.where(t > 0, np.sqrt(np.clip(t, 0, None)) / (np.pi * (1 + t**2)), 0.0)

def free_spectral_measure(
    t_max: float = FREE_MEASURE_T_MAX,
    grid_points: int = FREE_MEASURE_GRID_POINTS,
    t_min: float = FREE_MEASURE_T_MIN
) -> HerglotzSpec:
    """
    Returns the spectral measure of -y'' = zy with a Dirichlet condition, sampled on a geometric grid.
    Its constant is left at 0; F(z) = i√z needs A = `FREE_CONSTANT`.
    """
    if t_max <= t_min:
        raise ValueError(f"t_max must exceed {t_min}, got {t_max}")
    grid = np.geomspace(t_min, t_max, grid_points)
    return HerglotzSpec(density=(DensityPart(grid, free_density(grid)),))

def truncate_measure(
    spec: HerglotzSpec,
    n: int,
    t_max: float = FREE_MEASURE_T_MAX,
    grid_points: int = FREE_MEASURE_GRID_POINTS
) -> HerglotzSpec:
    """
    Returns χ_(-n,n) dρ + χ_[n,t_max] dρ_free + ρ{∞} δ_n. The constant A is carried over unchanged.
    """
    if n < 1:
        raise ValueError(f"Truncation level must be at least 1, got {n}")
    atoms = [(t, w) for t, w in spec.atoms if -n < t < n]
    if spec.mass_at_inf > 0:
        atoms.append((float(n), spec.mass_at_inf))
    density = [part for part in (p.restricted(-n, n) for p in spec.density) if part is not None]
    if n < t_max:
        tail_grid = np.geomspace(n, t_max, grid_points)
        density.append(DensityPart(tail_grid, free_density(tail_grid)))
    return HerglotzSpec(A=spec.A, atoms=tuple(atoms), density=tuple(density), mass_at_inf=0.0)

def schrodinger_normalized_constant(spec: HerglotzSpec, n: int) -> float:
    """
    Returns the constant A_n for which the truncation of `spec` at level n satisfies F_n(iy) - i√(iy) → 0 as y → ∞,
    i.e. A_n = -1/√2 + ∫ t dν with ν the difference between the truncated measure and the free measure.
    """
    moment = sum(w * t for t, w in spec.atoms if -n < t < n) + n * spec.mass_at_inf
    for part in (p.restricted(-n, n) for p in spec.density):
        if part is not None:
            moment += part.integrate(part.grid)
    free_moment, _ = quad(lambda t: t * float(free_density(t)), 0.0, float(n), limit=200)
    return float(FREE_CONSTANT + moment - free_moment)

def fit_constant(spec: HerglotzSpec, target: Callable[[complex], complex], grid: Sequence[complex]) -> float:
    """
    Returns the real constant minimizing the squared error between F and `target` on the grid.
    """
    grid = validate_grid(grid)
    centered = replace(spec, A=0.0)
    residuals = [target(z) - eval_herglotz(centered, z) for z in grid]
    return float(np.mean(np.real(residuals)))

@dataclass(frozen=True)
class MeasureTestFunction:
    """
    Continuous function on ℝ ∪ {∞} used to metrize weak-* convergence of measures.
    """
    function: Callable[[NDArray], NDArray]
    value_at_infinity: float = 0.0
    label: str = field(default="")

def _hat(center: float, half_width: float) -> Callable[[NDArray], NDArray]:
    return lambda t: np.clip(1 - np.abs(np.asarray(t, dtype=np.float64) - center) / half_width, 0, None)

def measure_test_functions(max_center: float = 8.0) -> list[MeasureTestFunction]:
    """
    Returns the fixed test family: 1/(1+t²), t/(1+t²), t²/(1+t²), then hats of width 1/2 centered at
    0, 1/4, -1/4, 1/2, -1/2, … up to |center| ≤ `max_center`.
    """
    family = [
        MeasureTestFunction(lambda t: 1 / (1 + np.asarray(t)**2), 0.0, "1/(1+t^2)"),
        MeasureTestFunction(lambda t: np.asarray(t) / (1 + np.asarray(t)**2), 0.0, "t/(1+t^2)"),
        MeasureTestFunction(lambda t: np.asarray(t)**2 / (1 + np.asarray(t)**2), 1.0, "t^2/(1+t^2)"),
        MeasureTestFunction(_hat(0.0, 0.25), 0.0, "hat(0)"),
    ]
    for j in range(1, int(4 * max_center) + 1):
        for center in (j / 4, -j / 4):
            family.append(MeasureTestFunction(_hat(center, 0.25), 0.0, f"hat({center})"))
    return family

def measure_weak_dist(
    rho1: HerglotzSpec,
    rho2: HerglotzSpec,
    test_functions: Sequence[MeasureTestFunction] | None = None
) -> float:
    """
    Returns Σ_k 2^-k |∫f_k dρ1 - ∫f_k dρ2| / (1 + |·|). Constants A are ignored.
    """
    if test_functions is None:
        test_functions = measure_test_functions()
    total = 0.0
    for k, f in enumerate(test_functions, start=1):
        d = abs(
            rho1.integrate(f.function, f.value_at_infinity)
            - rho2.integrate(f.function, f.value_at_infinity)
        )
        total += 2.0**-k * d / (1 + d)
    return total
