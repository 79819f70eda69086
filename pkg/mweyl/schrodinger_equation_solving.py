"""
Module containing the solvers for the half-line Schrödinger equation -y'' + Vy = zy: potentials, boundary data,
adaptive integration and the m functions m_α obtained by truncating the half line.
"""

from __future__ import annotations
from collections.abc import Callable, Sequence
from dataclasses import dataclass
import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .config import (
    ODE_RELATIVE_TOLERANCE, ODE_ABSOLUTE_TOLERANCE, ODE_CHUNK_LENGTH, SCHRODINGER_INITIAL_CUTOFF,
    SCHRODINGER_MAX_CUTOFF, DEFAULT_M_TOLERANCE
)
from .sphere_points import SpherePoint, Mobius2, chordal_dist
from .canonical_system_solving import NonconvergenceError, MFunctionValue

# ----------------------------
# Potentials and boundary data
# ----------------------------

class Potential:
    """
    Potential V on [0, ∞), either sampled on an x-grid (cubic between samples, constant beyond the last one)
    or given in closed form by a vectorized function.
    """

    def __init__(
        self,
        grid: ArrayLike | None = None,
        values: ArrayLike | None = None,
        function: Callable[[NDArray], NDArray] | None = None,
        label: str = ""
    ) -> None:
        if (function is None) == (grid is None):
            raise ValueError("A potential is given either by samples or by a function")
        self.function = function
        self.label = label
        self.grid: NDArray[np.float64] | None = None
        self.values: NDArray[np.float64] | None = None
        self._spline: CubicSpline | None = None
        if grid is not None:
            grid = np.asarray(grid, dtype=np.float64)
            values = np.asarray(values, dtype=np.float64)
            if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
                raise ValueError("Potential samples must be 1D arrays of equal length ≥ 2")
            if grid[0] != 0 or np.any(np.diff(grid) <= 0):
                raise ValueError("Potential grid must start at 0 and be strictly increasing")
            if not np.all(np.isfinite(values)):
                raise ValueError("Potential values must be finite")
            self.grid = grid
            self.values = values
            self._spline = CubicSpline(grid, values)

    def __repr__(self) -> str:
        if self.grid is None:
            return f"Potential({self.label or 'function'})"
        return f"Potential({self.grid.size} samples on [0, {self.grid[-1]}])"

    @classmethod
    def from_samples(cls, grid: ArrayLike, values: ArrayLike, label: str = "") -> Potential:
        return cls(grid=grid, values=values, label=label)

    @classmethod
    def from_function(cls, function: Callable[[NDArray], NDArray], label: str = "") -> Potential:
        return cls(function=function, label=label)

    @classmethod
    def constant(cls, c: float) -> Potential:
        return cls(function=lambda x: np.full(np.shape(x), float(c)), label=f"constant({c})")

    @property
    def sample_end(self) -> float:
        """
        End of the sampled window, ∞ for closed-form potentials.
        """
        return np.inf if self.grid is None else float(self.grid[-1])

    def __call__(self, x: ArrayLike) -> NDArray[np.float64]:
        x = np.asarray(x, dtype=np.float64)
        if self.function is not None:
            return np.asarray(self.function(x), dtype=np.float64)
        return self._spline(np.clip(x, self.grid[0], self.grid[-1]))

@dataclass(frozen=True)
class LimitPoint:
    pass

@dataclass(frozen=True)
class Regular:
    """
    Regular endpoint b with the condition y(b) cos β + y'(b) sin β = 0.
    """
    b: float
    beta: float = 0.0

    def __post_init__(self) -> None:
        if not (self.b > 0 and np.isfinite(self.b)):
            raise ValueError(f"Regular endpoint must be positive and finite, got {self.b}")
        object.__setattr__(self, "beta", float(np.mod(self.beta, np.pi)))

Endpoint = LimitPoint | Regular

@dataclass(frozen=True)
class BoundaryData:
    """
    Condition y(0) cos α - y'(0) sin α = 0 at the left end and the right endpoint.
    """
    alpha: float = 0.0
    endpoint: Endpoint = LimitPoint()

    def __post_init__(self) -> None:
        if not np.isfinite(self.alpha):
            raise ValueError(f"Boundary angle must be finite, got {self.alpha}")
        object.__setattr__(self, "alpha", float(np.mod(self.alpha, np.pi)))

def rotation_matrix(alpha: float) -> NDArray[np.float64]:
    """
    Returns the SO(2) matrix taking m_0 to m_α = (cos α m_0 + sin α)/(-sin α m_0 + cos α).
    """
    c, s = np.cos(alpha), np.sin(alpha)
    return np.array([[c, s], [-s, c]])

def rotate_boundary(alpha: float, m: SpherePoint) -> SpherePoint:
    return Mobius2(rotation_matrix(alpha)).apply(m)

# ----------------------------
# Integration
# ----------------------------

def _right_hand_side(V: Potential, z: complex) -> Callable[[float, NDArray], NDArray]:
    def rhs(x: float, state: NDArray) -> NDArray:
        y, dy = state
        return np.array([dy, (float(V(x)) - z) * y], dtype=state.dtype)
    return rhs

def _integrate(
    V: Potential,
    z: complex,
    state: NDArray,
    x0: float,
    x1: float,
    t_eval: NDArray | None = None,
    rtol: float = ODE_RELATIVE_TOLERANCE,
    atol: float = ODE_ABSOLUTE_TOLERANCE
):
    result = solve_ivp(
        _right_hand_side(V, z), (x0, x1), state, method="DOP853", t_eval=t_eval, rtol=rtol, atol=atol
    )
    if result.status != 0:
        raise NonconvergenceError(f"Integration of -y'' + Vy = zy failed on [{x0}, {x1}]: {result.message}")
    return result

def solve_schrodinger(
    V: Potential,
    z: complex,
    y0: complex,
    dy0: complex,
    x_grid: ArrayLike,
    rtol: float = ODE_RELATIVE_TOLERANCE,
    atol: float = ODE_ABSOLUTE_TOLERANCE
) -> NDArray[np.complex128]:
    """
    Returns (y, y') on the grid as an array of shape [N][2] for the initial data y(grid[0]) = y0, y'(grid[0]) = dy0.
    """
    x_grid = np.asarray(x_grid, dtype=np.float64)
    if x_grid.ndim != 1 or x_grid.size == 0 or x_grid[0] < 0 or np.any(np.diff(x_grid) <= 0):
        raise ValueError("Schrödinger grid must be nonnegative and strictly increasing")
    state = np.array([y0, dy0], dtype=np.complex128)
    if x_grid.size == 1:
        return state[None, :]
    result = _integrate(V, z, state, float(x_grid[0]), float(x_grid[-1]), x_grid, rtol, atol)
    return result.y.T

def wronskian(first: NDArray, second: NDArray) -> NDArray[np.complex128]:
    """
    Returns y1 y2' - y1' y2 for two sampled solutions of shape [N][2].
    """
    return first[..., 0] * second[..., 1] - first[..., 1] * second[..., 0]

# ----------------------------
# m functions
# ----------------------------

def _values_at_zero(V: Potential, z: complex, b: float, beta: float) -> NDArray[np.complex128]:
    """
    Integrates the solution with y(b) = sin β, y'(b) = -cos β back to 0, renormalizing after every chunk.
    """
    state = np.array([np.sin(beta), -np.cos(beta)], dtype=np.complex128)
    edges = np.append(np.arange(b, 0.0, -ODE_CHUNK_LENGTH), 0.0)
    for x1, x0 in zip(edges[:-1], edges[1:]):
        state = _integrate(V, z, state, float(x1), float(x0)).y[:, -1]
        state = state / np.linalg.norm(state)
    return state

def _m_at_cutoff(V: Potential, alpha: float, z: complex, b: float, beta: float) -> SpherePoint:
    y, dy = _values_at_zero(V, z, b, beta)
    return rotate_boundary(alpha, SpherePoint(dy, y))

def weyl_m_schrodinger(
    V: Potential,
    bd: BoundaryData,
    z: complex,
    tol: float = DEFAULT_M_TOLERANCE,
    max_cutoff: float = SCHRODINGER_MAX_CUTOFF
) -> MFunctionValue:
    """
    Returns m_α(z) together with the final trial-angle spread and cutoff.
    A regular endpoint is integrated once. For a limit point the cutoff doubles until the values for
    β = 0 and β = π/2 agree within `tol`.
    """
    if z.imag <= 0:
        raise ValueError(f"m functions are evaluated in the upper half plane, got z = {z}")
    if tol <= 0:
        raise ValueError(f"Tolerance must be positive, got {tol}")
    if isinstance(bd.endpoint, Regular):
        point = _m_at_cutoff(V, bd.alpha, z, bd.endpoint.b, bd.endpoint.beta)
        return MFunctionValue(point, 0.0, bd.endpoint.b)

    b = SCHRODINGER_INITIAL_CUTOFF
    while True:
        dirichlet = _m_at_cutoff(V, bd.alpha, z, b, 0.0)
        neumann = _m_at_cutoff(V, bd.alpha, z, b, np.pi / 2)
        spread = chordal_dist(dirichlet, neumann)
        if spread < tol:
            return MFunctionValue(dirichlet, spread, b)
        if b >= max_cutoff:
            raise NonconvergenceError(
                f"Schrödinger m at z={z} did not settle below {tol} by b={b} (last spread {spread:.3e})"
            )
        b = min(2 * b, max_cutoff)

def m_schrodinger(
    V: Potential,
    bd: BoundaryData,
    z: complex,
    tol: float = DEFAULT_M_TOLERANCE,
    max_cutoff: float = SCHRODINGER_MAX_CUTOFF
) -> SpherePoint:
    return weyl_m_schrodinger(V, bd, z, tol, max_cutoff).point

def free_m(alpha: float, z: complex) -> SpherePoint:
    """
    Returns m_α of V ≡ 0 on the half line: the rotation of i√z (principal branch).
    """
    return rotate_boundary(alpha, SpherePoint(1j * np.sqrt(complex(z))))

# ----------------------------
# Large-|z| asymptotics
# ----------------------------

@dataclass
class AsymptoticResidual:
    y: float
    m: complex
    predicted: complex
    residual: float

def predicted_asymptotics(alpha: float, z: complex) -> complex:
    """
    Returns i√z for α = 0 and the two-term form -cot α + i/(sin²α √z) for α ∈ (0, π).
    """
    alpha = float(np.mod(alpha, np.pi))
    root = np.sqrt(complex(z))
    if alpha == 0:
        return 1j * root
    return -1 / np.tan(alpha) + 1j / (np.sin(alpha)**2 * root)

def asymptotic_residual(
    V: Potential,
    alpha: float,
    y_values: Sequence[float],
    tol: float = DEFAULT_M_TOLERANCE
) -> list[AsymptoticResidual]:
    """
    Returns |m_α(iy) - predicted(iy)| for each y, on a limit-point half line.
    """
    y_values = np.asarray(y_values, dtype=np.float64)
    if y_values.size == 0 or np.any(y_values <= 0) or np.any(np.diff(y_values) <= 0):
        raise ValueError("Asymptotic heights must be positive and increasing")
    rows = []
    for y in y_values:
        z = complex(0.0, y)
        m = m_schrodinger(V, BoundaryData(alpha), z, tol).to_complex()
        predicted = predicted_asymptotics(alpha, z)
        rows.append(AsymptoticResidual(float(y), m, predicted, float(abs(m - predicted))))
    return rows
