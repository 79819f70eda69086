"""
Module converting between Schrödinger equations and Schrödinger canonical systems H = P_φ.
Forward: the z = 0 solutions u_0, v_0 give t(x) = ∫ u_0² + v_0², R = |u_0 + i v_0| and φ = arg(u_0 + i v_0).
Backward: x(t) = ∫ √φ_t recovers the variable and V is computed from φ_t, φ_tt, φ_ttt.
"""

from __future__ import annotations
from dataclasses import dataclass
import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .config import (
    TRANSFORM_GRID_STEP, TRANSFORM_RELATIVE_TOLERANCE, TRANSFORM_ABSOLUTE_TOLERANCE,
    POTENTIAL_CROSS_CHECK_TOLERANCE, WRONSKIAN_TOLERANCE, TRANSFORM_DEFAULT_CUTOFF, POTENTIAL_REFINEMENT
)
from .hamiltonians import Hamiltonian, SmoothPhi, SingularTail, ContinuedTail, gauss_rule
from .canonical_system_solving import NonconvergenceError, endpoint_vector, solve_canonical, h_norm
from .schrodinger_equation_solving import Potential, BoundaryData, Regular

# Tolerance of the slope-1 start φ(0) = α, φ_t(0) = 1, φ_tt(0) = 0
_INITIAL_CONDITION_TOLERANCE = 1e-6
_INVERSE_NEWTON_STEPS = 4
# Decrease of the unwrapped angle tolerated as rounding once it has saturated
_ANGLE_ROUNDING = 1e-12

@dataclass
class TransformData:
    """
    Samples of the change of variables on a common x-grid, with t_b = ∞ for an untruncated half line.
    `connection` is C(x_end) = [[u_0, v_0], [u_0', v_0']], mapping canonical solutions to (y, y').
    `wronskian_residual` is the largest relative deviation of R² dφ/dx = u_0 v_0' - u_0' v_0 from 1.
    """
    alpha: float
    x: NDArray[np.float64]
    t: NDArray[np.float64]
    R: NDArray[np.float64]
    phi: NDArray[np.float64]
    t_b: float
    tail_angle: float | None
    connection: NDArray[np.float64]
    wronskian_residual: float = 0.0

    def __post_init__(self) -> None:
        # dt/dx = R²
        self._t_spline = CubicHermiteSpline(self.x, self.t, self.R**2)
        self._x_spline = CubicHermiteSpline(self.t, self.x, self.R**-2)

    def t_of_x(self, x: ArrayLike) -> NDArray[np.float64]:
        return self._t_spline(np.asarray(x, dtype=np.float64))

    def x_of_t(self, t: ArrayLike) -> NDArray[np.float64]:
        """
        Inverts t_of_x by Newton steps kept inside the bracketing sample interval.
        """
        t = np.asarray(t, dtype=np.float64)
        index = np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, self.t.size - 2)
        lo, hi = self.x[index], self.x[index + 1]
        x = np.clip(self._x_spline(t), lo, hi)
        slope = self._t_spline.derivative()
        for _ in range(_INVERSE_NEWTON_STEPS):
            x = np.clip(x - (self._t_spline(x) - t) / slope(x), lo, hi)
        return x

    def connection_determinant(self) -> float:
        return float(np.linalg.det(self.connection))

# ----------------------------
# Schrödinger → canonical
# ----------------------------

def _fundamental_system(V: Potential, alpha: float, x_grid: NDArray) -> NDArray[np.float64]:
    """
    Returns (u_0, u_0', v_0, v_0', t) on the grid for z = 0.
    """
    def rhs(x: float, state: NDArray) -> NDArray:
        u, du, v, dv, _ = state
        potential = float(V(x))
        return np.array([du, potential * u, dv, potential * v, u * u + v * v])

    initial = np.array([np.cos(alpha), -np.sin(alpha), np.sin(alpha), np.cos(alpha), 0.0])
    result = solve_ivp(
        rhs, (x_grid[0], x_grid[-1]), initial, method="DOP853", t_eval=x_grid,
        rtol=TRANSFORM_RELATIVE_TOLERANCE, atol=TRANSFORM_ABSOLUTE_TOLERANCE
    )
    if result.status != 0:
        raise NonconvergenceError(f"Integration of the z = 0 solutions failed: {result.message}")
    return result.y

def _phi_derivatives_in_t(R: NDArray, R_x: NDArray, R_xx: NDArray) -> NDArray[np.float64]:
    """
    Returns (φ_t, φ_tt, φ_ttt) from R and its x-derivatives, using φ_t = R⁻⁴ and d/dt = R⁻² d/dx.
    """
    phi_t = R**-4
    phi_tt = -4 * R_x * R**-7
    phi_ttt = -4 * R_xx * R**-9 + 28 * R_x**2 * R**-10
    return np.stack([phi_t, phi_tt, phi_ttt], axis=1)

def tail_angle(connection: NDArray, beta: float) -> float:
    """
    Returns the type β̃ of the singular tail equivalent to y(b) cos β + y'(b) sin β = 0.
    """
    w = connection.T @ np.array([np.cos(beta), np.sin(beta)])
    return float(np.mod(np.arctan2(w[1], w[0]), np.pi))

def recover_beta(connection: NDArray, theta: float) -> float:
    """
    Inverse of `tail_angle`.
    """
    w = np.linalg.solve(connection.T, np.array([np.cos(theta), np.sin(theta)]))
    return float(np.mod(np.arctan2(w[1], w[0]), np.pi))

def schrodinger_to_canonical(
    V: Potential,
    bd: BoundaryData,
    cutoff: float | None = None,
    step: float = TRANSFORM_GRID_STEP
) -> tuple[Hamiltonian, TransformData]:
    """
    Returns the Schrödinger canonical system with the same m function as (V, α) and the sampled change of variables.
    A regular endpoint b becomes a singular tail of type β̃ from t_b; a limit point is represented up to t(cutoff).
    """
    if isinstance(bd.endpoint, Regular):
        x_end = bd.endpoint.b
    else:
        x_end = TRANSFORM_DEFAULT_CUTOFF if cutoff is None else cutoff
    if not (x_end > 0 and np.isfinite(x_end)):
        raise ValueError(f"Transform window must be positive and finite, got {x_end}")
    x = np.linspace(0.0, x_end, int(np.ceil(x_end / step)) + 1)
    u, du, v, dv, t = _fundamental_system(V, bd.alpha, x)

    wronskian = u * dv - du * v
    scale = 1 + np.abs(u * dv) + np.abs(du * v)
    residual = float(np.max(np.abs(wronskian - 1) / scale))
    if residual > WRONSKIAN_TOLERANCE:
        raise NonconvergenceError(f"Connection matrix lost unit determinant (relative residual {residual:.3e})")

    R = np.hypot(u, v)
    if np.any(R <= 0):
        raise ValueError("u_0 and v_0 vanish simultaneously")
    phi = np.unwrap(np.angle(u + 1j * v))
    if np.any(np.diff(phi) < -_ANGLE_ROUNDING * (1 + np.abs(phi[1:]))):
        raise ValueError("Unwrapped angle decreases; refine the transform grid")
    R_x = (u * du + v * dv) / R
    R_xx = (du**2 + dv**2 + V(x) * R**2 - R_x**2) / R
    derivatives = np.column_stack((phi, _phi_derivatives_in_t(R, R_x, R_xx)))
    smooth = SmoothPhi(t, derivatives)

    connection = np.array([[u[-1], v[-1]], [du[-1], dv[-1]]])
    if isinstance(bd.endpoint, Regular):
        theta = tail_angle(connection, bd.endpoint.beta)
        H = Hamiltonian.from_phi(smooth, tail=SingularTail(theta))
        t_b = float(t[-1])
    else:
        theta = None
        H = Hamiltonian.from_phi(smooth, tail=ContinuedTail())
        t_b = np.inf
    data = TransformData(bd.alpha, x, t, R, phi, t_b, theta, connection, residual)
    return H, data

def trivial_extension_norm(H: Hamiltonian, z: complex, length: float = 1.0) -> float:
    """
    Returns ∫ f*Hf over [t_b, t_b + length] for the Weyl solution f on a singular tail, which vanishes.
    """
    if not isinstance(H.tail, SingularTail):
        raise ValueError("Trivial extensions need a singular tail")
    f = endpoint_vector(H, z)
    solution = solve_canonical(H, z, f, np.array([H.end, H.end + length]))
    return h_norm(H, solution)

# ----------------------------
# Canonical → Schrödinger
# ----------------------------

def potential_from_phi(derivatives: NDArray) -> NDArray[np.float64]:
    """
    Returns V = (7/16) φ_tt²/φ_t³ - (1/4) φ_ttt/φ_t² - φ_t for rows (φ_t, φ_tt, φ_ttt).
    """
    phi_t, phi_tt, phi_ttt = derivatives.T
    return 7 / 16 * phi_tt**2 / phi_t**3 - 0.25 * phi_ttt / phi_t**2 - phi_t

def potential_from_r(derivatives: NDArray) -> NDArray[np.float64]:
    """
    Returns V = R_xx/R - R⁻⁴ with R = φ_t^(-1/4), its x-derivatives taken through dx/dt = R⁻².
    """
    phi_t, phi_tt, phi_ttt = derivatives.T
    R = phi_t**-0.25
    R_t = -0.25 * phi_t**-1.25 * phi_tt
    R_tt = -0.25 * (phi_ttt * phi_t**-1.25 - 1.25 * phi_tt**2 * phi_t**-2.25)
    R_xx = R**2 * (2 * R * R_t**2 + R**2 * R_tt)
    return R_xx / R - R**-4

def _x_of_t(phi: SmoothPhi, t: NDArray) -> NDArray[np.float64]:
    nodes, weights = gauss_rule(t)
    slopes = phi.derivative(nodes.ravel(), 1).reshape(nodes.shape)
    if np.any(slopes <= 0):
        raise ValueError("Angle must be strictly increasing for the change of variables")
    return np.concatenate(([0.0], np.cumsum(np.sum(weights * np.sqrt(slopes), axis=1))))

def _sample_grid(phi: SmoothPhi, end: float) -> NDArray[np.float64]:
    """
    Returns the t-grid V is sampled on: the stored nodes below `end` plus `end`, every interval split into
    POTENTIAL_REFINEMENT parts when φ has an exact evaluator.
    """
    nodes = np.append(phi.grid[phi.grid < end], end)
    if phi.evaluator is None:
        return nodes
    fractions = np.arange(POTENTIAL_REFINEMENT) / POTENTIAL_REFINEMENT
    inner = nodes[:-1, None] + np.diff(nodes)[:, None] * fractions[None, :]
    return np.append(inner.ravel(), end)

def _sampled_derivatives(phi: SmoothPhi, t: NDArray) -> NDArray[np.float64]:
    """
    Returns rows (φ, φ_t, φ_tt, φ_ttt) at t. Without an evaluator the stored table is used at grid nodes,
    since third derivatives of the Hermite interpolant are dominated by rounding on short intervals.
    """
    if phi.evaluator is not None:
        return np.stack([phi.evaluator(t, order) for order in range(4)], axis=1)
    index = np.clip(np.searchsorted(phi.grid, t), 0, phi.grid.size - 1)
    on_grid = phi.grid[index] == t
    values = np.empty((t.size, 4))
    values[on_grid] = phi.derivatives[index[on_grid]]
    if not np.all(on_grid):
        off = ~on_grid
        values[off] = np.stack([phi.derivative(t[off], order) for order in range(4)], axis=1)
    return values

def canonical_to_schrodinger(phi: SmoothPhi, end: float | None = None) -> tuple[Potential, float, TransformData]:
    """
    Returns the potential, the boundary angle α = φ(0) and the change of variables for H = P_φ on [0, end].
    """
    end = phi.end if end is None else end
    if phi.start != 0 or not 0 < end <= phi.end:
        raise ValueError(f"Angle grid [{phi.start}, {phi.end}] must start at 0 and cover [0, {end}]")
    t = _sample_grid(phi, end)
    values = _sampled_derivatives(phi, t)
    if np.any(values[:, 1] <= 0):
        raise ValueError("Angle must have a positive first derivative")
    start = values[0]
    if abs(start[1] - 1) > _INITIAL_CONDITION_TOLERANCE or abs(start[2]) > _INITIAL_CONDITION_TOLERANCE:
        raise ValueError(f"Angle must start with φ_t = 1 and φ_tt = 0, got φ_t = {start[1]}, φ_tt = {start[2]}")

    V_t = potential_from_phi(values[:, 1:])
    V_r = potential_from_r(values[:, 1:])
    mismatch = float(np.max(np.abs(V_t - V_r) / (1 + np.abs(V_t))))
    if mismatch > POTENTIAL_CROSS_CHECK_TOLERANCE:
        raise ValueError(f"Potential formulas disagree (relative mismatch {mismatch:.3e})")

    x = _x_of_t(phi, t)
    alpha = float(np.mod(values[0, 0], np.pi))
    R = values[:, 1]**-0.25
    # u_0 + i v_0 = R e^{iφ} and φ_x = R⁻², R_x = -φ_tt φ_t^(-7/4) / 4
    R_x = -0.25 * values[-1, 2] * values[-1, 1]**-1.75
    angle, r = values[-1, 0], R[-1]
    u, v = r * np.cos(angle), r * np.sin(angle)
    du = R_x * np.cos(angle) - np.sin(angle) / r
    dv = R_x * np.sin(angle) + np.cos(angle) / r
    connection = np.array([[u, v], [du, dv]])
    data = TransformData(alpha, x, t, R, values[:, 0], float(end), None, connection, 0.0)
    return Potential.from_samples(x, V_t), alpha, data

def roundtrip_residual(V: Potential, alpha: float, x_window: float) -> float:
    """
    Returns the largest deviation between V and the potential recovered from its canonical system on [0, x_window].
    """
    H, _ = schrodinger_to_canonical(V, BoundaryData(alpha), cutoff=x_window)
    recovered, _, data = canonical_to_schrodinger(H.segments[0].phi)
    return float(np.max(np.abs(recovered.values - V(data.x))))
