"""
Module containing the three constructions that turn a Hamiltonian into a smooth Schrödinger angle:
dyadic step angles, piecewise-linear corner rounding and B-spline mollification.
"""

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import BSpline

from .config import MOLLIFIER_SAMPLES_PER_HALF_WIDTH, SHORT_STEP_FRACTION
from .hamiltonians import Hamiltonian, StepPhi, PwlPhi, SmoothPhi, dyadic_averages, eigen_decompose

# Relative length below which a sub-step counts as empty
_EMPTY_SUBSTEP = 1e-14
# Raw values closer than this are treated as equal when lifting and merging
_ANGLE_TOLERANCE = 1e-12

# ----------------------------
# Dyadic step angles
# ----------------------------

def build_step_phi(H: Hamiltonian, n: int, X: float) -> StepPhi:
    """
    Returns the step angle φ_n on [0, X): on every dyadic cell of width 2^-n the average
    λ P_φ + (1-λ) P_{φ+π/2} is realized by φ on the first λ-fraction and φ + π/2 on the rest.
    Values are lifted by the least multiples of π that make them nondecreasing, and equal neighbours are merged.
    """
    edges, averages = dyadic_averages(H, n, X)
    breaks: list[float] = []
    values: list[float] = []
    for lo, hi, average in zip(edges[:-1], edges[1:], averages):
        lam, phi = eigen_decompose(_symmetrized(average))
        split = lo + lam * (hi - lo)
        for start, end, value in ((lo, split, phi), (split, hi, phi + np.pi / 2)):
            if end - start > _EMPTY_SUBSTEP * (hi - lo):
                breaks.append(start)
                values.append(value)
    return _merged(np.append(breaks, X), _lifted(np.array(values)))

def _symmetrized(M: NDArray) -> NDArray:
    # Quadrature leaves rounding-level asymmetry and trace error
    M = 0.5 * (M + M.T)
    return M / np.trace(M)

def _lifted(raw: NDArray) -> NDArray:
    # Least multiples of π making every value at least its predecessor; the first value is kept
    lifts = np.concatenate(([0.0], np.cumsum(np.ceil((raw[:-1] - raw[1:]) / np.pi - _ANGLE_TOLERANCE))))
    return raw + np.pi * lifts

def _merged(breaks: NDArray, values: NDArray) -> StepPhi:
    keep = np.concatenate(([True], np.diff(values) > _ANGLE_TOLERANCE))
    return StepPhi(np.append(breaks[:-1][keep], breaks[-1]), values[keep])

def merge_short_steps(step: StepPhi, min_length: float) -> StepPhi:
    """
    Returns the step with every step shorter than `min_length` (except the first) absorbed by its left neighbour.
    The remaining values are reduced modulo π and lifted again, so a dropped quarter turn does not leave a
    half turn behind. P_φ only depends on φ modulo π, so the Hamiltonian changes only on the dropped steps.
    """
    keep = np.diff(step.breaks) >= min_length
    keep[0] = True
    if np.all(keep):
        return step
    breaks = np.append(step.breaks[:-1][keep], step.breaks[-1])
    values = step.values[keep]
    offsets = np.mod(values - values[0], np.pi)
    offsets[offsets > np.pi - _ANGLE_TOLERANCE] = 0.0
    return _merged(breaks, _lifted(values[0] + offsets))

def lift_above(step: StepPhi, alpha: float) -> StepPhi:
    """
    Returns the step shifted by the least multiple of π that places its first value strictly above α.
    """
    k = np.floor((alpha - step.values[0]) / np.pi) + 1
    return step.shifted(k * np.pi)

# ----------------------------
# Piecewise-linear corner rounding
# ----------------------------

def pwl_approximate(step: StepPhi, alpha: float, epsilon: float, delta: float) -> PwlPhi:
    """
    Returns a strictly increasing continuous piecewise-linear angle that starts at (0, α), rises with slope 1 on [0, δ],
    ramps onto the first step and then follows the step with slightly tilted plateaus joined by ramps of width ≤ ε.
    Steps shorter than SHORT_STEP_FRACTION · ε are merged first, so no ramp is narrower than SHORT_STEP_FRACTION · ε / 2.
    """
    if epsilon <= 0 or delta <= 0:
        raise ValueError(f"Corner width and initial width must be positive, got ε={epsilon}, δ={delta}")
    step = lift_above(merge_short_steps(step, SHORT_STEP_FRACTION * epsilon), alpha + delta)
    breaks, values = step.breaks, step.values
    lengths = np.diff(breaks)
    jumps = np.diff(values)
    if np.any(jumps <= 0):
        step = _merged(breaks, values)
        breaks, values, lengths, jumps = step.breaks, step.values, np.diff(step.breaks), np.diff(step.values)

    ramp_widths = np.minimum(epsilon, 0.5 * np.minimum(lengths[:-1], lengths[1:]))
    # Rises into each plateau: the initial ramp for the first step, the jumps for the others
    rises = np.concatenate(([values[0] - alpha - delta], jumps))
    following = np.append(jumps, np.inf)
    tilts = np.minimum(epsilon, 0.25 * np.minimum(rises, following))

    first_corner = breaks[1] - 0.5 * ramp_widths[0] if ramp_widths.size else breaks[-1]
    if delta + epsilon >= first_corner:
        raise ValueError(
            f"Overlapping corners: initial rise ends at {delta + epsilon}, first corner starts at {first_corner}"
        )

    nodes_t = [0.0, delta, delta + epsilon]
    nodes_phi = [alpha, alpha + delta, values[0] - tilts[0]]
    for i in range(1, values.size):
        nodes_t += [breaks[i] - 0.5 * ramp_widths[i - 1], breaks[i] + 0.5 * ramp_widths[i - 1]]
        nodes_phi += [values[i - 1] + tilts[i - 1], values[i] - tilts[i]]
    nodes_t.append(breaks[-1])
    nodes_phi.append(values[-1] + tilts[-1])
    return PwlPhi(np.array(nodes_t), np.array(nodes_phi))

def phi_l1_distance(pwl: PwlPhi, step: StepPhi) -> float:
    """
    Returns the exact L¹ distance between a piecewise-linear and a step angle over their common domain.
    """
    end = min(pwl.nodes_t[-1], step.breaks[-1])
    edges = np.union1d(pwl.nodes_t, step.breaks)
    edges = edges[(edges >= 0) & (edges <= end)]
    a, b = edges[:-1], edges[1:]
    level = step(0.5 * (a + b))
    fa, fb = pwl(a) - level, pwl(b) - level
    same_sign = fa * fb >= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        crossing = np.where(same_sign, 0.0, 0.5 * (b - a) * (fa**2 + fb**2) / (np.abs(fa) + np.abs(fb)))
    trapezoid = 0.5 * (b - a) * np.abs(fa + fb)
    return float(np.sum(np.where(same_sign, trapezoid, crossing)))

# ----------------------------
# Mollification
# ----------------------------

class MollifiedPhi:
    """
    Exact evaluator of (pwl * K)^(order) where K is the centered degree-4 B-spline of support [-h, h].
    The pwl is written as a + s0·t + Σ Δs_i ReLU(t - c_i), so only the ReLU terms need smoothing.
    """

    def __init__(self, pwl: PwlPhi, h: float) -> None:
        slopes = pwl.slopes
        self.h = h
        self.s0 = slopes[0]
        self.a = pwl.nodes_phi[0] - self.s0 * pwl.nodes_t[0]
        self.corners = pwl.nodes_t[1:-1]
        self.jumps = np.diff(slopes)
        # Prefix sums of Δs_i and Δs_i c_i for corners fully to the left of an evaluation point
        self.jump_sums = np.concatenate(([0.0], np.cumsum(self.jumps)))
        self.moment_sums = np.concatenate(([0.0], np.cumsum(self.jumps * self.corners)))

        basis = BSpline.basis_element(np.linspace(-h, h, 6))
        scale = 5 / (2 * h)
        self.kernel = [basis, basis.derivative(1)]
        antiderivative_1 = basis.antiderivative(1)
        antiderivative_2 = basis.antiderivative(2)
        self.g1_offset = float(antiderivative_1(-h))
        self.g2_offset = float(antiderivative_2(-h))
        self.antiderivatives = [antiderivative_1, antiderivative_2]
        self.scale = scale

    def _smoothed_relu(self, x: NDArray, order: int) -> NDArray:
        """
        Returns the `order`-th derivative of (ReLU * K)(x).
        """
        h = self.h
        clipped = np.clip(x, -h, h)
        if order == 0:
            g2 = self.antiderivatives[1](clipped) - self.g2_offset - self.g1_offset * (clipped + h)
            return self.scale * g2 + np.clip(x - h, 0, None)
        if order == 1:
            return self.scale * (self.antiderivatives[0](clipped) - self.g1_offset)
        inside = np.abs(x) < h
        return np.where(inside, self.scale * self.kernel[order - 2](clipped), 0.0)

    def __call__(self, t: ArrayLike, order: int = 0) -> NDArray[np.float64]:
        t = np.asarray(t, dtype=np.float64)
        shape = t.shape
        t = t.ravel()
        h = self.h
        left = np.searchsorted(self.corners, t - h, side="right")
        right = np.searchsorted(self.corners, t + h, side="left")
        if order == 0:
            result = self.a + self.s0 * t + t * self.jump_sums[left] - self.moment_sums[left]
        elif order == 1:
            result = self.s0 + self.jump_sums[left]
        else:
            result = np.zeros_like(t)
        window = int(np.max(right - left)) if t.size else 0
        for offset in range(window):
            index = left + offset
            active = index < right
            if not np.any(active):
                continue
            i = index[active]
            result[active] += self.jumps[i] * self._smoothed_relu(t[active] - self.corners[i], order)
        return result.reshape(shape)

def mollify(pwl: PwlPhi, h: float) -> SmoothPhi:
    """
    Returns the convolution of the pwl angle (extended linearly beyond both ends) with a degree-4 B-spline kernel
    of support [-h, h], sampled on the pwl nodes plus a knot-aligned grid around every corner.
    """
    first_piece = pwl.nodes_t[1] - pwl.nodes_t[0]
    if not 0 < h < 0.5 * first_piece:
        raise ValueError(f"Kernel width h={h} must be positive and below half the initial piece ({0.5 * first_piece})")
    evaluator = MollifiedPhi(pwl, h)
    offsets = np.linspace(-h, h, 2 * MOLLIFIER_SAMPLES_PER_HALF_WIDTH + 1)
    samples = (evaluator.corners[:, None] + offsets[None, :]).ravel()
    start, end = pwl.nodes_t[0], pwl.nodes_t[-1]
    grid = np.union1d(pwl.nodes_t, samples[(samples > start) & (samples < end)])
    derivatives = np.stack([evaluator(grid, order) for order in range(4)], axis=1)
    return SmoothPhi(grid, derivatives, evaluator)
