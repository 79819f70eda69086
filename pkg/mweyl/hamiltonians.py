"""
Module containing the `Hamiltonian` class, which represents a half-line trace-normed Hamiltonian as ordered segments
(constant matrices or P_φ patches) followed by a tail, together with the angle-function types and the
quadrature-based operations on Hamiltonians (dyadic averages, cumulative integrals, weak-* distance).
"""

from __future__ import annotations
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import cached_property
import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import BPoly

from .config import MATRIX_TOLERANCE, QUADRATURE_NODES, WEAKSTAR_TERMS

# Standard symplectic matrix of Ju' = zHu
J = np.array([[0.0, -1.0], [1.0, 0.0]])

# ----------------------------
# 2×2 matrices
# ----------------------------

def p_matrix(theta: float) -> NDArray[np.float64]:
    """
    Returns the rank-one projection P_θ = e_θ e_θᵀ with e_θ = (cos θ, sin θ).
    """
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c * c, c * s], [c * s, s * s]])

def p_matrices(thetas: ArrayLike) -> NDArray[np.float64]:
    """
    Vectorized `p_matrix`, returns an array of shape [N][2][2].
    """
    thetas = np.asarray(thetas, dtype=np.float64)
    c, s = np.cos(thetas), np.sin(thetas)
    return np.stack([np.stack([c * c, c * s], axis=-1), np.stack([c * s, s * s], axis=-1)], axis=-2)

def mat2_violation(M: ArrayLike, trace_normed: bool = True) -> float:
    """
    Returns the largest violation of symmetry, positive semidefiniteness and (optionally) unit trace.
    Accepts a single matrix or a stack of shape [N][2][2].
    """
    M = np.asarray(M, dtype=np.float64)
    asymmetry = np.abs(M[..., 0, 1] - M[..., 1, 0])
    eigenvalues = np.linalg.eigvalsh(0.5 * (M + np.swapaxes(M, -1, -2)))
    negativity = np.clip(-eigenvalues.min(axis=-1), 0, None)
    violation = np.maximum(asymmetry, negativity)
    if trace_normed:
        violation = np.maximum(violation, np.abs(M[..., 0, 0] + M[..., 1, 1] - 1))
    return float(np.max(violation))

def validate_mat2(M: ArrayLike, trace_normed: bool = True) -> NDArray[np.float64]:
    M = np.asarray(M, dtype=np.float64)
    if M.shape[-2:] != (2, 2):
        raise ValueError(f"Expected 2×2 matrices, got shape {M.shape}")
    violation = mat2_violation(M, trace_normed)
    if violation > MATRIX_TOLERANCE:
        raise ValueError(f"Matrix is not a trace-normed positive semidefinite symmetric matrix (violation {violation:.3e})")
    return M

def eigen_decompose(M: ArrayLike) -> tuple[float, float]:
    """
    Writes M = λ P_φ + (1-λ) P_{φ+π/2} with λ ∈ [1/2, 1] the larger eigenvalue and φ ∈ [0, π).
    When both eigenvalues coincide any φ works and φ = 0 is returned.
    """
    M = validate_mat2(M)
    eigenvalues, eigenvectors = np.linalg.eigh(M)
    lam = float(np.clip(eigenvalues[1], 0.5, 1.0))
    if eigenvalues[1] - eigenvalues[0] <= 2 * MATRIX_TOLERANCE:
        return 0.5, 0.0
    v = eigenvectors[:, 1]
    phi = float(np.mod(np.arctan2(v[1], v[0]), np.pi))
    if phi >= np.pi:
        phi = 0.0
    return lam, phi

# ----------------------------
# Angle functions
# ----------------------------

@dataclass(frozen=True, eq=False)
class StepPhi:
    """
    Right-continuous step function: `values[i]` on [breaks[i], breaks[i+1]).
    """
    breaks: NDArray[np.float64]
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        breaks = np.asarray(self.breaks, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if breaks.ndim != 1 or values.ndim != 1 or breaks.size != values.size + 1 or values.size == 0:
            raise ValueError("Step function needs N+1 breaks for N values")
        if np.any(np.diff(breaks) <= 0):
            raise ValueError("Step breaks must be strictly increasing")
        if np.any(np.diff(values) < 0):
            raise ValueError("Step values must be nondecreasing")
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "values", values)

    def __call__(self, t: ArrayLike) -> NDArray[np.float64]:
        index = np.clip(np.searchsorted(self.breaks, t, side="right") - 1, 0, self.values.size - 1)
        return self.values[index]

    def shifted(self, offset: float) -> StepPhi:
        return StepPhi(self.breaks, self.values + offset)

@dataclass(frozen=True, eq=False)
class PwlPhi:
    """
    Continuous piecewise-linear angle function through `nodes_t`, `nodes_phi`, both strictly increasing.
    """
    nodes_t: NDArray[np.float64]
    nodes_phi: NDArray[np.float64]

    def __post_init__(self) -> None:
        nodes_t = np.asarray(self.nodes_t, dtype=np.float64)
        nodes_phi = np.asarray(self.nodes_phi, dtype=np.float64)
        if nodes_t.ndim != 1 or nodes_t.shape != nodes_phi.shape or nodes_t.size < 2:
            raise ValueError("Piecewise-linear nodes must be 1D arrays of equal length ≥ 2")
        if np.any(np.diff(nodes_t) <= 0):
            raise ValueError("Piecewise-linear node positions must be strictly increasing")
        if np.any(np.diff(nodes_phi) <= 0):
            raise ValueError("Piecewise-linear angle values must be strictly increasing")
        object.__setattr__(self, "nodes_t", nodes_t)
        object.__setattr__(self, "nodes_phi", nodes_phi)

    @property
    def slopes(self) -> NDArray[np.float64]:
        return np.diff(self.nodes_phi) / np.diff(self.nodes_t)

    def __call__(self, t: ArrayLike) -> NDArray[np.float64]:
        return np.interp(t, self.nodes_t, self.nodes_phi)

class SmoothPhi:
    """
    C³ angle function sampled as (φ, φ', φ'', φ''') on a grid of the Hamiltonian variable t.
    Between samples it is evaluated either by an exact `evaluator(t, order)` or by the septic
    Hermite interpolant matching all four samples at every node.
    """

    def __init__(
        self,
        grid: ArrayLike,
        derivatives: ArrayLike,
        evaluator: Callable[[NDArray, int], NDArray] | None = None
    ) -> None:
        """
        Argument `derivatives` must be of shape [N][4] with columns φ, φ', φ'', φ'''.
        """
        self.grid = np.asarray(grid, dtype=np.float64)
        self.derivatives = np.asarray(derivatives, dtype=np.float64)
        if self.grid.ndim != 1 or self.grid.size < 2 or self.derivatives.shape != (self.grid.size, 4):
            raise ValueError("Smooth angle data must be a grid of N ≥ 2 points with an [N][4] derivative table")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("Smooth angle grid must be strictly increasing")
        if not np.all(np.isfinite(self.derivatives)):
            raise ValueError("Smooth angle derivatives must be finite")
        if np.any(self.derivatives[:, 1] <= 0):
            raise ValueError("Smooth angle must have a positive first derivative on its grid")
        self.evaluator = evaluator

    @property
    def start(self) -> float:
        return float(self.grid[0])

    @property
    def end(self) -> float:
        return float(self.grid[-1])

    @cached_property
    def _hermite(self) -> list[BPoly]:
        poly = BPoly.from_derivatives(self.grid, self.derivatives.tolist())
        return [poly] + [poly.derivative(order) for order in (1, 2, 3)]

    def derivative(self, t: ArrayLike, order: int = 0) -> NDArray[np.float64]:
        t = np.asarray(t, dtype=np.float64)
        if self.evaluator is not None:
            return self.evaluator(t, order)
        return self._hermite[order](t)

    def __call__(self, t: ArrayLike) -> NDArray[np.float64]:
        return self.derivative(t, 0)

    def shifted(self, offset: float) -> SmoothPhi:
        derivatives = self.derivatives.copy()
        derivatives[:, 0] += offset
        evaluator = None
        if self.evaluator is not None:
            base = self.evaluator
            evaluator = lambda t, order: base(t, order) + (offset if order == 0 else 0.0)
        return SmoothPhi(self.grid, derivatives, evaluator)

# ----------------------------
# Hamiltonian model
# ----------------------------

@dataclass(frozen=True, eq=False)
class ConstantSegment:
    lo: float
    hi: float
    matrix: NDArray[np.float64]

    def __post_init__(self) -> None:
        if not self.hi > self.lo:
            raise ValueError(f"Segment [{self.lo}, {self.hi}) is empty")
        object.__setattr__(self, "matrix", validate_mat2(self.matrix))

    def clipped(self, lo: float, hi: float) -> ConstantSegment:
        return ConstantSegment(max(lo, self.lo), min(hi, self.hi), self.matrix)

@dataclass(frozen=True, eq=False)
class PhiSegment:
    """
    P_φ on [lo, hi), with φ evaluated at the absolute position t.
    """
    lo: float
    hi: float
    phi: SmoothPhi

    def __post_init__(self) -> None:
        if not self.hi > self.lo:
            raise ValueError(f"Segment [{self.lo}, {self.hi}) is empty")
        slack = 1e-12 * max(1.0, abs(self.hi))
        if self.lo < self.phi.start - slack or self.hi > self.phi.end + slack:
            raise ValueError(f"Segment [{self.lo}, {self.hi}) exceeds the angle grid [{self.phi.start}, {self.phi.end}]")

    def clipped(self, lo: float, hi: float) -> PhiSegment:
        return PhiSegment(max(lo, self.lo), min(hi, self.hi), self.phi)

Segment = ConstantSegment | PhiSegment

@dataclass(frozen=True)
class SingularTail:
    """
    H = P_θ on [X_max, ∞): a singular interval of type θ.
    """
    theta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", float(np.mod(self.theta, np.pi)))

@dataclass(frozen=True)
class ContinuedTail:
    """
    The last segment continues: a constant segment extends to ∞, a φ patch marks the end of the representation.
    """
    pass

Tail = SingularTail | ContinuedTail

class Hamiltonian:
    """
    Trace-normed Hamiltonian on [0, ∞) given by contiguous segments covering [0, X_max) and a tail.
    """

    def __init__(self, segments: Sequence[Segment], tail: Tail = ContinuedTail()) -> None:
        self.segments: tuple[Segment, ...] = tuple(segments)
        self.tail = tail
        position = 0.0
        for segment in self.segments:
            if abs(segment.lo - position) > 1e-12 * max(1.0, abs(position)):
                raise ValueError(f"Segments must be contiguous from 0; gap or overlap at {position}")
            position = segment.hi
        if not self.segments and not isinstance(tail, SingularTail):
            raise ValueError("A Hamiltonian without segments needs a singular tail")

    def __repr__(self) -> str:
        return f"Hamiltonian({len(self.segments)} segments on [0, {self.end}), tail={self.tail})"

    # Constructors

    @classmethod
    def constant(cls, M: ArrayLike) -> Hamiltonian:
        """
        Returns H ≡ M on [0, ∞). Rank-one M becomes a singular tail from 0.
        """
        M = validate_mat2(M)
        if abs(np.linalg.det(M)) <= MATRIX_TOLERANCE:
            return cls([], SingularTail(eigen_decompose(M)[1]))
        return cls([ConstantSegment(0.0, 1.0, M)], ContinuedTail())

    @classmethod
    def from_step(cls, step: StepPhi, tail: Tail = ContinuedTail()) -> Hamiltonian:
        """
        Returns P_{φ_n} for a step angle starting at 0.
        """
        segments = [
            ConstantSegment(lo, hi, p_matrix(value))
            for lo, hi, value in zip(step.breaks[:-1], step.breaks[1:], step.values)
        ]
        return cls(segments, tail)

    @classmethod
    def from_phi(cls, phi: SmoothPhi, end: float | None = None, tail: Tail = ContinuedTail()) -> Hamiltonian:
        """
        Returns P_φ on [0, end) for a smooth angle whose grid starts at 0.
        """
        end = phi.end if end is None else end
        return cls([PhiSegment(0.0, end, phi)], tail)

    # Domain

    @property
    def end(self) -> float:
        """
        X_max, the start of the tail.
        """
        return self.segments[-1].hi if self.segments else 0.0

    @property
    def domain_end(self) -> float:
        """
        Supremum of the positions where H is known.
        """
        if isinstance(self.tail, ContinuedTail) and isinstance(self.segments[-1], PhiSegment):
            return self.end
        return np.inf

    def tail_matrix(self) -> NDArray[np.float64] | None:
        """
        Returns the constant matrix on [X_max, ∞), or None when the representation ends there.
        """
        if isinstance(self.tail, SingularTail):
            return p_matrix(self.tail.theta)
        if isinstance(self.segments[-1], ConstantSegment):
            return self.segments[-1].matrix
        return None

    def _check_range(self, lo: float, hi: float) -> None:
        if lo < 0 or hi < lo:
            raise ValueError(f"Interval [{lo}, {hi}] is not a valid subinterval of [0, ∞)")
        if hi > self.domain_end * (1 + 1e-12):
            raise ValueError(f"Interval [{lo}, {hi}] exceeds the represented domain [0, {self.domain_end})")

    # Evaluation

    def evaluate(self, x: ArrayLike) -> NDArray[np.float64]:
        """
        Returns H at the given positions as an array of shape [N][2][2].
        """
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        if x.size:
            self._check_range(float(x.min()), float(x.max()))
        result = np.empty((x.size, 2, 2))
        assigned = np.zeros(x.size, dtype=bool)
        for segment in self.segments:
            mask = (x >= segment.lo) & (x < segment.hi) & ~assigned
            if not np.any(mask):
                continue
            if isinstance(segment, ConstantSegment):
                result[mask] = segment.matrix
            else:
                result[mask] = p_matrices(segment.phi(x[mask]))
            assigned |= mask
        if not np.all(assigned):
            tail_matrix = self.tail_matrix()
            if tail_matrix is not None:
                result[~assigned] = tail_matrix
            else:
                # Only x == X_max can reach here for a φ patch that ends the representation
                last = self.segments[-1]
                result[~assigned] = p_matrices(last.phi(x[~assigned]))
        return result

    def breakpoints(self, lo: float, hi: float) -> NDArray[np.float64]:
        """
        Returns the sorted positions in [lo, hi] (including both) between which H is smooth.
        """
        points = [np.array([lo, hi])]
        for segment in self.segments:
            if segment.hi <= lo or segment.lo >= hi:
                continue
            points.append(np.array([segment.lo, segment.hi]))
            if isinstance(segment, PhiSegment):
                points.append(segment.phi.grid)
        points.append(np.array([self.end]))
        merged = np.unique(np.concatenate(points))
        return merged[(merged >= lo) & (merged <= hi)]

    def pieces(self, lo: float, hi: float) -> list[tuple[float, float, Segment]]:
        """
        Splits [lo, hi] into maximal pieces lying in a single segment or the tail.
        The tail is returned as a constant segment.
        """
        self._check_range(lo, hi)
        pieces = []
        for segment in self.segments:
            a, b = max(lo, segment.lo), min(hi, segment.hi)
            if b > a:
                pieces.append((a, b, segment))
        if hi > self.end:
            a = max(lo, self.end)
            tail_matrix = self.tail_matrix()
            if tail_matrix is None:
                raise ValueError(f"Interval [{lo}, {hi}] exceeds the represented domain [0, {self.end})")
            pieces.append((a, hi, ConstantSegment(a, hi, tail_matrix)))
        return pieces

    # Transformations

    def quarter_turn(self) -> Hamiltonian:
        """
        Returns J H Jᵀ, i.e. φ ↦ φ + π/2, whose m function is -1/m_H.
        """
        segments: list[Segment] = []
        for segment in self.segments:
            if isinstance(segment, ConstantSegment):
                segments.append(ConstantSegment(segment.lo, segment.hi, J @ segment.matrix @ J.T))
            else:
                segments.append(PhiSegment(segment.lo, segment.hi, segment.phi.shifted(np.pi / 2)))
        tail = SingularTail(self.tail.theta + np.pi / 2) if isinstance(self.tail, SingularTail) else self.tail
        return Hamiltonian(segments, tail)

    def spliced(self, prefix: Hamiltonian, X: float) -> Hamiltonian:
        """
        Returns `prefix` on [0, X) followed by this Hamiltonian on [X, ∞).
        """
        if prefix.domain_end < X:
            raise ValueError(f"Prefix is only known on [0, {prefix.domain_end}), cannot splice at {X}")
        segments: list[Segment] = [piece for _, _, piece in prefix._clipped_pieces(0.0, X)]
        if X < self.end:
            segments += [piece for _, _, piece in self._clipped_pieces(X, self.end)]
            return Hamiltonian(segments, self.tail)
        tail_matrix = self.tail_matrix()
        if tail_matrix is None:
            raise ValueError(f"Cannot splice at {X}: the Hamiltonian is only known on [0, {self.end})")
        if isinstance(self.tail, ContinuedTail):
            segments.append(ConstantSegment(X, X + 1.0, tail_matrix))
        return Hamiltonian(segments, self.tail)

    def _clipped_pieces(self, lo: float, hi: float) -> list[tuple[float, float, Segment]]:
        return [(a, b, segment.clipped(a, b)) for a, b, segment in self.pieces(lo, hi)]

# ----------------------------
# Quadrature
# ----------------------------

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(QUADRATURE_NODES)

def gauss_rule(edges: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Returns Gauss-Legendre nodes and weights of shape [pieces][QUADRATURE_NODES] for consecutive edges.
    """
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * _GAUSS_NODES[None, :]
    weights = 0.5 * (b - a) * _GAUSS_WEIGHTS[None, :]
    return nodes, weights

def piece_integrals(
    H: Hamiltonian,
    edges: NDArray[np.float64],
    weight: Callable[[NDArray], NDArray] | None = None
) -> NDArray[np.float64]:
    """
    Returns ∫ w(x) H(x) dx over each [edges[i], edges[i+1]] as an array of shape [pieces][2][2].
    The edges must include the breakpoints of H and of the weight.
    """
    nodes, weights = gauss_rule(edges)
    values = H.evaluate(nodes.ravel()).reshape(nodes.shape + (2, 2))
    if weight is not None:
        weights = weights * weight(nodes)
    return np.einsum("pk,pkij->pij", weights, values)

def integrate_hamiltonian(
    H: Hamiltonian,
    lo: float,
    hi: float,
    weight: Callable[[NDArray], NDArray] | None = None,
    extra_breaks: ArrayLike = ()
) -> NDArray[np.float64]:
    if hi <= lo:
        return np.zeros((2, 2))
    edges = np.union1d(H.breakpoints(lo, hi), np.asarray(extra_breaks, dtype=np.float64))
    edges = edges[(edges >= lo) & (edges <= hi)]
    return piece_integrals(H, edges, weight).sum(axis=0)

def cumulative_integral(H: Hamiltonian, x: float) -> NDArray[np.float64]:
    """
    Returns ∫_0^x H(t) dt entrywise.
    """
    if x < 0:
        raise ValueError(f"Cumulative integrals need x ≥ 0, got {x}")
    return integrate_hamiltonian(H, 0.0, x)

def cumulative_integrals(H: Hamiltonian, xs: ArrayLike) -> NDArray[np.float64]:
    """
    Vectorized `cumulative_integral` for increasing positions, returns shape [N][2][2].
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.size == 0:
        return np.zeros((0, 2, 2))
    if xs[0] < 0 or np.any(np.diff(xs) < 0):
        raise ValueError("Positions must be nonnegative and nondecreasing")
    edges = np.union1d(H.breakpoints(0.0, float(xs[-1])), np.concatenate(([0.0], xs)))
    running = np.concatenate((np.zeros((1, 2, 2)), np.cumsum(piece_integrals(H, edges), axis=0)))
    return running[np.searchsorted(edges, xs)]

def dyadic_cells(n: int, X: float) -> NDArray[np.float64]:
    """
    Returns the edges of the cells [j/2^n, (j+1)/2^n) ∩ [0, X); the last cell may be partial.
    """
    if n < 0 or X <= 0:
        raise ValueError(f"Dyadic cells need n ≥ 0 and X > 0, got n={n}, X={X}")
    width = 2.0**-n
    edges = np.arange(0.0, X, width)
    return np.append(edges, X)

def dyadic_average(H: Hamiltonian, n: int, j: int) -> NDArray[np.float64]:
    """
    Returns 2^n ∫ H over I_{j,n} = [j/2^n, (j+1)/2^n).
    """
    if j < 0:
        raise ValueError(f"Dyadic index must be nonnegative, got {j}")
    lo, hi = j * 2.0**-n, (j + 1) * 2.0**-n
    H._check_range(lo, hi)
    return integrate_hamiltonian(H, lo, hi) / (hi - lo)

def dyadic_averages(H: Hamiltonian, n: int, X: float) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Returns the cell edges on [0, X) and the average of H over every cell (partial cells included).
    """
    edges = dyadic_cells(n, X)
    H._check_range(0.0, X)
    ends = cumulative_integrals(H, edges)
    averages = np.diff(ends, axis=0) / np.diff(edges)[:, None, None]
    return edges, averages

# ----------------------------
# Weak-* metric
# ----------------------------

# Hat test functions: centers at (j+1)/3 with half-width 1/3, times three directions, position-major
_WEAKSTAR_HALF_WIDTH = 1 / 3
_WEAKSTAR_DIRECTIONS = ("e1", "e2", "diagonal")

def weakstar_test_family(terms: int = WEAKSTAR_TERMS) -> list[tuple[float, str]]:
    """
    Returns (center, direction) for the first `terms` test functions f_k = hat_center · e_direction.
    """
    family = []
    j = 0
    while len(family) < terms:
        for direction in _WEAKSTAR_DIRECTIONS:
            family.append(((j + 1) * _WEAKSTAR_HALF_WIDTH, direction))
        j += 1
    return family[:terms]

def weakstar_reach(terms: int = WEAKSTAR_TERMS) -> float:
    """
    Returns the right end of the support of the first `terms` test functions. The truncated metric does not see
    differences beyond it: 32 terms reach t = 4, so longer windows are compared on [0, 4) only.
    """
    return max(center for center, _ in weakstar_test_family(terms)) + _WEAKSTAR_HALF_WIDTH

def _hat_squared(center: float) -> Callable[[NDArray], NDArray]:
    return lambda x: np.clip(1 - np.abs(x - center) / _WEAKSTAR_HALF_WIDTH, 0, None)**2

def weakstar_terms(H1: Hamiltonian, H2: Hamiltonian, terms: int = WEAKSTAR_TERMS) -> NDArray[np.float64]:
    """
    Returns d_k = |∫ f_k*(H1 - H2) f_k| for the fixed test family.
    """
    d = np.empty(terms)
    moments: dict[float, NDArray] = {}
    for k, (center, direction) in enumerate(weakstar_test_family(terms)):
        if center not in moments:
            lo, hi = max(0.0, center - _WEAKSTAR_HALF_WIDTH), center + _WEAKSTAR_HALF_WIDTH
            breaks = np.union1d(H1.breakpoints(lo, hi), H2.breakpoints(lo, hi))
            weight = _hat_squared(center)
            moments[center] = (
                integrate_hamiltonian(H1, lo, hi, weight, np.append(breaks, center))
                - integrate_hamiltonian(H2, lo, hi, weight, np.append(breaks, center))
            )
        D = moments[center]
        if direction == "e1":
            d[k] = abs(D[0, 0])
        elif direction == "e2":
            d[k] = abs(D[1, 1])
        else:
            d[k] = abs(0.5 * (D[0, 0] + D[1, 1]) + D[0, 1])
    return d

def weakstar_dist(H1: Hamiltonian, H2: Hamiltonian, terms: int = WEAKSTAR_TERMS) -> float:
    """
    Returns Σ_k 2^-k d_k / (1 + d_k) over the first `terms` test functions (remainder below 2^-terms).
    Only [0, weakstar_reach(terms)) enters the truncated sum.
    """
    d = weakstar_terms(H1, H2, terms)
    return float(np.sum(2.0**-np.arange(1, terms + 1) * d / (1 + d)))
