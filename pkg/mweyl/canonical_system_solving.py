"""
Module containing the solvers for canonical systems Ju' = zHu: transfer matrices, Weyl disks, the m function m_H
and H-norms of solutions.
"""

from __future__ import annotations
from dataclasses import dataclass
import numpy as np
from numpy.typing import ArrayLike, NDArray

from .config import (
    TRANSFER_MATRIX_TOLERANCE, MAGNUS_MAX_HALVINGS, WEYL_DISK_INITIAL_LENGTH, WEYL_DISK_MAX_LENGTH,
    WEYL_DISK_BOUNDARY_SAMPLES, DEFAULT_M_TOLERANCE, MATRIX_TOLERANCE
)
from .sphere_points import SpherePoint, Mobius2, chordal_dist
from .hamiltonians import (
    Hamiltonian, ConstantSegment, PhiSegment, SingularTail, SmoothPhi, J, gauss_rule
)

class NonconvergenceError(Exception):
    pass

_P0 = np.array([[1.0, 0.0], [0.0, 0.0]])
_MAGNUS_NODES = 0.5 + np.array([-1.0, 1.0]) * np.sqrt(3) / 6

# ----------------------------
# Matrix exponentials and products
# ----------------------------

def exp_traceless(omega: NDArray) -> NDArray[np.complex128]:
    """
    Returns exp(Ω) for a stack of traceless 2×2 matrices using Ω² = -det(Ω) I:
    exp(Ω) = cos(w) I + sin(w)/w Ω with w² = det Ω.
    """
    omega = np.asarray(omega, dtype=np.complex128)
    det = omega[..., 0, 0] * omega[..., 1, 1] - omega[..., 0, 1] * omega[..., 1, 0]
    w = np.sqrt(det)
    cos_term = np.cos(w)[..., None, None] * np.eye(2)
    return cos_term + np.sinc(w / np.pi)[..., None, None] * omega

def ordered_product(matrices: NDArray) -> NDArray[np.complex128]:
    """
    Returns M_{K-1} ⋯ M_1 M_0 along the second-to-last stacking axis by pairwise reduction.
    Accepts shape [..., K, 2, 2] and returns [..., 2, 2].
    """
    matrices = np.asarray(matrices, dtype=np.complex128)
    while matrices.shape[-3] > 1:
        if matrices.shape[-3] % 2:
            identity = np.broadcast_to(np.eye(2, dtype=np.complex128), matrices.shape[:-3] + (1, 2, 2))
            matrices = np.concatenate((matrices, identity), axis=-3)
        matrices = matrices[..., 1::2, :, :] @ matrices[..., 0::2, :, :]
    return matrices[..., 0, :, :]

def constant_transfers(M: NDArray, lengths: ArrayLike, z: complex) -> NDArray[np.complex128]:
    """
    Returns exp(-zLJM) for every length L. For rank-one M this equals I - zLJM exactly.
    """
    lengths = np.asarray(lengths, dtype=np.float64)
    return exp_traceless(-z * lengths[:, None, None] * (J @ M)[None, :, :])

def _rotations(angles: NDArray) -> NDArray[np.float64]:
    c, s = np.cos(angles), np.sin(angles)
    return np.stack([np.stack([c, -s], axis=-1), np.stack([s, c], axis=-1)], axis=-2)

def _magnus_substeps(phi: SmoothPhi, starts: NDArray, ends: NDArray, z: complex, k: int) -> NDArray[np.complex128]:
    """
    Returns the transfer matrix over each [start, end] from k fourth-order Magnus steps in the frame rotating with φ.
    With u = R(φ) w the system becomes w' = -J(z P_0 + φ' I) w.
    """
    fractions = np.arange(k + 1) / k
    edges = starts[:, None] + (ends - starts)[:, None] * fractions[None, :]
    a, b = edges[:, :-1], edges[:, 1:]
    width = b - a
    gauss = a[..., None] + width[..., None] * _MAGNUS_NODES
    slopes = phi.derivative(gauss.ravel(), 1).reshape(gauss.shape)
    zJP0 = z * (J @ _P0)
    B = -(zJP0[None, None, None] + slopes[..., None, None] * J[None, None, None])
    B1, B2 = B[..., 0, :, :], B[..., 1, :, :]
    commutator = B2 @ B1 - B1 @ B2
    omega = 0.5 * width[..., None, None] * (B1 + B2) + (np.sqrt(3) / 12) * width[..., None, None]**2 * commutator
    frame = exp_traceless(omega)
    angles = phi.derivative(edges.ravel(), 0).reshape(edges.shape)
    rotations = _rotations(angles)
    steps = rotations[:, 1:] @ frame @ np.swapaxes(rotations[:, :-1], -1, -2)
    return ordered_product(steps)

def phi_transfers(
    phi: SmoothPhi,
    starts: ArrayLike,
    ends: ArrayLike,
    z: complex,
    tolerance: float = TRANSFER_MATRIX_TOLERANCE
) -> NDArray[np.complex128]:
    """
    Returns the transfer matrix of P_φ over each [start, end], halving the Magnus step per interval
    until successive results agree within `tolerance` relative to the matrix size.
    """
    starts = np.asarray(starts, dtype=np.float64)
    ends = np.asarray(ends, dtype=np.float64)
    result = np.empty((starts.size, 2, 2), dtype=np.complex128)
    if starts.size == 0:
        return result
    pending = np.arange(starts.size)
    k = 1
    previous = _magnus_substeps(phi, starts, ends, z, k)
    for _ in range(MAGNUS_MAX_HALVINGS):
        k *= 2
        current = _magnus_substeps(phi, starts[pending], ends[pending], z, k)
        scale = np.maximum(1.0, np.abs(current).max(axis=(-1, -2)))
        change = np.abs(current - previous).max(axis=(-1, -2)) / scale
        converged = change < tolerance
        result[pending[converged]] = current[converged]
        pending = pending[~converged]
        previous = current[~converged]
        if pending.size == 0:
            return result
    raise NonconvergenceError(
        f"Magnus steps did not converge on {pending.size} intervals after {MAGNUS_MAX_HALVINGS} halvings"
    )

def piece_transfers(H: Hamiltonian, starts: ArrayLike, ends: ArrayLike, z: complex) -> NDArray[np.complex128]:
    """
    Returns transfer matrices over intervals that each lie inside a single segment (or the tail).
    """
    starts = np.asarray(starts, dtype=np.float64)
    ends = np.asarray(ends, dtype=np.float64)
    result = np.empty((starts.size, 2, 2), dtype=np.complex128)
    if starts.size == 0:
        return result
    if np.any(ends < starts):
        raise ValueError("Transfer intervals must have start ≤ end")
    middles = 0.5 * (starts + ends)
    assigned = np.zeros(starts.size, dtype=bool)
    for segment in H.segments:
        mask = (middles >= segment.lo) & (middles < segment.hi) & ~assigned
        if middles.size and segment is H.segments[-1]:
            mask |= (middles == segment.hi) & ~assigned & (H.tail_matrix() is None)
        if not np.any(mask):
            continue
        if isinstance(segment, ConstantSegment):
            result[mask] = constant_transfers(segment.matrix, ends[mask] - starts[mask], z)
        else:
            result[mask] = phi_transfers(segment.phi, starts[mask], ends[mask], z)
        assigned |= mask
    if not np.all(assigned):
        tail_matrix = H.tail_matrix()
        if tail_matrix is None:
            raise ValueError(f"Intervals reach beyond the represented domain [0, {H.end})")
        rest = ~assigned
        result[rest] = constant_transfers(tail_matrix, ends[rest] - starts[rest], z)
    return result

def transfer_matrix(H: Hamiltonian, x0: float, x1: float, z: complex) -> Mobius2:
    """
    Returns T(x0, x1) mapping u(x0) to u(x1) for Ju' = zHu.
    """
    if not 0 <= x0 <= x1:
        raise ValueError(f"Transfer interval [{x0}, {x1}] must satisfy 0 ≤ x0 ≤ x1")
    if x0 == x1 or z == 0:
        H.pieces(x0, x1)
        return Mobius2.identity()
    edges = H.breakpoints(x0, x1)
    transfers = piece_transfers(H, edges[:-1], edges[1:], z)
    T = ordered_product(transfers)
    check_determinant(T)
    return Mobius2(T, validate=False)

def check_determinant(T: NDArray, tolerance: float = TRANSFER_MATRIX_TOLERANCE) -> None:
    det = T[0, 0] * T[1, 1] - T[0, 1] * T[1, 0]
    scale = max(1.0, float(np.abs(T).max()))**2
    if not np.isfinite(det) or abs(det - 1) > tolerance * scale:
        raise ValueError(f"Degenerate transfer matrix (det = {det})")

# ----------------------------
# Weyl disks and m functions
# ----------------------------

@dataclass
class WeylDisk:
    """
    Disk of m values compatible with truncation at length L. Its boundary is the image of the
    extended real line τ = tan γ under `boundary_map`.
    """
    L: float
    boundary_map: Mobius2
    representative: SpherePoint
    chordal_diameter: float

@dataclass
class MFunctionValue:
    point: SpherePoint
    diameter: float
    length: float

def _boundary_samples(boundary_map: Mobius2, samples: int) -> NDArray[np.complex128]:
    gammas = np.arange(samples) * np.pi / samples
    tau = np.stack([np.sin(gammas), np.cos(gammas)]).astype(np.complex128)
    points = boundary_map.matrix @ tau
    return points / np.linalg.norm(points, axis=0)

def _pairwise_chordal(points: NDArray) -> NDArray[np.float64]:
    p, q = points
    return 2 * np.abs(p[:, None] * q[None, :] - p[None, :] * q[:, None])

def weyl_disk(
    H: Hamiltonian,
    L: float,
    z: complex,
    previous: SpherePoint | None = None,
    T: Mobius2 | None = None
) -> WeylDisk:
    """
    Returns the Weyl disk at truncation length L: m(γ) = (a sin γ - c cos γ)/(d cos γ - b sin γ) for T(0, L) = [[a, b], [c, d]].
    The representative is the boundary sample nearest `previous` (γ = 0 without one).
    """
    if L <= 0 or z.imag <= 0:
        raise ValueError(f"Weyl disks need L > 0 and Im z > 0, got L={L}, z={z}")
    if T is None:
        T = transfer_matrix(H, 0.0, L, z)
    boundary_map = Mobius2(np.array([[T.a, -T.c], [-T.b, T.d]]), validate=False)
    points = _boundary_samples(boundary_map, WEYL_DISK_BOUNDARY_SAMPLES)
    diameter = float(_pairwise_chordal(points).max())
    index = 0
    if previous is not None:
        p, q = previous.normalized()
        index = int(np.argmin(np.abs(points[0] * q - points[1] * p)))
    representative = SpherePoint(points[0, index], points[1, index])
    return WeylDisk(L, boundary_map, representative, diameter)

def endpoint_vector(H: Hamiltonian, z: complex) -> NDArray[np.complex128] | None:
    """
    Returns the direction of the H-integrable solution at X_max when the tail fixes it exactly:
    (-sin θ, cos θ) on a singular tail, or the decaying eigenvector of -zJM on a continued constant segment.
    """
    if isinstance(H.tail, SingularTail):
        theta = H.tail.theta
        return np.array([-np.sin(theta), np.cos(theta)], dtype=np.complex128)
    last = H.segments[-1]
    if isinstance(last, PhiSegment):
        return None
    if np.linalg.det(last.matrix) <= MATRIX_TOLERANCE:
        theta = float(np.arctan2(last.matrix[0, 1], last.matrix[0, 0])) if last.matrix[0, 0] > 0 else np.pi / 2
        return np.array([-np.sin(theta), np.cos(theta)], dtype=np.complex128)
    eigenvalues, eigenvectors = np.linalg.eig(-z * (J @ last.matrix))
    return eigenvectors[:, int(np.argmin(eigenvalues.real))]

def _decay_rate(H: Hamiltonian, z: complex) -> float | None:
    if isinstance(H.tail, SingularTail) or isinstance(H.segments[-1], PhiSegment):
        return None
    eigenvalues = np.linalg.eigvals(-z * (J @ H.segments[-1].matrix))
    return float(eigenvalues.real.min())

def weyl_m(
    H: Hamiltonian,
    z: complex,
    tol: float = DEFAULT_M_TOLERANCE,
    max_length: float = WEYL_DISK_MAX_LENGTH
) -> MFunctionValue:
    """
    Returns m_H(z) with the chordal diameter of the final disk and the truncation length used.
    Constant tails are solved exactly at X_max; otherwise L doubles until the disk diameter is below `tol`.
    """
    if z.imag <= 0:
        raise ValueError(f"m functions are evaluated in the upper half plane, got z = {z}")
    if tol <= 0:
        raise ValueError(f"Tolerance must be positive, got {tol}")
    endpoint = endpoint_vector(H, z)
    if endpoint is not None:
        T = transfer_matrix(H, 0.0, H.end, z)
        f0 = T.adjugate().matrix @ endpoint
        return MFunctionValue(SpherePoint(f0[1], f0[0]), 0.0, H.end)

    cap = min(max_length, H.domain_end)
    L = min(WEYL_DISK_INITIAL_LENGTH, cap)
    T = transfer_matrix(H, 0.0, L, z)
    previous = None
    while True:
        disk = weyl_disk(H, L, z, previous, T)
        if disk.chordal_diameter < tol:
            return MFunctionValue(disk.representative, disk.chordal_diameter, L)
        if L >= cap:
            raise NonconvergenceError(
                f"Weyl disk at z={z} did not shrink below {tol} by L={L} (last diameter {disk.chordal_diameter:.3e})"
            )
        previous = disk.representative
        L_next = min(2 * L, cap)
        T = transfer_matrix(H, L, L_next, z) @ T
        L = L_next

def m_function(
    H: Hamiltonian,
    z: complex,
    tol: float = DEFAULT_M_TOLERANCE,
    max_length: float = WEYL_DISK_MAX_LENGTH
) -> SpherePoint:
    return weyl_m(H, z, tol, max_length).point

def negative_reciprocal_residual(H: Hamiltonian, z: complex, tol: float = DEFAULT_M_TOLERANCE) -> float:
    """
    Returns the chordal distance between m of the quarter-turned system and -1/m_H.
    """
    m = m_function(H, z, tol)
    turned = m_function(H.quarter_turn(), z, tol)
    return chordal_dist(turned, m.negative_reciprocal())

# ----------------------------
# Solutions and H-norms
# ----------------------------

@dataclass
class Solution:
    """
    Samples of a solution u of Ju' = zHu on an increasing x-grid, shape [N][2].
    """
    grid: NDArray[np.float64]
    values: NDArray[np.complex128]
    z: complex

def _propagate(H: Hamiltonian, edges: NDArray, u0: NDArray, z: complex) -> NDArray[np.complex128]:
    transfers = piece_transfers(H, edges[:-1], edges[1:], z)
    values = np.empty((edges.size, 2), dtype=np.complex128)
    values[0] = u0
    for i, T in enumerate(transfers):
        values[i + 1] = T @ values[i]
    return values

def _refined_edges(H: Hamiltonian, lo: float, hi: float, z: complex, extra: ArrayLike = ()) -> NDArray[np.float64]:
    edges = np.union1d(H.breakpoints(lo, hi), np.asarray(extra, dtype=np.float64))
    edges = edges[(edges >= lo) & (edges <= hi)]
    # Constant pieces are split so that |z| times the piece length stays below 1/2; φ cells are already fine
    phi_ranges = [(s.lo, s.hi) for s in H.segments if isinstance(s, PhiSegment)]
    refined = [edges[:1]]
    for a, b in zip(edges[:-1], edges[1:]):
        middle = 0.5 * (a + b)
        in_phi = any(lo_s <= middle < hi_s for lo_s, hi_s in phi_ranges)
        parts = 1 if in_phi else int(min(1e4, max(1, np.ceil(2 * abs(z) * (b - a)))))
        refined.append(np.linspace(a, b, parts + 1)[1:])
    return np.concatenate(refined)

def _values_at_nodes(
    H: Hamiltonian,
    lo: float,
    hi: float,
    u0: NDArray,
    z: complex,
    extra: ArrayLike = ()
) -> tuple[NDArray, NDArray, NDArray, NDArray, NDArray]:
    """
    Propagates u(lo) = u0 and returns edges, u at the edges, Gauss nodes and weights per piece, and u at the nodes.
    """
    edges = _refined_edges(H, lo, hi, z, extra)
    at_edges = _propagate(H, edges, u0, z)
    nodes, weights = gauss_rule(edges)
    starts = np.repeat(edges[:-1], nodes.shape[1])
    transfers = piece_transfers(H, starts, nodes.ravel(), z)
    at_nodes = np.einsum("nij,nj->ni", transfers, np.repeat(at_edges[:-1], nodes.shape[1], axis=0))
    return edges, at_edges, nodes, weights, at_nodes.reshape(nodes.shape + (2,))

def solve_canonical(H: Hamiltonian, z: complex, u0: ArrayLike, grid: ArrayLike) -> Solution:
    """
    Returns the solution with u(grid[0]) = u0 sampled on the grid.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0) or grid[0] < 0:
        raise ValueError("Solution grid must be nonnegative and strictly increasing")
    u0 = np.asarray(u0, dtype=np.complex128)
    if grid.size == 1:
        return Solution(grid, u0[None, :], z)
    edges = np.union1d(H.breakpoints(grid[0], grid[-1]), grid)
    values = _propagate(H, edges, u0, z)
    return Solution(grid, values[np.searchsorted(edges, grid)], z)

def h_norm(H: Hamiltonian, u: Solution, interval: tuple[float, float] | None = None) -> float:
    """
    Returns ∫ u*Hu over the interval (the whole solution grid by default) by Gauss quadrature,
    propagating u from its sample at the left end.
    """
    lo, hi = (u.grid[0], u.grid[-1]) if interval is None else interval
    index = np.searchsorted(u.grid, lo)
    if index >= u.grid.size or u.grid[index] != lo or hi < lo:
        raise ValueError(f"Interval [{lo}, {hi}] must start at a sample of the solution")
    if hi == lo:
        return 0.0
    _, _, nodes, weights, at_nodes = _values_at_nodes(H, lo, hi, u.values[index], u.z)
    H_nodes = H.evaluate(nodes.ravel()).reshape(nodes.shape + (2, 2))
    integrand = np.einsum("pki,pkij,pkj->pk", at_nodes.conj(), H_nodes, at_nodes).real
    return float(np.sum(weights * integrand))

def integral_equation_residual(H: Hamiltonian, u: Solution, solved_with: Hamiltonian | None = None) -> float:
    """
    Returns max over the solution grid of ‖u(x) - u(0) + z ∫_0^x J H u‖ / (1 + ‖u(x)‖).
    `u` is a solution for `solved_with` (H itself by default); a small value against a different H
    measures how well u also solves the system of H.
    """
    solved_with = H if solved_with is None else solved_with
    lo, hi = float(u.grid[0]), float(u.grid[-1])
    extra = np.union1d(H.breakpoints(lo, hi), u.grid)
    edges, at_edges, nodes, weights, at_nodes = _values_at_nodes(solved_with, lo, hi, u.values[0], u.z, extra)
    H_nodes = H.evaluate(nodes.ravel()).reshape(nodes.shape + (2, 2))
    pieces = np.einsum("pk,ij,pkjl,pkl->pi", weights, J, H_nodes, at_nodes)
    integrals = np.concatenate((np.zeros((1, 2)), np.cumsum(pieces, axis=0)))
    residual = at_edges - at_edges[0] + u.z * integrals
    scale = 1 + np.linalg.norm(at_edges, axis=1)
    at_grid = np.searchsorted(edges, u.grid)
    return float(np.max(np.linalg.norm(residual[at_grid], axis=1) / scale[at_grid]))

def weyl_identity_residual(
    H: Hamiltonian,
    z: complex,
    tol: float = DEFAULT_M_TOLERANCE,
    max_length: float = WEYL_DISK_MAX_LENGTH
) -> float:
    """
    Returns |Im(p q̄)/Im z - ∫_0^∞ f*Hf| / max(1, ∫ f*Hf) for the Weyl solution with f(0) = (q, p) normalized to q = 1
    when m is finite. f is propagated from f(0) by the transfer matrices up to the disk length X, and constant
    continued tails contribute |f(X)|²·v*Mv/(-2 Re λ) in closed form.
    """
    value = weyl_m(H, z, tol, max_length)
    p, q = value.point.normalized()
    if abs(q) > 1e-12:
        p, q = p / q, 1.0
    f0 = np.array([q, p], dtype=np.complex128)
    L = value.length
    norm, fX = 0.0, f0
    if L > 0:
        f = solve_canonical(H, z, f0, np.array([0.0, L]))
        norm, fX = h_norm(H, f), f.values[-1]
    rate = _decay_rate(H, z)
    if rate is not None:
        M = H.segments[-1].matrix
        norm += float(np.real(fX.conj() @ M @ fX)) / (-2 * rate)
    expected = float(np.imag(p * np.conj(q))) / z.imag
    return abs(expected - norm) / max(1.0, abs(norm))
