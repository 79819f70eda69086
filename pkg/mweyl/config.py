"""
Module containing constants that define default behaviour.
"""

# Default evaluation grid K = {x + iy}, used for every grid m-error
DEFAULT_GRID_REAL: tuple[float, ...] = (-2.0, -1.0, 0.0, 1.0, 2.0)
DEFAULT_GRID_IMAG: tuple[float, ...] = (0.5, 1.0, 2.0)

# Matrix checks (symmetry, psd, trace, Möbius nonsingularity) are relative to this
MATRIX_TOLERANCE: float = 1e-12

# Gauss-Legendre nodes per smooth piece for all Hamiltonian integrals
QUADRATURE_NODES: int = 8

# Transfer matrices through φ patches are refined until successive results agree to this
TRANSFER_MATRIX_TOLERANCE: float = 1e-10
MAGNUS_MAX_HALVINGS: int = 14

# Weyl disk ladder: L doubles from the initial length until the diameter is below tolerance
WEYL_DISK_INITIAL_LENGTH: float = 1.0
WEYL_DISK_MAX_LENGTH: float = 1e6
WEYL_DISK_BOUNDARY_SAMPLES: int = 64
DEFAULT_M_TOLERANCE: float = 1e-6
REFERENCE_M_TOLERANCE: float = 1e-8

# Schrödinger integration (local error control of the adaptive Runge-Kutta scheme)
ODE_RELATIVE_TOLERANCE: float = 1e-10
ODE_ABSOLUTE_TOLERANCE: float = 1e-12
# Backward integrations are renormalized after every chunk of this length
ODE_CHUNK_LENGTH: float = 2.0
SCHRODINGER_INITIAL_CUTOFF: float = 1.0
SCHRODINGER_MAX_CUTOFF: float = 1024.0

# Schrödinger → canonical sampling step in x and the tighter tolerance used there
TRANSFORM_GRID_STEP: float = 0.005
TRANSFORM_RELATIVE_TOLERANCE: float = 1e-12
TRANSFORM_ABSOLUTE_TOLERANCE: float = 1e-14
# Relative agreement required between the two potential formulas
POTENTIAL_CROSS_CHECK_TOLERANCE: float = 1e-6
# Relative tolerance on the Wronskian u_0 v_0' - u_0' v_0 = 1 of the connection matrix
WRONSKIAN_TOLERANCE: float = 1e-7
# Half-line cutoff in x used when a limit-point potential is transformed
TRANSFORM_DEFAULT_CUTOFF: float = 40.0

# Weak-* metric truncation (remainder bound 2^-32)
WEAKSTAR_TERMS: int = 32

# Mollifier sampling: points per kernel half-width around every corner
MOLLIFIER_SAMPLES_PER_HALF_WIDTH: int = 10
# Mollified angles are sampled this many times more finely when their potential is built
POTENTIAL_REFINEMENT: int = 8

# Diagonal schedule policy, as fractions of the dyadic cell width 2^-n: corner width ε, kernel half-width h
# and slope-1 width δ. The first sub-step of a cell is at least half the cell, so δ + 3ε/2 < 2^-n/2
DEFAULT_LEVELS: tuple[int, ...] = (2, 3, 4, 5)
CORNER_WIDTH_FRACTION: float = 1 / 8
KERNEL_WIDTH_FRACTION: float = 1 / 16
INITIAL_WIDTH_FRACTION: float = 1 / 4
# Steps shorter than this fraction of ε are merged into their left neighbour before the corners are rounded
SHORT_STEP_FRACTION: float = 0.5
DEFAULT_ALPHA: float = 0.0

# Windows [0, X) for targets without a singular tail: X doubles from WINDOW_MIN until the target's Weyl disks
# on the grid are below WINDOW_DISK_FACTOR · 2^-n, and never exceeds WINDOW_MAX
WINDOW_MIN: float = 2.0
WINDOW_MAX: float = 64.0
WINDOW_DISK_FACTOR: float = 0.25
HARNESS_WINDOW: float = 2.0
HARNESS_LEVELS: tuple[int, ...] = (2, 3, 4, 5, 6)

# Free spectral measure sampling
FREE_MEASURE_T_MIN: float = 1e-8
FREE_MEASURE_T_MAX: float = 1e5
FREE_MEASURE_GRID_POINTS: int = 4001

# Output formatting and parallelism
OUTPUT_SIGNIFICANT_DIGITS: int = 17
THREADS_ENV_VAR: str = "MWEYL_THREADS"
