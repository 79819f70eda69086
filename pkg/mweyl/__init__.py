"""
Weyl-Titchmarsh m functions of Schrödinger operators and canonical systems
"""

from .interfaces import ApproximationTarget, ArtifactFileWriter
from .sphere_points import SpherePoint, Mobius2, chordal_dist, grid_dist
from .herglotz_functions import HerglotzSpec, DensityPart, eval_herglotz, truncate_measure, measure_weak_dist
from .hamiltonians import Hamiltonian, StepPhi, PwlPhi, SmoothPhi, SingularTail, ContinuedTail, weakstar_dist
from .phi_construction import build_step_phi, pwl_approximate, mollify
from .canonical_system_solving import NonconvergenceError, transfer_matrix, weyl_disk, weyl_m, m_function, solve_canonical
from .schrodinger_equation_solving import Potential, BoundaryData, LimitPoint, Regular, m_schrodinger, free_m
from .schrodinger_canonical_transformation import TransformData, schrodinger_to_canonical, canonical_to_schrodinger
from .approximation_targets import (
    HamiltonianTarget, FreeTarget, ConstantAngleTarget, MassAtInfinityTarget, TwoSegmentTarget, resolve_target
)
from .artifact_file_reading import RunConfigFileReader
from .artifact_file_writing import CsvFileWriter, JsonFileWriter
from .herglotz_density_pipeline import HerglotzDensityPipeline, ScheduleEntry, default_schedule
from .invariant_verification import InvariantVerificationSuite

__all__ = [
    'ApproximationTarget',
    'ArtifactFileWriter',
    'SpherePoint',
    'Mobius2',
    'chordal_dist',
    'grid_dist',
    'HerglotzSpec',
    'DensityPart',
    'eval_herglotz',
    'truncate_measure',
    'measure_weak_dist',
    'Hamiltonian',
    'StepPhi',
    'PwlPhi',
    'SmoothPhi',
    'SingularTail',
    'ContinuedTail',
    'weakstar_dist',
    'build_step_phi',
    'pwl_approximate',
    'mollify',
    'NonconvergenceError',
    'transfer_matrix',
    'weyl_disk',
    'weyl_m',
    'm_function',
    'solve_canonical',
    'Potential',
    'BoundaryData',
    'LimitPoint',
    'Regular',
    'm_schrodinger',
    'free_m',
    'TransformData',
    'schrodinger_to_canonical',
    'canonical_to_schrodinger',
    'HamiltonianTarget',
    'FreeTarget',
    'ConstantAngleTarget',
    'MassAtInfinityTarget',
    'TwoSegmentTarget',
    'resolve_target',
    'RunConfigFileReader',
    'CsvFileWriter',
    'JsonFileWriter',
    'HerglotzDensityPipeline',
    'ScheduleEntry',
    'default_schedule',
    'InvariantVerificationSuite',
]
