"""
Module containing the `HerglotzDensityPipeline` class, which approximates the m function of a target Hamiltonian
by m functions of smooth Schrödinger operators, together with the dyadic convergence harness and the
measure-truncation experiment.
"""

from __future__ import annotations
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import wraps
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from typing_extensions import Self
import numpy as np
from numpy.typing import ArrayLike, NDArray

from .config import (
    DEFAULT_LEVELS, CORNER_WIDTH_FRACTION, KERNEL_WIDTH_FRACTION, INITIAL_WIDTH_FRACTION, WINDOW_DISK_FACTOR,
    DEFAULT_ALPHA, DEFAULT_M_TOLERANCE, REFERENCE_M_TOLERANCE, HARNESS_WINDOW, HARNESS_LEVELS, FREE_MEASURE_T_MAX
)
from .logging import Loggable
from .interfaces import ApproximationTarget, ArtifactFileWriter
from .sphere_points import SpherePoint, chordal_dist, default_grid, validate_grid
from .herglotz_functions import (
    HerglotzSpec, eval_herglotz, truncate_measure, schrodinger_normalized_constant, measure_weak_dist
)
from .hamiltonians import (
    Hamiltonian, StepPhi, PwlPhi, SmoothPhi, SingularTail, weakstar_dist, cumulative_integrals
)
from .phi_construction import build_step_phi, pwl_approximate, mollify
from .canonical_system_solving import (
    NonconvergenceError, weyl_m, solve_canonical, weyl_identity_residual, integral_equation_residual
)
from .schrodinger_equation_solving import Potential, AsymptoticResidual, asymptotic_residual
from .schrodinger_canonical_transformation import TransformData, canonical_to_schrodinger, recover_beta

# ----------------------------
# Schedules and results
# ----------------------------

@dataclass(frozen=True)
class ScheduleEntry:
    """
    Dyadic level n, corner width ε, kernel half-width h, initial slope-1 width δ and an optional window X.
    Without a window the target chooses one from the level (see `level_window_tolerance`).
    """
    n: int
    epsilon: float
    h: float
    delta: float
    window: float | None = None

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"Dyadic level must be nonnegative, got {self.n}")
        if not (self.epsilon > 0 and self.h > 0 and self.delta > 0):
            raise ValueError(f"Schedule widths must be positive, got ε={self.epsilon}, h={self.h}, δ={self.delta}")
        if not self.h < 0.5 * self.delta:
            raise ValueError(f"Kernel width h={self.h} must be below half the initial width δ={self.delta}")
        if self.window is not None and not self.window >= 2.0**-self.n:
            raise ValueError(f"Window X={self.window} must hold at least one dyadic cell of width 2^-{self.n}")

def default_schedule(levels: Sequence[int] = DEFAULT_LEVELS) -> list[ScheduleEntry]:
    """
    Returns the diagonal schedule ε, h, δ = CORNER_WIDTH_FRACTION, KERNEL_WIDTH_FRACTION, INITIAL_WIDTH_FRACTION
    times the cell width 2^-n, with windows left to the target.
    """
    schedule = []
    for n in levels:
        cell = 2.0**-n
        schedule.append(ScheduleEntry(
            int(n), CORNER_WIDTH_FRACTION * cell, KERNEL_WIDTH_FRACTION * cell, INITIAL_WIDTH_FRACTION * cell
        ))
    return schedule

def level_window_tolerance(n: int) -> float:
    """
    Returns the Weyl disk diameter below which the target is cut at level n.
    """
    return WINDOW_DISK_FACTOR * 2.0**-n

@dataclass
class StageReport:
    """
    Weak-* distances of the construction stages to the target, and the grid m-error of the approximant.
    """
    weakstar_step: float
    weakstar_smoothing: float
    weakstar_total: float
    m_error: float
    errors: list[float]
    diameters: list[float]
    nonconverged: list[complex] = field(default_factory=list)
    asymptotics: list[AsymptoticResidual] = field(default_factory=list)

    @property
    def triangle_bound(self) -> float:
        return self.weakstar_step + self.weakstar_smoothing

    @property
    def triangle_holds(self) -> bool:
        return self.weakstar_total <= self.triangle_bound + 1e-12

@dataclass
class ApproximationResult:
    """
    One schedule entry: the angle stages, the approximating canonical system P_φ̃ with its singular tail,
    and the Schrödinger problem (V on [0, b], α, β) it comes from.
    """
    entry: ScheduleEntry
    window: float
    alpha: float
    step: StepPhi
    pwl: PwlPhi
    phi: SmoothPhi
    H: Hamiltonian
    potential: Potential
    transform: TransformData
    b: float
    beta: float
    report: StageReport

# ----------------------------
# Approximation
# ----------------------------

def _tail_for(target: Hamiltonian, X: float, phi: SmoothPhi) -> SingularTail:
    if isinstance(target.tail, SingularTail) and target.end > 0 and abs(target.end - X) <= 1e-12 * X:
        return target.tail
    return SingularTail(float(phi(X)))

def grid_m_errors(
    H: Hamiltonian,
    references: Sequence[SpherePoint],
    grid: NDArray,
    tol: float
) -> tuple[list[float], list[float], list[complex]]:
    """
    Returns the chordal errors and disk diameters per grid point, and the points where m did not converge.
    A nonconverged point counts as an infinite error, so no partial maximum can pass a trend check.
    """
    errors, diameters, nonconverged = [], [], []
    for z, reference in zip(grid, references):
        try:
            value = weyl_m(H, complex(z), tol)
        except NonconvergenceError:
            nonconverged.append(complex(z))
            errors.append(np.inf)
            diameters.append(np.nan)
            continue
        errors.append(chordal_dist(value.point, reference))
        diameters.append(value.diameter)
    return errors, diameters, nonconverged

def approximate_entry(
    target: ApproximationTarget,
    entry: ScheduleEntry,
    alpha: float = DEFAULT_ALPHA,
    grid: ArrayLike | None = None,
    tol: float = DEFAULT_M_TOLERANCE,
    references: Sequence[SpherePoint] | None = None
) -> ApproximationResult:
    """
    Runs step → piecewise-linear → mollified angle for one schedule entry and evaluates the approximant.
    """
    grid = default_grid() if grid is None else validate_grid(grid)
    if references is None:
        references = [target.get_reference_m(complex(z)) for z in grid]
    H_target = target.get_hamiltonian()
    X = entry.window if entry.window is not None else target.get_window(level_window_tolerance(entry.n), grid)
    if X > H_target.domain_end:
        raise ValueError(f"Window X={X} reaches beyond the target's domain [0, {H_target.domain_end})")

    step = build_step_phi(H_target, entry.n, X)
    pwl = pwl_approximate(step, alpha, entry.epsilon, entry.delta)
    phi = mollify(pwl, entry.h)
    tail = _tail_for(H_target, X, phi)
    H = Hamiltonian.from_phi(phi, end=X, tail=tail)
    potential, alpha_out, transform = canonical_to_schrodinger(phi, X)
    beta = recover_beta(transform.connection, tail.theta)

    H_step = Hamiltonian.from_step(step, tail)
    errors, diameters, nonconverged = grid_m_errors(H, references, grid, tol)
    report = StageReport(
        weakstar_step=weakstar_dist(H_step, H_target),
        weakstar_smoothing=weakstar_dist(H, H_step),
        weakstar_total=weakstar_dist(H, H_target),
        m_error=float(max(errors)),
        errors=errors,
        diameters=diameters,
        nonconverged=nonconverged
    )
    return ApproximationResult(
        entry, X, alpha_out, step, pwl, phi, H, potential, transform, float(transform.x[-1]), beta, report
    )

def approximate(
    target: ApproximationTarget,
    schedule: Sequence[ScheduleEntry] | None = None,
    alpha: float = DEFAULT_ALPHA,
    grid: ArrayLike | None = None,
    tol: float = DEFAULT_M_TOLERANCE,
    threads: int = 1
) -> list[ApproximationResult]:
    """
    Runs every schedule entry (in parallel when `threads` > 1) and returns the results in schedule order.
    """
    schedule = default_schedule() if schedule is None else list(schedule)
    if not schedule:
        raise ValueError("Schedule is empty")
    if not 0 <= alpha < np.pi:
        raise ValueError(f"Boundary angle must lie in [0, π), got {alpha}")
    grid = default_grid() if grid is None else validate_grid(grid)
    references = [target.get_reference_m(complex(z)) for z in grid]
    run = lambda entry: approximate_entry(target, entry, alpha, grid, tol, references)
    if threads <= 1:
        return [run(entry) for entry in schedule]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(run, schedule))

# ----------------------------
# Dyadic convergence harness
# ----------------------------

@dataclass
class HarnessRow:
    """
    Errors of the dyadic approximant H_n (steps on [0, X), target beyond) against the target.
    """
    n: int
    solution_error: float
    cumulative_error: float
    m_error: float
    identity_residual: float
    integral_residual: float

def appendix_harness(
    target: Hamiltonian,
    levels: Sequence[int] = HARNESS_LEVELS,
    window: float = HARNESS_WINDOW,
    grid: ArrayLike | None = None,
    tol: float = DEFAULT_M_TOLERANCE
) -> list[HarnessRow]:
    """
    Returns, per level: the sup error of the solution with u(0) = (1, 0) at z = i on [0, 1], the sup error of
    ∫_0^x H on [0, X], the grid m-error, the largest Im m/Im z versus ∫ f*Hf mismatch, and how far the
    approximant's solution is from solving the target's system.
    """
    levels = list(levels)
    if not levels or np.any(np.diff(levels) <= 0):
        raise ValueError("Harness levels must be nonempty and increasing")
    grid = default_grid() if grid is None else validate_grid(grid)
    spacing = 2.0**-(levels[-1] + 2)
    solution_grid = np.linspace(0.0, 1.0, int(round(1 / spacing)) + 1)
    cumulative_grid = np.linspace(0.0, window, int(round(window / spacing)) + 1)
    u0 = np.array([1.0, 0.0])
    reference_solution = solve_canonical(target, 1j, u0, solution_grid)
    reference_integrals = cumulative_integrals(target, cumulative_grid)
    references = [weyl_m(target, complex(z), REFERENCE_M_TOLERANCE).point for z in grid]

    rows = []
    for n in levels:
        H_n = target.spliced(Hamiltonian.from_step(build_step_phi(target, n, window)), window)
        solution = solve_canonical(H_n, 1j, u0, solution_grid)
        integrals = cumulative_integrals(H_n, cumulative_grid)
        m_errors = [chordal_dist(weyl_m(H_n, complex(z), tol).point, ref) for z, ref in zip(grid, references)]
        identity = max(weyl_identity_residual(H_n, complex(z), tol) for z in grid)
        rows.append(HarnessRow(
            n=n,
            solution_error=float(np.max(np.linalg.norm(solution.values - reference_solution.values, axis=1))),
            cumulative_error=float(np.max(np.abs(integrals - reference_integrals))),
            m_error=float(max(m_errors)),
            identity_residual=float(identity),
            integral_residual=integral_equation_residual(target, solution, solved_with=H_n)
        ))
    return rows

# ----------------------------
# Measure truncation
# ----------------------------

@dataclass
class TruncationRow:
    n: int
    constant: float
    measure_distance: float
    m_error: float

def truncation_demonstration(
    levels: Sequence[int] = (2, 4, 8, 16),
    spec: HerglotzSpec | None = None,
    t_max: float = FREE_MEASURE_T_MAX,
    grid: ArrayLike | None = None
) -> list[TruncationRow]:
    """
    Truncates the measure of F(z) = z (a point mass at ∞) with a free tail and the Schrödinger-normalized constant.
    The measures converge weak-* while the reconstructed Herglotz functions run off to ∞.
    """
    spec = HerglotzSpec(mass_at_inf=1.0) if spec is None else spec
    grid = default_grid() if grid is None else validate_grid(grid)
    rows = []
    for n in levels:
        constant = schrodinger_normalized_constant(spec, n)
        truncated = replace(truncate_measure(spec, n, t_max), A=constant)
        m_error = max(
            chordal_dist(SpherePoint(eval_herglotz(truncated, complex(z))), SpherePoint(eval_herglotz(spec, complex(z))))
            for z in grid
        )
        rows.append(TruncationRow(int(n), constant, measure_weak_dist(truncated, spec), float(m_error)))
    return rows

# ----------------------------
# Pipeline
# ----------------------------

class HerglotzDensityPipeline(Loggable):
    """
    Orchestrates the approximation of a target m function by Schrödinger m functions with smooth potentials.
    """

    # ----------------------------
    # Construction, state validation, and logging
    # ----------------------------

    def __init__(self, grid: ArrayLike | None = None, tol: float = DEFAULT_M_TOLERANCE, threads: int = 1) -> None:
        super().__init__()
        if tol <= 0:
            raise ValueError(f"Tolerance must be positive, got {tol}")
        self.grid = default_grid() if grid is None else validate_grid(grid)
        self.tol = tol
        self.threads = max(1, int(threads))
        self.log(f"Evaluation grid: {self.grid.size} points, m tolerance {tol}, {self.threads} thread(s)")

        self.target: ApproximationTarget = None
        self.schedule: list[ScheduleEntry] = None
        self.alpha: float = DEFAULT_ALPHA
        self.results: list[ApproximationResult] = None
        self.harness_rows: list[HarnessRow] = None

    def validate_state(attribute_name: str) -> Callable:
        """
        Decorator to validate that a specific attribute is not None.
        """
        def decorator(method: Callable) -> Callable:
            @wraps(method)
            def wrapper(self, *args: Any, **kwargs: Any) -> Any:
                if getattr(self, attribute_name) is None:
                    error_message_roots = {
                        "target": "Set target",
                        "results": "Run approximate()"
                    }
                    error_message = error_message_roots[attribute_name] + " before invoking " + method.__name__ + "()"
                    raise RuntimeError(error_message)
                return method(self, *args, **kwargs)
            return wrapper
        return decorator

    def group_logs(title: str):
        """
        Decorator that adds a title and separator lines around a method's logs.
        """
        def decorator(func):
            @wraps(func)
            def wrapper(self, *args, **kwargs):
                self.log(f"\n{title}")
                self.log("-" * 50)
                result = func(self, *args, **kwargs)
                self.log("-" * 50 + "\n")
                return result
            return wrapper
        return decorator

    # ----------------------------
    # Setup
    # ----------------------------

    @group_logs("TARGET")
    def set_target(self, target: ApproximationTarget) -> Self:
        self.target = target
        self.results = None
        self.harness_rows = None
        self.log(f"Target set using {target.__class__.__name__}: {target.get_name()}")
        self.log(target.get_log(indent_level=1))
        return self

    def set_schedule(self, schedule: Sequence[ScheduleEntry] | None = None) -> Self:
        """
        Sets the schedule. Without an argument the diagonal default schedule is used.
        """
        self.schedule = default_schedule() if schedule is None else list(schedule)
        if not self.schedule:
            raise ValueError("Schedule is empty")
        self.log(f"Schedule set with levels {[entry.n for entry in self.schedule]}")
        return self

    def set_alpha(self, alpha: float) -> Self:
        if not 0 <= alpha < np.pi:
            raise ValueError(f"Boundary angle must lie in [0, π), got {alpha}")
        self.alpha = float(alpha)
        self.log(f"Boundary angle α = {self.alpha}")
        return self

    # ----------------------------
    # Runs
    # ----------------------------

    @validate_state('target')
    @group_logs("APPROXIMATION")
    def approximate(self) -> Self:
        """
        Runs the construction for every schedule entry.
        """
        if self.schedule is None:
            self.set_schedule()
        self.results = approximate(self.target, self.schedule, self.alpha, self.grid, self.tol, self.threads)
        for result in self.results:
            entry, report = result.entry, result.report
            self.log(f"n = {entry.n} (ε = {entry.epsilon}, h = {entry.h}, δ = {entry.delta}, X = {result.window})")
            self.log(f"Weak-* distance: {report.weakstar_total:.6e} (step {report.weakstar_step:.6e}, smoothing {report.weakstar_smoothing:.6e})", indent_level=1)
            self.log(f"Grid m-error: {report.m_error:.6e}", indent_level=1)
            self.log(f"Potential on [0, {result.b:.6g}] with α = {result.alpha:.6g}, β = {result.beta:.6g}", indent_level=1)
            if report.nonconverged:
                self.log(f"Nonconverged at z = {report.nonconverged}", indent_level=1)
        return self

    @validate_state('results')
    @group_logs("ASYMPTOTIC CHECK")
    def check_asymptotics(self, y_values: Sequence[float] = (1e2, 1e3, 1e4)) -> Self:
        """
        Adds |m(iy) - predicted(iy)| of every produced potential (continued as a limit point) to the reports.
        """
        for result in self.results:
            result.report.asymptotics = asymptotic_residual(result.potential, result.alpha, y_values, self.tol)
            residuals = ", ".join(f"{row.residual:.3e}" for row in result.report.asymptotics)
            self.log(f"n = {result.entry.n}: {residuals}")
        return self

    @validate_state('target')
    @group_logs("DYADIC HARNESS")
    def run_appendix_harness(self, levels: Sequence[int] = HARNESS_LEVELS, window: float = HARNESS_WINDOW) -> Self:
        self.harness_rows = appendix_harness(self.target.get_hamiltonian(), levels, window, self.grid, self.tol)
        for row in self.harness_rows:
            self.log(f"n = {row.n}: solution {row.solution_error:.3e}, integral {row.cumulative_error:.3e}, m {row.m_error:.3e}")
        return self

    def get_results(self) -> list[ApproximationResult]:
        return self.results

    def get_harness_rows(self) -> list[HarnessRow]:
        return self.harness_rows

    # ----------------------------
    # Artifacts
    # ----------------------------

    @validate_state('results')
    @group_logs("REPORT WRITING")
    def write_report(
        self,
        report_writer: ArtifactFileWriter,
        table_writer_for: Callable[[str], ArtifactFileWriter] | None = None
    ) -> Self:
        """
        Writes the report record and, when `table_writer_for` is given, per-entry angle and potential tables
        named phi_n<k>.csv and potential_n<k>.csv.
        """
        entry = self.target.get_catalog_entry()
        rows = []
        for result in self.results:
            phi_file, potential_file = f"phi_n{result.entry.n}.csv", f"potential_n{result.entry.n}.csv"
            if table_writer_for is not None:
                phi_writer = table_writer_for(phi_file)
                derivatives = np.stack([result.phi.derivative(result.phi.grid, order) for order in range(4)], axis=1)
                for t, row in zip(result.phi.grid, derivatives):
                    phi_writer.add_record((t, *row))
                phi_writer.write_file()
                potential_writer = table_writer_for(potential_file)
                for x, v in zip(result.potential.grid, result.potential.values):
                    potential_writer.add_record((x, v))
                potential_writer.write_file()
                self.log(phi_writer.get_log(indent_level=1))
                self.log(potential_writer.get_log(indent_level=1))
            report = result.report
            rows.append({
                "n": result.entry.n,
                "eps": result.entry.epsilon,
                "h": result.entry.h,
                "delta": result.entry.delta,
                "window": result.window,
                "weakstar": report.weakstar_total,
                "weakstar_step": report.weakstar_step,
                "weakstar_smoothing": report.weakstar_smoothing,
                "triangle_holds": report.triangle_holds,
                "m_error": report.m_error,
                "diameters": report.diameters,
                "nonconverged": [[z.real, z.imag] for z in report.nonconverged],
                "asymptotics": [[row.y, row.residual] for row in report.asymptotics],
                "b": result.b,
                "beta": result.beta,
                "V_file": potential_file,
                "phi_file": phi_file
            })
        report_writer.add_record({
            "target": {"key": entry.key, "parameters": entry.parameters},
            "alpha": self.alpha,
            "schedule": rows
        })
        report_writer.write_file()
        self.log(f"Report written using {report_writer.__class__.__name__}")
        self.log(report_writer.get_log(indent_level=1))
        return self
