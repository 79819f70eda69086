"""
Module containing the command-line front end: `RunConfig`, the `CommandRunner` class that executes one subcommand
and writes its artifacts, and `main`, the entry point of `python -m mweyl`.

Exit codes: 0 on success, 2 on validation or input errors, 3 on numerical nonconvergence or a failed `verify`.
"""

from __future__ import annotations
import argparse
import json
import os
import sys
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any
import numpy as np
from numpy.typing import NDArray

from .config import DEFAULT_M_TOLERANCE, DEFAULT_ALPHA, WEYL_DISK_MAX_LENGTH, THREADS_ENV_VAR
from .logging import Loggable
from .sphere_points import default_grid, validate_grid
from .herglotz_functions import herglotz_function, measure_weak_dist
from .hamiltonians import weakstar_dist, weakstar_terms
from .canonical_system_solving import NonconvergenceError, MFunctionValue, weyl_m
from .schrodinger_equation_solving import weyl_m_schrodinger
from .schrodinger_canonical_transformation import (
    schrodinger_to_canonical, canonical_to_schrodinger, recover_beta
)
from .approximation_targets import HamiltonianTarget, resolve_target
from .herglotz_density_pipeline import HerglotzDensityPipeline, ScheduleEntry, default_schedule
from .artifact_file_reading import RunConfigFileReader, herglotz_spec_from_json
from .artifact_file_writing import (
    CsvFileWriter, JsonFileWriter, MGRID_COLUMNS, POTENTIAL_COLUMNS, PHI_COLUMNS, TRANSFORM_COLUMNS
)
from .invariant_verification import InvariantVerificationSuite

SUBCOMMANDS = ("mfun", "convert", "approximate", "metric", "verify")

EXIT_SUCCESS = 0
EXIT_VALIDATION_ERROR = 2
EXIT_NONCONVERGENCE = 3

# ----------------------------
# Run configuration
# ----------------------------

@dataclass
class RunConfig:
    """
    Everything a subcommand needs besides the contents of the JSON configuration file.
    """
    subcommand: str
    config_path: Path | None
    out_dir: Path
    threads: int = 1
    tol: float = DEFAULT_M_TOLERANCE
    grid: NDArray[np.complex128] | None = None

    def __post_init__(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise ValueError(f"Unknown subcommand '{self.subcommand}', expected one of {', '.join(SUBCOMMANDS)}")
        if self.subcommand != "verify" and self.config_path is None:
            raise ValueError(f"Subcommand '{self.subcommand}' needs --config")
        if not self.tol > 0:
            raise ValueError(f"Tolerance must be positive, got {self.tol}")
        if self.threads < 1:
            raise ValueError(f"Thread count must be at least 1, got {self.threads}")
        if self.grid is not None:
            self.grid = validate_grid(self.grid)

def _threads_from(argument: int | None) -> int:
    if argument is not None:
        return argument
    value = os.environ.get(THREADS_ENV_VAR)
    if value is None:
        return 1
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got '{value}'")

def _schedule_from(data: Any) -> list[ScheduleEntry]:
    """
    Parses [{"n", "eps", "h", "delta", optional "window"}, ...] or {"levels": [n, ...]} for the diagonal schedule.
    """
    if data is None:
        return default_schedule()
    if isinstance(data, dict):
        return default_schedule([int(n) for n in data.get("levels", [])])
    try:
        return [
            ScheduleEntry(
                int(item["n"]), float(item["eps"]), float(item["h"]), float(item["delta"]),
                float(item["window"]) if item.get("window") is not None else None
            )
            for item in data
        ]
    except (KeyError, TypeError):
        raise ValueError("Schedule entries need 'n', 'eps', 'h' and 'delta'")

# ----------------------------
# Subcommands
# ----------------------------

class CommandRunner(Loggable):
    """
    Executes one subcommand. Every method returns an exit code and has written its artifacts before returning,
    including partial results when some grid points did not converge.
    """

    def __init__(self, config: RunConfig) -> None:
        super().__init__()
        self.config = config
        self.reader: RunConfigFileReader = None
        if config.config_path is not None:
            self.reader = RunConfigFileReader(config.config_path)
        self.grid = self._grid()
        self.log(f"Subcommand: {config.subcommand}")
        self.log(f"Output directory: {config.out_dir}")
        self.log(f"Grid: {self.grid.size} points, tolerance {config.tol}, {config.threads} thread(s)")
        if self.reader is not None:
            self.log(self.reader.get_log(indent_level=1))

    def _grid(self) -> NDArray[np.complex128]:
        if self.config.grid is not None:
            return self.config.grid
        if self.reader is not None and self.reader.get_grid() is not None:
            return self.reader.get_grid()
        return default_grid()

    def _output(self, filename: str) -> Path:
        return self.config.out_dir / filename

    def _finish(self, writer: CsvFileWriter | JsonFileWriter) -> None:
        writer.write_file()
        self.log(writer.get_log(indent_level=1))

    def run(self) -> int:
        return getattr(self, f"run_{self.config.subcommand}")()

    # ----------------------------
    # mfun
    # ----------------------------

    def run_mfun(self) -> int:
        """
        Writes mgrid.csv for a Hamiltonian, a potential with boundary data, or a Herglotz measure.
        """
        evaluate = self._m_evaluator()
        points = [complex(z) for z in self.grid]
        if self.config.threads > 1:
            with ThreadPoolExecutor(max_workers=self.config.threads) as executor:
                values = list(executor.map(evaluate, points))
        else:
            values = [evaluate(z) for z in points]

        writer = CsvFileWriter(self._output("mgrid.csv"), MGRID_COLUMNS)
        failed = []
        for z, value in zip(points, values):
            if value is None:
                failed.append(z)
                writer.add_record((z.real, z.imag, np.nan, np.nan, 0, np.nan, np.nan))
                continue
            infinite = value.point.is_infinite()
            m = 0j if infinite else value.point.to_complex()
            writer.add_record((z.real, z.imag, m.real, m.imag, int(infinite), value.diameter, value.length))
        self._finish(writer)
        if failed:
            self.log(f"Nonconverged at z = {failed}")
            return EXIT_NONCONVERGENCE
        return EXIT_SUCCESS

    def _m_evaluator(self):
        tol = self.config.tol
        data = self.reader.data
        if "hamiltonian" in data:
            H = self.reader.get_hamiltonian()
            max_length = float(data.get("max_length", WEYL_DISK_MAX_LENGTH))
            self.log(f"Source: canonical system {H}")
            compute = lambda z: weyl_m(H, z, tol, max_length)
        elif "potential" in data:
            V, bd = self.reader.get_potential(), self.reader.get_boundary()
            self.log(f"Source: Schrödinger operator {V} with {bd}")
            compute = lambda z: weyl_m_schrodinger(V, bd, z, tol)
        elif "herglotz" in data:
            F = herglotz_function(self.reader.get_herglotz_spec())
            self.log("Source: Herglotz representation")
            compute = lambda z: MFunctionValue(F(z), 0.0, 0.0)
        else:
            raise ValueError("mfun needs one of 'hamiltonian', 'potential' or 'herglotz'")

        def evaluate(z: complex) -> MFunctionValue | None:
            try:
                return compute(z)
            except NonconvergenceError as error:
                self.log(str(error), indent_level=1)
                return None
        return evaluate

    # ----------------------------
    # convert
    # ----------------------------

    def run_convert(self) -> int:
        """
        "direction": "to-canonical" writes phi.csv, transform.csv and convert.json;
        "direction": "to-schrodinger" writes potential.csv, transform.csv and convert.json.
        """
        direction = self.reader.get("direction", "to-canonical")
        if direction == "to-canonical":
            return self._convert_to_canonical()
        if direction == "to-schrodinger":
            return self._convert_to_schrodinger()
        raise ValueError(f"Unknown conversion direction '{direction}', expected 'to-canonical' or 'to-schrodinger'")

    def _write_transform(self, data) -> None:
        writer = CsvFileWriter(self._output("transform.csv"), TRANSFORM_COLUMNS)
        for row in zip(data.x, data.t, data.R, data.phi):
            writer.add_record(row)
        self._finish(writer)

    def _convert_to_canonical(self) -> int:
        V, bd = self.reader.get_potential(), self.reader.get_boundary()
        cutoff = self.reader.get("cutoff")
        H, data = schrodinger_to_canonical(V, bd, cutoff=None if cutoff is None else float(cutoff))
        phi = H.segments[0].phi
        self.log(f"Canonical system {H} with t_b = {data.t_b}")

        writer = CsvFileWriter(self._output("phi.csv"), PHI_COLUMNS)
        derivatives = np.stack([phi.derivative(phi.grid, order) for order in range(4)], axis=1)
        for t, row in zip(phi.grid, derivatives):
            writer.add_record((t, *row))
        self._finish(writer)
        self._write_transform(data)

        summary = JsonFileWriter(self._output("convert.json"))
        summary.add_record({
            "direction": "to-canonical",
            "alpha": data.alpha,
            "t_end": float(data.t[-1]),
            "t_b": data.t_b,
            "tail_theta": data.tail_angle,
            "connection_determinant": data.connection_determinant(),
            "wronskian_residual": data.wronskian_residual
        })
        self._finish(summary)
        return EXIT_SUCCESS

    def _convert_to_schrodinger(self) -> int:
        phi = self.reader.get_phi()
        end = self.reader.get("end")
        V, alpha, data = canonical_to_schrodinger(phi, None if end is None else float(end))
        self.log(f"Potential on [0, {data.x[-1]:.6g}] with α = {alpha:.6g}")

        writer = CsvFileWriter(self._output("potential.csv"), POTENTIAL_COLUMNS)
        for row in zip(V.grid, V.values):
            writer.add_record(row)
        self._finish(writer)
        self._write_transform(data)

        record = {"direction": "to-schrodinger", "alpha": alpha, "b": float(data.x[-1]), "t_end": data.t_b}
        tail = self.reader.get("tail")
        if tail is not None:
            record["beta"] = recover_beta(data.connection, float(tail["theta"]))
        summary = JsonFileWriter(self._output("convert.json"))
        summary.add_record(record)
        self._finish(summary)
        return EXIT_SUCCESS

    # ----------------------------
    # approximate
    # ----------------------------

    def run_approximate(self) -> int:
        """
        Runs the density pipeline on a catalog target or a given Hamiltonian and writes report.json with the
        per-entry angle and potential tables.
        """
        data = self.reader.data
        if "target" in data:
            target_data = data["target"]
            if not isinstance(target_data, dict) or "key" not in target_data:
                raise ValueError("Target must be an object with a catalog 'key'")
            target = resolve_target(target_data["key"], target_data.get("parameters"))
        elif "hamiltonian" in data:
            target = HamiltonianTarget(self.reader.get_hamiltonian())
        else:
            raise ValueError("approximate needs a catalog 'target' or a 'hamiltonian'")

        pipeline = (
            HerglotzDensityPipeline(self.grid, self.config.tol, self.config.threads)
            .set_target(target)
            .set_schedule(_schedule_from(data.get("schedule")))
            .set_alpha(float(data.get("alpha", DEFAULT_ALPHA)))
            .approximate()
        )
        if data.get("check_asymptotics", False):
            pipeline.check_asymptotics()
        table_writer_for = lambda filename: CsvFileWriter(
            self._output(filename), PHI_COLUMNS if filename.startswith("phi_") else POTENTIAL_COLUMNS
        )
        pipeline.write_report(JsonFileWriter(self._output("report.json")), table_writer_for)
        self.log(pipeline.get_log(indent_level=1))

        if any(result.report.nonconverged for result in pipeline.get_results()):
            return EXIT_NONCONVERGENCE
        return EXIT_SUCCESS

    # ----------------------------
    # metric
    # ----------------------------

    def run_metric(self) -> int:
        """
        Writes metric.json with the weak-* distance of two Hamiltonians and, when given, of two measures.
        """
        data = self.reader.data
        record: dict[str, Any] = {}
        if "hamiltonians" in data:
            H1, H2 = self._pair(self.reader.get_hamiltonians(), "hamiltonians")
            record["hamiltonian_distance"] = weakstar_dist(H1, H2)
            record["hamiltonian_terms"] = weakstar_terms(H1, H2)
            self.log(f"Hamiltonian weak-* distance: {record['hamiltonian_distance']:.6e}")
        if "measures" in data:
            rho1, rho2 = self._pair([herglotz_spec_from_json(item) for item in data["measures"]], "measures")
            record["measure_distance"] = measure_weak_dist(rho1, rho2)
            self.log(f"Measure weak-* distance: {record['measure_distance']:.6e}")
        if not record:
            raise ValueError("metric needs 'hamiltonians' or 'measures'")
        writer = JsonFileWriter(self._output("metric.json"))
        writer.add_record(record)
        self._finish(writer)
        return EXIT_SUCCESS

    @staticmethod
    def _pair(items: Sequence, key: str) -> tuple:
        if len(items) != 2:
            raise ValueError(f"'{key}' must hold exactly two entries, got {len(items)}")
        return items[0], items[1]

    # ----------------------------
    # verify
    # ----------------------------

    def run_verify(self) -> int:
        suite = InvariantVerificationSuite(self.config.tol, self.config.threads)
        results = suite.run()
        self.log(suite.get_log(indent_level=1))
        writer = JsonFileWriter(self._output("verify.json"))
        writer.add_record({
            "all_passed": suite.all_passed(),
            "checks": [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results]
        })
        self._finish(writer)
        return EXIT_SUCCESS if suite.all_passed() else EXIT_NONCONVERGENCE

# ----------------------------
# Entry points
# ----------------------------

def run(config: RunConfig) -> int:
    """
    Runs a subcommand, maps errors to exit codes, and writes the run log to <out>/run.log.
    """
    log = Loggable()
    log.log(f"mweyl {config.subcommand}")
    try:
        runner = CommandRunner(config)
        try:
            code = runner.run()
        finally:
            log.log(runner.get_log(indent_level=1))
    except NonconvergenceError as error:
        log.log(f"Nonconvergence: {error}")
        print(f"error: {error}", file=sys.stderr)
        code = EXIT_NONCONVERGENCE
    except (ValueError, OSError, json.JSONDecodeError) as error:
        log.log(f"Invalid input: {error}")
        print(f"error: {error}", file=sys.stderr)
        code = EXIT_VALIDATION_ERROR
    log.log(f"Exit code: {code}")
    try:
        config.out_dir.mkdir(parents=True, exist_ok=True)
        log.write_log_to_file(config.out_dir / "run.log")
    except OSError as error:
        print(f"error: could not write run log: {error}", file=sys.stderr)
        code = code or EXIT_VALIDATION_ERROR
    return code

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mweyl",
        description="m functions of Schrödinger operators and canonical systems, and their density in the Herglotz functions"
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
    parser.add_argument("--threads", type=int, help=f"worker threads (default: ${THREADS_ENV_VAR} or 1)")
    parser.add_argument("--tol", type=float, help=f"m-function tolerance (default: config 'tol' or {DEFAULT_M_TOLERANCE})")
    return parser

def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        tol = args.tol
        if tol is None and args.config is not None:
            with open(args.config) as file:
                tol = json.load(file).get("tol")
        config = RunConfig(
            subcommand=args.subcommand,
            config_path=args.config,
            out_dir=args.out,
            threads=_threads_from(args.threads),
            tol=DEFAULT_M_TOLERANCE if tol is None else float(tol)
        )
    except (ValueError, OSError, AttributeError) as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_VALIDATION_ERROR
    return run(config)
