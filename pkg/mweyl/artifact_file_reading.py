"""
Module containing the `RunConfigFileReader` class, which reads a JSON run configuration, and the parsers for the
JSON and CSV input formats (Hamiltonians, Herglotz measures, potentials, angle tables).
"""

from __future__ import annotations
import json
from pathlib import Path
from typing import Any
import numpy as np
from numpy.typing import NDArray

from .logging import Loggable
from .sphere_points import validate_grid
from .herglotz_functions import HerglotzSpec, DensityPart
from .hamiltonians import Hamiltonian, ConstantSegment, PhiSegment, SingularTail, ContinuedTail, SmoothPhi
from .schrodinger_equation_solving import Potential, BoundaryData, LimitPoint, Regular

# Closed-form potentials available by name in configurations
NAMED_POTENTIALS = {
    "zero": lambda x: np.zeros_like(x),
    "sin": np.sin,
    "cos": np.cos,
    "gaussian": lambda x: np.exp(-x**2)
}

def _require(data: dict, key: str, context: str) -> Any:
    if not isinstance(data, dict) or key not in data:
        raise ValueError(f"Missing '{key}' in {context}")
    return data[key]

def _resolve(path: str | Path, base_dir: Path) -> Path:
    path = Path(path)
    return path if path.is_absolute() else base_dir / path

# ----------------------------
# CSV tables
# ----------------------------

def read_csv_table(filename: str | Path, columns: int) -> NDArray[np.float64]:
    """
    Returns the rows below the header line of a comma-separated table with the given number of columns.
    """
    table = np.loadtxt(filename, delimiter=",", skiprows=1, ndmin=2)
    if table.shape[1] != columns:
        raise ValueError(f"{filename} has {table.shape[1]} columns, expected {columns}")
    return table

def read_potential_csv(filename: str | Path) -> Potential:
    """
    Reads x, V samples.
    """
    table = read_csv_table(filename, 2)
    return Potential.from_samples(table[:, 0], table[:, 1], label=Path(filename).name)

def read_phi_csv(filename: str | Path) -> SmoothPhi:
    """
    Reads t, φ, φ_t, φ_tt, φ_ttt samples.
    """
    table = read_csv_table(filename, 5)
    return SmoothPhi(table[:, 0], table[:, 1:])

# ----------------------------
# JSON objects
# ----------------------------

def hamiltonian_from_json(data: dict, base_dir: Path = Path(".")) -> Hamiltonian:
    """
    Parses {"constant": M} or {"segments": [...], "tail": {"theta": θ} | null}. Segments are
    {"kind": "const", "lo", "hi", "matrix"} or {"kind": "phi", "lo", "hi", "phi_file"} where the angle table
    is a CSV of t, phi, dphi, d2phi, d3phi. A null or missing tail continues the last segment.
    """
    if "constant" in data:
        return Hamiltonian.constant(np.asarray(data["constant"], dtype=np.float64))
    segments = []
    for index, segment in enumerate(_require(data, "segments", "Hamiltonian")):
        context = f"segment {index}"
        kind = _require(segment, "kind", context)
        lo, hi = float(_require(segment, "lo", context)), float(_require(segment, "hi", context))
        if kind == "const":
            segments.append(ConstantSegment(lo, hi, np.asarray(_require(segment, "matrix", context), dtype=np.float64)))
        elif kind == "phi":
            phi = read_phi_csv(_resolve(_require(segment, "phi_file", context), base_dir))
            segments.append(PhiSegment(lo, hi, phi))
        else:
            raise ValueError(f"Unknown segment type '{kind}' in {context}")
    tail_data = data.get("tail")
    if tail_data is None:
        tail = ContinuedTail()
    else:
        tail = SingularTail(float(_require(tail_data, "theta", "tail")))
    return Hamiltonian(segments, tail)

def herglotz_spec_from_json(data: dict) -> HerglotzSpec:
    """
    Parses {"A", "atoms": [[t, w], ...], "density": {"grid", "values"} or a list of them, "mass_at_inf"}.
    """
    parts = data.get("density", [])
    if isinstance(parts, dict):
        parts = [parts]
    density = tuple(
        DensityPart(np.asarray(_require(part, "grid", "density part"), dtype=np.float64),
                    np.asarray(_require(part, "values", "density part"), dtype=np.float64))
        for part in parts
    )
    return HerglotzSpec(
        A=float(data.get("A", 0.0)),
        atoms=tuple((float(t), float(w)) for t, w in data.get("atoms", [])),
        density=density,
        mass_at_inf=float(data.get("mass_at_inf", 0.0))
    )

def potential_from_json(data: dict, base_dir: Path = Path(".")) -> Potential:
    """
    Parses {"constant": c}, {"function": name} or {"csv": path}.
    """
    if "constant" in data:
        return Potential.constant(float(data["constant"]))
    if "function" in data:
        name = data["function"]
        if name not in NAMED_POTENTIALS:
            raise ValueError(f"Unknown potential '{name}', expected one of {', '.join(NAMED_POTENTIALS)}")
        return Potential.from_function(NAMED_POTENTIALS[name], label=name)
    if "csv" in data:
        return read_potential_csv(_resolve(data["csv"], base_dir))
    raise ValueError("Potential needs one of 'constant', 'function' or 'csv'")

def boundary_from_json(data: dict) -> BoundaryData:
    """
    Parses {"alpha", "endpoint": {"type": "limit-point"} or {"type": "regular", "b", "beta"}}.
    """
    endpoint_data = data.get("endpoint", {"type": "limit-point"})
    kind = _require(endpoint_data, "type", "endpoint")
    if kind == "limit-point":
        endpoint = LimitPoint()
    elif kind == "regular":
        endpoint = Regular(float(_require(endpoint_data, "b", "endpoint")), float(endpoint_data.get("beta", 0.0)))
    else:
        raise ValueError(f"Unknown endpoint type '{kind}'")
    return BoundaryData(float(data.get("alpha", 0.0)), endpoint)

def grid_from_json(data: list) -> NDArray[np.complex128]:
    """
    Parses [[re, im], ...].
    """
    try:
        points = [complex(float(re), float(im)) for re, im in data]
    except (TypeError, ValueError):
        raise ValueError("Grid must be a list of [re, im] pairs")
    return validate_grid(points)

# ----------------------------
# Run configurations
# ----------------------------

class RunConfigFileReader(Loggable):
    """
    Reads a single JSON run configuration. Relative paths inside it are resolved against its directory.
    """

    def __init__(self, filename: str | Path) -> None:
        super().__init__()
        self.filename = Path(filename)
        with open(self.filename) as file:
            self.data: dict[str, Any] = json.load(file)
        if not isinstance(self.data, dict):
            raise ValueError(f"Run configuration {self.filename} must be a JSON object")
        self.base_dir = self.filename.parent
        self.log(f"File path/name: {self.filename}")
        self.log(f"Keys: {', '.join(sorted(self.data))}")

    def get(self, key: str, default: Any = None) -> Any:
        return self.data.get(key, default)

    def get_hamiltonian(self, key: str = "hamiltonian") -> Hamiltonian:
        return hamiltonian_from_json(_require(self.data, key, str(self.filename)), self.base_dir)

    def get_hamiltonians(self) -> list[Hamiltonian]:
        return [hamiltonian_from_json(item, self.base_dir) for item in _require(self.data, "hamiltonians", str(self.filename))]

    def get_potential(self) -> Potential:
        return potential_from_json(_require(self.data, "potential", str(self.filename)), self.base_dir)

    def get_boundary(self) -> BoundaryData:
        return boundary_from_json(self.data.get("boundary", {}))

    def get_herglotz_spec(self) -> HerglotzSpec:
        return herglotz_spec_from_json(_require(self.data, "herglotz", str(self.filename)))

    def get_phi(self) -> SmoothPhi:
        return read_phi_csv(_resolve(_require(self.data, "phi_file", str(self.filename)), self.base_dir))

    def get_grid(self) -> NDArray[np.complex128] | None:
        return grid_from_json(self.data["grid"]) if "grid" in self.data else None
