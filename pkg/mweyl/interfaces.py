"""
Module containing interfaces (abstract classes) for approximation targets and artifact file writers.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any
from numpy.typing import ArrayLike
from .config import WINDOW_DISK_FACTOR
from .logging import Loggable
from .hamiltonians import Hamiltonian
from .sphere_points import SpherePoint

class ApproximationTarget(ABC, Loggable):
    """
    Used to supply the Hamiltonian whose m function the density pipeline approximates, with a reference m function.
    """

    @dataclass(frozen=True)
    class CatalogEntry:
        """
        Describes a target as a catalog key and its parameters, as written to reports.
        """
        key: str
        parameters: dict[str, Any] = field(default_factory=dict)

    @abstractmethod
    def get_name(self) -> str:
        pass

    @abstractmethod
    def get_catalog_entry(self) -> CatalogEntry:
        pass

    @abstractmethod
    def get_hamiltonian(self) -> Hamiltonian:
        """
        Returns the target Hamiltonian. It must be known at least on [0, get_window()).
        """
        pass

    @abstractmethod
    def get_reference_m(self, z: complex) -> SpherePoint:
        """
        Returns m_H(z), in closed form where one exists.
        """
        pass

    @abstractmethod
    def get_window(self, tolerance: float = WINDOW_DISK_FACTOR, grid: ArrayLike | None = None) -> float:
        """
        Returns X > 0 such that dyadic steps are built on [0, X) and the approximant continues with a singular tail from X.
        Cutting the target at X must move its m function by at most about `tolerance` on the grid.
        """
        pass

class ArtifactFileWriter(ABC, Loggable):
    """
    Used to write run artifacts (data tables, reports) to files.
    """

    @abstractmethod
    def add_record(self, record: Any) -> None:
        """
        Adds a record to the artifact.

        This method appends to a buffer.
        The actual file is only written when `write_file()` is called.
        """
        pass

    @abstractmethod
    def write_file(self) -> None:
        """
        Writes the buffered records to the file atomically.
        """
        pass
