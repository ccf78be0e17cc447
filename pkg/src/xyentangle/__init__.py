"""Global (geometric) entanglement of periodic quantum XY spin chains."""

from .model import ChainSpec, ModelPoint, SpectrumData, bogoliubov_angle, phase_of, spectrum, wavevectors
from .overlap import (
    EntanglementResult,
    LogOverlap,
    ProductAnsatz,
    SuperpositionSpec,
    maximize_entanglement,
    overlap,
    overlap_superposition,
)
from .thermo import QuadratureSpec, thermo_density, thermo_integrand

__all__ = [
    "ChainSpec",
    "EntanglementResult",
    "LogOverlap",
    "ModelPoint",
    "ProductAnsatz",
    "QuadratureSpec",
    "SpectrumData",
    "SuperpositionSpec",
    "bogoliubov_angle",
    "maximize_entanglement",
    "overlap",
    "overlap_superposition",
    "phase_of",
    "spectrum",
    "thermo_density",
    "thermo_integrand",
    "wavevectors",
]

__version__ = "0.1.0"
