"""Numerical geometry of gauge theories with spontaneous symmetry breaking on coset bundles."""

from ._backend import BACKEND, HAS_NUMBA
from .coset import CosetChart, fundamental_vector, representative, wigner_decompose
from .errors import CosetGaugeError
from .lie import HRepresentation, LieAlgebraData, ReductiveSplit, check_reductive
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "HAS_NUMBA",
    "CosetChart",
    "CosetGaugeError",
    "HRepresentation",
    "LieAlgebraData",
    "ReductiveSplit",
    "Scenario",
    "check_reductive",
    "fundamental_vector",
    "load_scenario",
    "representative",
    "wigner_decompose",
]
