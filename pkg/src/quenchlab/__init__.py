"""quenchlab: local distinguishability of symmetry-broken ground states
after a sudden quench, via the exact free-fermion solution of XY and
N-cluster Ising chains."""

from .models import (
    ClusterIsingModel,
    FiniteGrid,
    ThermodynamicGrid,
    XYModel,
    analytic_order_parameter,
)
from .quench import QuenchProtocol, evolve_amplitudes
from .correlators import CorrelatorTable, build_table
from .wick import (
    PauliString,
    broken_expectation,
    pfaffian,
    reference_operator,
    signed_broken_expectation,
    symmetric_expectation,
    validity_horizon,
)
from .rdm import SpinSubset, build_chi_tilde, build_rho, max_distance, trace_distance
from .analysis import DistanceSeries, detect_transient, fit_exponential

__version__ = "0.1.0"

__all__ = [
    "XYModel",
    "ClusterIsingModel",
    "FiniteGrid",
    "ThermodynamicGrid",
    "analytic_order_parameter",
    "QuenchProtocol",
    "evolve_amplitudes",
    "CorrelatorTable",
    "build_table",
    "PauliString",
    "pfaffian",
    "symmetric_expectation",
    "broken_expectation",
    "signed_broken_expectation",
    "reference_operator",
    "validity_horizon",
    "SpinSubset",
    "build_chi_tilde",
    "build_rho",
    "max_distance",
    "trace_distance",
    "DistanceSeries",
    "detect_transient",
    "fit_exponential",
    "__version__",
]
