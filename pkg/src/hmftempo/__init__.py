"""Mean-force Gibbs states of small quantum systems via imaginary-time TEMPO."""

from .bath import Discrete, InfluenceKernel, OhmicExp, correlation_K, influence_kernel, polaron_C
from .ensembles import (
    EnsembleKind,
    cross_coherence,
    expectation,
    gibbs,
    negativity,
    project,
    tauz_projected,
    tauz_system,
    trace_distance,
)
from .imtempo import HmfResult, compute_hmf, propagator
from .model import SystemModel, build_single_qubit, build_two_qubit, pointer_observables
from .oracle import DiscreteBathSpec, exact_hmf_ed, exact_path_sum
from .polaron import PolaronRates, polaron_rates, polaron_steady_state
from .tensor_core import MatrixProductState, TruncationPolicy

__all__ = [
    "Discrete", "InfluenceKernel", "OhmicExp", "correlation_K", "influence_kernel", "polaron_C",
    "EnsembleKind", "cross_coherence", "expectation", "gibbs", "negativity", "project",
    "tauz_projected", "tauz_system", "trace_distance",
    "HmfResult", "compute_hmf", "propagator",
    "SystemModel", "build_single_qubit", "build_two_qubit", "pointer_observables",
    "DiscreteBathSpec", "exact_hmf_ed", "exact_path_sum",
    "PolaronRates", "polaron_rates", "polaron_steady_state",
    "MatrixProductState", "TruncationPolicy",
]

__version__ = "0.1.0"
