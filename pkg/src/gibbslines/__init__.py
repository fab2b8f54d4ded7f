"""Random-walk bridge line ensembles: exact samplers, Gibbs resampling and diagnostics."""

__version__ = "0.1.0"

from .hamiltonian import Hamiltonian, make_hamiltonian, parse_hamiltonian, sigma_p, tilt_to_mean, validate
from .bridge import BridgeSpec, log_partition, sample_bridge, sample_bridges
from .avoid import (AvoidanceSpec, DiscreteEnsemble, MetropolisChain, coupled_sample, estimate_acceptance,
                    exact_acceptance, maximal_config, sample_avoiding)

__all__ = [
    "__version__", "Hamiltonian", "make_hamiltonian", "parse_hamiltonian", "sigma_p", "tilt_to_mean",
    "validate", "BridgeSpec", "log_partition", "sample_bridge", "sample_bridges", "AvoidanceSpec",
    "DiscreteEnsemble", "MetropolisChain", "coupled_sample", "estimate_acceptance", "exact_acceptance",
    "maximal_config", "sample_avoiding",
]
